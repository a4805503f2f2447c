//! One-vs-rest C-SVC with linear and histogram-intersection kernels.

mod smo;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LabelSpace;

pub const DEFAULT_C: f64 = 1.0;
/// Maximal KKT violation accepted at convergence.
pub const DEFAULT_TOL: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    /// Histogram intersection, `sum_j min(x_j, y_j)`. Negative entries are
    /// used as-is (generalized intersection), which is not guaranteed PSD.
    Hik,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Linear => "linear",
            KernelKind::Hik => "hik",
        }
    }

    #[inline]
    pub fn eval_unchecked(self, x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
        match self {
            KernelKind::Linear => x.dot(&y),
            KernelKind::Hik => x.iter().zip(y).map(|(a, b)| a.min(*b)).sum(),
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(KernelKind::Linear),
            "hik" => Ok(KernelKind::Hik),
            other => Err(Error::InvalidParameter(format!(
                "unknown kernel `{other}` (expected linear or hik)"
            ))),
        }
    }
}

pub fn kernel_eval(
    kind: KernelKind,
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    Ok(kind.eval_unchecked(x, y))
}

/// Dense symmetric kernel matrix over the rows of a data set.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    pub fn compute(kind: KernelKind, data: ArrayView2<'_, f64>) -> Self {
        let n = data.nrows();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| kind.eval_unchecked(data.row(i), data.row(j)))
                    .collect()
            })
            .collect();
        Self {
            n,
            values: rows.into_iter().flatten().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: KernelKind,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl SvmParams {
    pub fn new(kernel: KernelKind, c: f64) -> Self {
        Self {
            kernel,
            c,
            tol: DEFAULT_TOL,
            max_iter: 10_000_000,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Solver outcome kept alongside a trained model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub objective: f64,
    pub kkt_gap: f64,
    pub iterations: usize,
}

/// `f(x) = sum_i coef_i K(sv_i, x) + bias`, with `coef_i = y_i alpha_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinarySvmModel {
    pub support_vectors: Array2<f64>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelKind,
    pub c: f64,
    /// Positions of the support vectors in the training set.
    pub sv_indices: Vec<usize>,
    pub summary: TrainingSummary,
    weights: Option<Array1<f64>>,
}

impl BinarySvmModel {
    pub fn from_parts(
        support_vectors: Array2<f64>,
        coef: Vec<f64>,
        bias: f64,
        kernel: KernelKind,
        c: f64,
        sv_indices: Vec<usize>,
        summary: TrainingSummary,
    ) -> Result<Self> {
        if support_vectors.nrows() != coef.len() {
            return Err(Error::DimensionMismatch {
                expected: support_vectors.nrows(),
                actual: coef.len(),
            });
        }
        let weights = (kernel == KernelKind::Linear).then(|| {
            support_vectors
                .axis_iter(Axis(0))
                .zip(&coef)
                .fold(Array1::zeros(support_vectors.ncols()), |acc, (sv, &a)| {
                    acc + &sv * a
                })
        });
        Ok(Self {
            support_vectors,
            coef,
            bias,
            kernel,
            c,
            sv_indices,
            summary,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.support_vectors.ncols()
    }

    /// Kernel expansion of the decision function.
    pub fn decision_kernel(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.support_vectors
            .axis_iter(Axis(0))
            .zip(&self.coef)
            .map(|(sv, &a)| a * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Decision value; linear models use the collapsed weight vector.
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(match &self.weights {
            Some(w) => w.dot(&x) + self.bias,
            None => self.decision_kernel(x),
        })
    }
}

fn check_finite(data: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in data.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Kernel values for training: a precomputed Gram matrix, or direct
/// evaluation when the data set is too large to tabulate.
#[derive(Clone, Copy)]
pub enum KernelSource<'a> {
    Gram(&'a GramMatrix),
    Direct(KernelKind),
}

impl<'a> KernelSource<'a> {
    /// Tabulates the kernel when `data` has at most [`GRAM_LIMIT`] rows.
    pub fn for_data(
        kind: KernelKind,
        data: ArrayView2<'_, f64>,
        storage: &'a mut Option<GramMatrix>,
    ) -> Self {
        if data.nrows() <= GRAM_LIMIT {
            KernelSource::Gram(storage.insert(GramMatrix::compute(kind, data)))
        } else {
            KernelSource::Direct(kind)
        }
    }
}

/// Largest training set whose Gram matrix is precomputed (128 MiB of f64).
pub const GRAM_LIMIT: usize = 4096;

/// Trains on the subset `idx` of the rows of `data`.
fn train_on_subset(
    data: ArrayView2<'_, f64>,
    kernel: KernelSource<'_>,
    idx: &[usize],
    y: &[f64],
    params: &SvmParams,
) -> Result<BinarySvmModel> {
    if !(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0)) {
        return Err(Error::SingleClass);
    }
    let sol = match kernel {
        KernelSource::Gram(gram) => smo::solve(
            |a, b| gram.get(idx[a], idx[b]),
            y,
            params.c,
            params.tol,
            params.max_iter,
        ),
        KernelSource::Direct(kind) => smo::solve(
            |a, b| kind.eval_unchecked(data.row(idx[a]), data.row(idx[b])),
            y,
            params.c,
            params.tol,
            params.max_iter,
        ),
    };
    let sv: Vec<usize> = (0..idx.len()).filter(|&t| sol.alpha[t] > 0.0).collect();
    let support_vectors = data.select(Axis(0), &sv.iter().map(|&t| idx[t]).collect::<Vec<_>>());
    let coef = sv.iter().map(|&t| y[t] * sol.alpha[t]).collect();
    BinarySvmModel::from_parts(
        support_vectors,
        coef,
        -sol.rho,
        params.kernel,
        params.c,
        sv,
        TrainingSummary {
            objective: sol.objective,
            kkt_gap: sol.gap,
            iterations: sol.iterations,
        },
    )
}

/// Binary C-SVC; labels must be `+1` or `-1`.
pub fn train_binary(
    data: ArrayView2<'_, f64>,
    labels: &[f64],
    params: &SvmParams,
) -> Result<BinarySvmModel> {
    params.check()?;
    if data.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: data.nrows(),
            actual: labels.len(),
        });
    }
    if let Some(bad) = labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
        return Err(Error::InvalidParameter(format!(
            "binary labels must be +1 or -1, got {bad}"
        )));
    }
    check_finite(data)?;
    let mut storage = None;
    let kernel = KernelSource::for_data(params.kernel, data, &mut storage);
    let idx: Vec<usize> = (0..data.nrows()).collect();
    train_on_subset(data, kernel, &idx, labels, params)
}

#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ClassModel {
    Trained(BinarySvmModel),
    /// The class had no training examples; it never wins a prediction.
    Untrained,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OvrSvmModel {
    pub label_space: LabelSpace,
    pub models: Vec<ClassModel>,
    pub kernel: KernelKind,
    pub c: f64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub label: usize,
    /// One value per class, in label-space order.
    pub decision_values: Vec<f64>,
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl OvrSvmModel {
    pub fn decision_values(&self, x: ArrayView1<'_, f64>) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.len(),
            });
        }
        self.models
            .iter()
            .map(|m| match m {
                ClassModel::Trained(b) => b.decision(x),
                ClassModel::Untrained => Ok(f64::NEG_INFINITY),
            })
            .collect()
    }
}

pub fn predict(model: &OvrSvmModel, x: ArrayView1<'_, f64>) -> Result<Prediction> {
    let decision_values = model.decision_values(x)?;
    Ok(Prediction {
        label: argmax(&decision_values),
        decision_values,
    })
}

/// One-vs-rest training over every row of `data`.
pub fn train_ovr(
    data: ArrayView2<'_, f64>,
    labels: &[usize],
    label_space: &LabelSpace,
    params: &SvmParams,
) -> Result<OvrSvmModel> {
    params.check()?;
    if data.nrows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: data.nrows(),
            actual: labels.len(),
        });
    }
    check_finite(data)?;
    let mut storage = None;
    let kernel = KernelSource::for_data(params.kernel, data, &mut storage);
    let idx: Vec<usize> = (0..data.nrows()).collect();
    train_ovr_subset(data, kernel, &idx, labels, label_space, params)
}

/// One-vs-rest training on the rows `idx` of `data`, typically reusing a Gram
/// matrix computed once over all rows. `labels` is indexed like `data`.
pub fn train_ovr_subset(
    data: ArrayView2<'_, f64>,
    kernel: KernelSource<'_>,
    idx: &[usize],
    labels: &[usize],
    label_space: &LabelSpace,
    params: &SvmParams,
) -> Result<OvrSvmModel> {
    params.check()?;
    let n_classes = label_space.len();
    if let Some(&bad) = idx.iter().map(|&i| &labels[i]).find(|&&l| l >= n_classes) {
        return Err(Error::InvalidParameter(format!(
            "label {bad} outside the label space"
        )));
    }
    let mut present = vec![false; n_classes];
    idx.iter().for_each(|&i| present[labels[i]] = true);
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::SingleClass);
    }
    let models = (0..n_classes)
        .into_par_iter()
        .map(|class| {
            if !present[class] {
                log::warn!(
                    "class `{}` has no training examples; it cannot be predicted",
                    label_space.name(class)
                );
                return Ok(ClassModel::Untrained);
            }
            let y: Vec<f64> = idx
                .iter()
                .map(|&i| if labels[i] == class { 1.0 } else { -1.0 })
                .collect();
            train_on_subset(data, kernel, idx, &y, params).map(ClassModel::Trained)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrSvmModel {
        label_space: label_space.clone(),
        models,
        kernel: params.kernel,
        c: params.c,
        dim: data.ncols(),
    })
}
