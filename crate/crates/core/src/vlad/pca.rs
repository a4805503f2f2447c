use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Eigenvalues below this fraction of the largest one count as zero when
/// determining the rank of the sample covariance.
const RANK_TOL: f64 = 1e-10;
/// Whitening divisors are floored at this fraction of the largest eigenvalue.
const SCALE_FLOOR: f64 = 1e-8;

/// Stored whitening projection `x -> diag(1 / scales) * components * (x - mean)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `d_prime x dim`, orthonormal rows ordered by decreasing variance.
    pub components: Array2<f64>,
    pub scales: Array1<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn d_prime(&self) -> usize {
        self.components.nrows()
    }

    pub fn project(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let centered = &x - &self.mean;
        Ok(self.components.dot(&centered) / &self.scales)
    }

    /// Projects every row of `samples`.
    pub fn project_rows(&self, samples: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if samples.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: samples.ncols(),
            });
        }
        let centered = &samples - &self.mean.view().insert_axis(Axis(0));
        let mut out = centered.dot(&self.components.t());
        out /= &self.scales.view().insert_axis(Axis(0));
        Ok(out)
    }
}

/// Fits a whitening PCA keeping `d_prime` directions.
///
/// Covariance uses the population divisor, so the projected training set has
/// unit variance per output dimension. When there are fewer samples than
/// dimensions the eigenproblem is solved on the smaller Gram matrix.
pub fn fit_pca(samples: ArrayView2<'_, f64>, d_prime: usize) -> Result<PcaModel> {
    let (n, dim) = samples.dim();
    if d_prime == 0 || d_prime > dim {
        return Err(Error::InvalidParameter(format!(
            "d_prime must be in 1..={dim}, got {d_prime}"
        )));
    }
    if n <= d_prime {
        return Err(Error::InvalidParameter(format!(
            "PCA needs more samples than d_prime ({n} <= {d_prime})"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite PCA sample".into()));
    }
    let mean = samples.mean_axis(Axis(0)).expect("non-empty samples");
    let centered = &samples - &mean.view().insert_axis(Axis(0));
    let nf = n as f64;

    let (eigenvalues, vectors) = if n > dim {
        let cov = centered.t().dot(&centered) / nf;
        sym_eigen(&cov)
    } else {
        let gram = centered.dot(&centered.t()) / nf;
        let (vals, u) = sym_eigen(&gram);
        // v = Xc^T u / sqrt(n * lambda); computed below for kept directions only
        let vecs = centered.t().dot(&u);
        (vals, vecs)
    };

    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]).then(a.cmp(&b)));
    let largest = eigenvalues[order[0]].max(0.0);
    let rank = order
        .iter()
        .take_while(|&&i| largest > 0.0 && eigenvalues[i] > RANK_TOL * largest)
        .count();
    if rank < d_prime {
        return Err(Error::RankDeficient {
            rank,
            requested: d_prime,
        });
    }

    let mut components = Array2::<f64>::zeros((d_prime, dim));
    let mut scales = Array1::<f64>::zeros(d_prime);
    for (row, &i) in order.iter().take(d_prime).enumerate() {
        let mut v = vectors.column(i).to_owned();
        if n <= dim {
            v /= (nf * eigenvalues[i]).sqrt();
        }
        components.row_mut(row).assign(&v);
        scales[row] = eigenvalues[i].max(0.0).sqrt().max(SCALE_FLOOR * largest);
    }
    orthonormalize_rows(&mut components);
    fix_signs(&mut components);

    Ok(PcaModel {
        mean,
        components,
        scales,
    })
}

fn sym_eigen(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = m.nrows();
    let mat = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
    let eig = SymmetricEigen::new(mat);
    let vals = eig.eigenvalues.iter().copied().collect();
    let vecs = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)]);
    (vals, vecs)
}

/// Two passes of modified Gram-Schmidt over the rows.
fn orthonormalize_rows(rows: &mut Array2<f64>) {
    for _ in 0..2 {
        for i in 0..rows.nrows() {
            for j in 0..i {
                let proj = rows.row(i).dot(&rows.row(j));
                let rj = rows.row(j).to_owned();
                rows.row_mut(i).scaled_add(-proj, &rj);
            }
            let norm = rows.row(i).dot(&rows.row(i)).sqrt();
            rows.row_mut(i).mapv_inplace(|v| v / norm);
        }
    }
}

/// Makes the largest-magnitude entry of every component positive.
fn fix_signs(rows: &mut Array2<f64>) {
    for mut row in rows.rows_mut() {
        let pivot = row
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            row.mapv_inplace(|v| -v);
        }
    }
}
