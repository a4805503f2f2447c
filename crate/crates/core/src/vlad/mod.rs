//! Vectorial pooling: whitening PCA, a K-Means++ codebook and VLAD residual
//! encoding of the reduced frame descriptors.

mod kmeans;
mod pca;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use kmeans::{kmeanspp_fit, Codebook, KMeansParams};
pub use pca::{fit_pca, PcaModel};

use crate::error::{Error, Result};
use crate::model::{descriptor_concat, FeatureMatrix, Measure, Normalization, VideoDescriptor};

pub const DEFAULT_K: usize = 32;
pub const DEFAULT_D_PRIME: usize = 128;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VladNormalization {
    /// Residual sums as accumulated.
    Raw,
    /// Signed square root of every entry, then global L2.
    #[default]
    PowerL2,
}

impl std::str::FromStr for VladNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(VladNormalization::Raw),
            "power-l2" => Ok(VladNormalization::PowerL2),
            other => Err(Error::InvalidParameter(format!(
                "unknown VLAD normalization `{other}` (expected raw or power-l2)"
            ))),
        }
    }
}

/// Concatenated residual sums `v_1 || ... || v_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct VladCode {
    pub values: Vec<f64>,
    pub normalized: bool,
}

/// Sums, per center, the residuals of the frames hard-assigned to it.
pub fn vlad_residuals(codebook: &Codebook, frames: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if frames.nrows() == 0 {
        return Err(Error::Empty("no frames to encode"));
    }
    let d = codebook.dim();
    let mut code = vec![0.0; codebook.k() * d];
    for x in frames.rows() {
        let c = codebook.assign(x)?;
        let slot = &mut code[c * d..(c + 1) * d];
        for ((s, xi), ci) in slot.iter_mut().zip(x).zip(codebook.centers.row(c)) {
            *s += xi - ci;
        }
    }
    Ok(code)
}

pub fn vlad_encode(
    codebook: &Codebook,
    frames: ArrayView2<'_, f64>,
    normalization: VladNormalization,
) -> Result<VladCode> {
    let mut values = vlad_residuals(codebook, frames)?;
    if normalization == VladNormalization::PowerL2 {
        values
            .iter_mut()
            .for_each(|v| *v = v.signum() * v.abs().sqrt());
        crate::model::l2_normalize(&mut values);
    }
    Ok(VladCode {
        values,
        normalized: normalization == VladNormalization::PowerL2,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VladParams {
    pub k: usize,
    pub d_prime: usize,
    pub seed: u64,
    pub normalization: VladNormalization,
}

impl Default for VladParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            d_prime: DEFAULT_D_PRIME,
            seed: 0,
            normalization: VladNormalization::PowerL2,
        }
    }
}

/// PCA projection and codebook learned together from a pool of frames.
#[derive(Clone, Debug, PartialEq)]
pub struct VladModel {
    pub pca: PcaModel,
    pub codebook: Codebook,
    pub normalization: VladNormalization,
}

fn stack_rows(videos: &[&FeatureMatrix]) -> Result<Array2<f64>> {
    let first = videos
        .first()
        .ok_or(Error::Empty("no videos for VLAD training"))?;
    let dim = first.cols();
    let rows: usize = videos.iter().map(|v| v.rows()).sum();
    let mut out = Array2::zeros((rows, dim));
    let mut r = 0;
    for v in videos {
        if v.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.cols(),
            });
        }
        for row in v.data().rows() {
            out.row_mut(r).assign(&row.mapv(f64::from));
            r += 1;
        }
    }
    Ok(out)
}

impl VladModel {
    /// Fits PCA on every frame of every video, then clusters the reduced frames.
    pub fn fit(videos: &[&FeatureMatrix], params: &VladParams) -> Result<Self> {
        let samples = stack_rows(videos)?;
        let pca = fit_pca(samples.view(), params.d_prime)?;
        let reduced = pca.project_rows(samples.view())?;
        let codebook = kmeanspp_fit(reduced.view(), &KMeansParams::new(params.k, params.seed))?;
        Ok(Self {
            pca,
            codebook,
            normalization: params.normalization,
        })
    }

    pub fn encode(&self, x: &FeatureMatrix) -> Result<VideoDescriptor> {
        let frames = x.data().mapv(f64::from);
        let reduced = self.pca.project_rows(frames.view())?;
        let code = vlad_encode(&self.codebook, reduced.view(), self.normalization)?;
        let mut d = descriptor_concat(vec![(Measure::Vlad, code.values)])?;
        if code.normalized {
            d.normalization = Normalization::PerBlock;
        }
        Ok(d)
    }

    pub fn code_len(&self) -> usize {
        self.codebook.k() * self.codebook.dim()
    }
}
