//! Synthetic datasets with known class structure in their frame statistics.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::io::{write_feature_file, write_manifest};
use crate::model::{DatasetManifest, FeatureMatrix, LabelSpace, VideoRecord};
use crate::sampling::linspace_indices;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    /// Identical means, class-specific temporal variance.
    Variance,
    /// Class-specific means buried in heavy per-frame noise.
    Mean,
    /// Clean class clusters with 40% of frames drawn from another class.
    Vote,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(SynthKind::Variance),
            "mean" => Ok(SynthKind::Mean),
            "vote" => Ok(SynthKind::Vote),
            other => Err(Error::InvalidParameter(format!(
                "unknown dataset kind `{other}` (expected variance, mean or vote)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub videos_per_class: usize,
    pub frames: usize,
    pub dim: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            classes: 5,
            videos_per_class: 10,
            frames: 60,
            dim: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub name: String,
    pub label_space: LabelSpace,
    pub ids: Vec<String>,
    pub classes: Vec<String>,
    pub features: Vec<FeatureMatrix>,
}

impl SynthDataset {
    /// In-memory manifest; feature paths point at `features/<id>.safv`.
    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            name: self.name.clone(),
            dim: self.features.first().map(FeatureMatrix::cols),
            label_space: self.label_space.clone(),
            videos: self
                .ids
                .iter()
                .zip(&self.classes)
                .zip(&self.features)
                .map(|((id, class), x)| VideoRecord {
                    id: id.clone(),
                    class: class.clone(),
                    total_frames: x.rows(),
                    feature_path: PathBuf::from(format!("features/{id}.safv")),
                    fps: None,
                })
                .collect(),
            base_dir: PathBuf::new(),
        }
    }

    /// Writes `manifest.json` and the feature files under `dir`, returning
    /// the manifest path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let features_dir = dir.join("features");
        std::fs::create_dir_all(&features_dir).map_err(|e| Error::io(&features_dir, e))?;
        let mut manifest = self.manifest();
        manifest.base_dir = dir.to_path_buf();
        for (v, x) in manifest.videos.iter().zip(&self.features) {
            write_feature_file(manifest.feature_path(v), x)?;
        }
        let path = dir.join("manifest.json");
        write_manifest(&path, &manifest)?;
        Ok(path)
    }
}

fn class_name(c: usize) -> String {
    format!("class{c:02}")
}

/// Dimensions `[start, end)` owned by class `c`.
fn block(c: usize, classes: usize, dim: usize) -> std::ops::Range<usize> {
    let width = (dim / classes).max(1);
    let start = (c * width) % dim;
    start..(start + width).min(dim)
}

fn check(spec: &SynthSpec) -> Result<()> {
    if spec.classes < 2 || spec.videos_per_class == 0 || spec.frames == 0 || spec.dim == 0 {
        return Err(Error::InvalidParameter(format!(
            "synthetic dataset needs at least 2 classes and non-empty videos, got {spec:?}"
        )));
    }
    Ok(())
}

pub fn generate(kind: SynthKind, spec: &SynthSpec) -> Result<SynthDataset> {
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let label_space = LabelSpace::new((0..spec.classes).map(class_name))?;
    let mut ids = Vec::new();
    let mut classes = Vec::new();
    let mut features = Vec::new();
    let center = linspace_indices(spec.frames, 1)?.indices[0] - 1;

    for c in 0..spec.classes {
        for v in 0..spec.videos_per_class {
            let mut x = Array2::<f32>::zeros((spec.frames, spec.dim));
            match kind {
                SynthKind::Variance => {
                    let sd: Vec<f64> = (0..spec.dim)
                        .map(|j| {
                            if block(c, spec.classes, spec.dim).contains(&j) {
                                3.0
                            } else {
                                1.0
                            }
                        })
                        .collect();
                    let mu: Vec<f64> = (0..spec.dim)
                        .map(|_| 10.0 + 0.5 * std_normal.sample(&mut rng))
                        .collect();
                    for f in 0..spec.frames {
                        for j in 0..spec.dim {
                            x[[f, j]] = (mu[j] + sd[j] * std_normal.sample(&mut rng)) as f32;
                        }
                    }
                }
                SynthKind::Mean => {
                    let mu: Vec<f64> = (0..spec.dim)
                        .map(|j| {
                            let lift = if block(c, spec.classes, spec.dim).contains(&j) {
                                0.6
                            } else {
                                0.0
                            };
                            5.0 + lift + 0.05 * std_normal.sample(&mut rng)
                        })
                        .collect();
                    for f in 0..spec.frames {
                        for j in 0..spec.dim {
                            x[[f, j]] = (mu[j] + 2.0 * std_normal.sample(&mut rng)) as f32;
                        }
                    }
                }
                SynthKind::Vote => {
                    let noisy = vote_noise_mask(&mut rng, spec.frames, center, v % 2 == 1)?;
                    let other = (c + 1) % spec.classes;
                    for f in 0..spec.frames {
                        let look = if noisy[f] { other } else { c };
                        let lifted = block(look, spec.classes, spec.dim);
                        for j in 0..spec.dim {
                            let mu = if lifted.contains(&j) { 5.0 } else { 1.0 };
                            x[[f, j]] = (mu + 0.5 * std_normal.sample(&mut rng)) as f32;
                        }
                    }
                }
            }
            ids.push(format!("{}_{v:02}", class_name(c)));
            classes.push(class_name(c));
            features.push(FeatureMatrix::new(x, false)?);
        }
    }
    let name = match kind {
        SynthKind::Variance => "synthetic-variance",
        SynthKind::Mean => "synthetic-mean",
        SynthKind::Vote => "synthetic-vote",
    };
    Ok(SynthDataset {
        name: name.into(),
        label_space,
        ids,
        classes,
        features,
    })
}

/// Marks 40% of the frames (rounded) as noise. Exactly 4 of the 10 linearly
/// spaced frames are noisy; the center frame is noisy iff `noisy_center`.
fn vote_noise_mask<R: Rng>(
    rng: &mut R,
    frames: usize,
    center: usize,
    noisy_center: bool,
) -> Result<Vec<bool>> {
    if frames < 12 {
        return Err(Error::InvalidParameter(format!(
            "vote dataset needs at least 12 frames per video, got {frames}"
        )));
    }
    let spaced: Vec<usize> = linspace_indices(frames, 10)?
        .indices
        .iter()
        .map(|i| i - 1)
        .collect();
    let mut noisy = vec![false; frames];
    let center_spaced = spaced.contains(&center);
    // noisy picks among the spaced frames, leaving the center to `noisy_center`
    let candidates: Vec<usize> = spaced.iter().copied().filter(|&i| i != center).collect();
    let from_spaced = if center_spaced && noisy_center { 3 } else { 4 };
    for k in sample(rng, candidates.len(), from_spaced) {
        noisy[candidates[k]] = true;
    }
    if noisy_center {
        noisy[center] = true;
    }
    let target = (frames * 2 + 2) / 5;
    let rest: Vec<usize> = (0..frames)
        .filter(|i| !spaced.contains(i) && *i != center)
        .collect();
    let have = noisy.iter().filter(|&&b| b).count();
    let extra = target.saturating_sub(have).min(rest.len());
    for k in sample(rng, rest.len(), extra) {
        noisy[rest[k]] = true;
    }
    Ok(noisy)
}
