use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::aggregate_combo;
use crate::error::{Error, Result};
use crate::evaluation::lovo::lovo_evaluate;
use crate::model::{DatasetManifest, FeatureMatrix, Measure, Normalization};
use crate::sampling::random_indices_with;
use crate::svm::SvmParams;

pub const DEFAULT_TRIALS: usize = 18;
pub const DEFAULT_N_LIST: [usize; 11] = [1, 2, 3, 5, 10, 15, 20, 30, 40, 50, 60];

/// Accuracy distribution over trials for one frame count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialPoint {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation over trials.
    pub std: f64,
    pub accuracies: Vec<f64>,
}

impl TrialPoint {
    fn from_accuracies(n: usize, accuracies: Vec<f64>) -> Self {
        let t = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / t;
        let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / t;
        let min = accuracies.iter().copied().fold(f64::INFINITY, f64::min);
        let max = accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            n,
            mean,
            min,
            max,
            std: var.sqrt(),
            accuracies,
        }
    }

    pub fn spread(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialCurve {
    pub n_values: Vec<usize>,
    pub points: Vec<TrialPoint>,
    pub trials: usize,
    pub seed: u64,
}

impl TrialCurve {
    pub fn point(&self, n: usize) -> Option<&TrialPoint> {
        self.points.iter().find(|p| p.n == n)
    }

    /// Columnar `n,mean,min,max,std` table.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "mean", "min", "max", "std"])?;
        for p in &self.points {
            w.write_record([
                p.n.to_string(),
                p.mean.to_string(),
                p.min.to_string(),
                p.max.to_string(),
                p.std.to_string(),
            ])?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Accuracy as a function of the number of randomly drawn frames.
///
/// Trial `t` draws every video's frames, in manifest order, from one
/// ChaCha8 stream seeded with `base_seed + t`. Each selection is mean-pooled,
/// L2-normalized and evaluated with LOVO. Videos shorter than `n` use all
/// their frames.
pub fn frames_vs_accuracy(
    manifest: &DatasetManifest,
    features: &[FeatureMatrix],
    n_list: &[usize],
    trials: usize,
    base_seed: u64,
    params: &SvmParams,
) -> Result<TrialCurve> {
    if n_list.is_empty() {
        return Err(Error::Empty("n_list"));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    if let Some(&0) = n_list.iter().min() {
        return Err(Error::InvalidParameter(
            "frame counts must be at least 1".into(),
        ));
    }
    if features.len() != manifest.videos.len() {
        return Err(Error::InvalidParameter(format!(
            "{} videos but {} feature matrices",
            manifest.videos.len(),
            features.len()
        )));
    }
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    for (v, x) in manifest.videos.iter().zip(features) {
        if x.rows() < max_n {
            log::warn!(
                "video `{}` has {} frames; capping n at that",
                v.id,
                x.rows()
            );
        }
    }

    let points = n_list
        .iter()
        .map(|&n| {
            let accuracies = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(t as u64));
                    let descriptors = features
                        .iter()
                        .map(|x| {
                            let sel = random_indices_with(&mut rng, x.rows(), n.min(x.rows()))?;
                            aggregate_combo(
                                &x.select(&sel)?,
                                &[Measure::Mean],
                                Normalization::PerBlock,
                            )
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(lovo_evaluate(manifest, &descriptors, params)?.overall_accuracy)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TrialPoint::from_accuracies(n, accuracies))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TrialCurve {
        n_values: n_list.to_vec(),
        points,
        trials,
        seed: base_seed,
    })
}
