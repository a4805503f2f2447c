//! Temporally orderless statistics of a feature matrix, computed per
//! dimension over frames: mean, standard deviation, skewness, kurtosis and max.
//!
//! All moments are population moments (divisor `M`). Kurtosis is the raw
//! fourth standardized moment. Where a dimension has zero spread, skewness and
//! kurtosis are reported as zero.

use rand::SeedableRng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{descriptor_concat, FeatureMatrix, Measure, Normalization, VideoDescriptor};
use crate::sampling::{linspace_indices, random_indices_with, SamplingMode};

/// One-pass accumulator of the first four central moments and the maximum.
///
/// Uses the incremental central-moment updates (Welford, extended to third and
/// fourth order), so large common offsets do not cancel catastrophically.
#[derive(Clone, Copy, Debug)]
pub struct MomentAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
    max: f64,
}

impl Default for MomentAccumulator {
    fn default() -> Self {
        Self {
            n: 0,
            mean: 0.0,
            m2: 0.0,
            m3: 0.0,
            m4: 0.0,
            max: f64::NEG_INFINITY,
        }
    }
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
        self.mean += delta_n;
        if x > self.max {
            self.max = x;
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sd(&self) -> f64 {
        (self.m2 / self.n as f64).sqrt()
    }

    pub fn skew(&self) -> f64 {
        if self.m2 > 0.0 {
            (self.n as f64).sqrt() * self.m3 / self.m2.powf(1.5)
        } else {
            0.0
        }
    }

    pub fn kurt(&self) -> f64 {
        if self.m2 > 0.0 {
            self.n as f64 * self.m4 / (self.m2 * self.m2)
        } else {
            0.0
        }
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

/// All five statistics of a feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSet {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub skew: Vec<f64>,
    pub kurt: Vec<f64>,
    pub max: Vec<f64>,
    /// Number of frames the statistics were computed over.
    pub m: usize,
}

impl MomentSet {
    /// Computes every statistic column by column.
    ///
    /// Each column is sorted before it is streamed through the accumulator, so
    /// the result depends only on the multiset of values in the column and
    /// is bit-identical under any reordering of frames.
    pub fn compute(x: &FeatureMatrix) -> Self {
        let data = x.data();
        let per_col: Vec<MomentAccumulator> = (0..data.ncols())
            .into_par_iter()
            .map(|j| {
                let mut values: Vec<f64> = data.column(j).iter().map(|&v| f64::from(v)).collect();
                values.sort_unstable_by(f64::total_cmp);
                let mut acc = MomentAccumulator::new();
                values.into_iter().for_each(|v| acc.push(v));
                acc
            })
            .collect();
        Self::from_accumulators(&per_col)
    }

    fn from_accumulators(acc: &[MomentAccumulator]) -> Self {
        Self {
            mean: acc.iter().map(MomentAccumulator::mean).collect(),
            sd: acc.iter().map(MomentAccumulator::sd).collect(),
            skew: acc.iter().map(MomentAccumulator::skew).collect(),
            kurt: acc.iter().map(MomentAccumulator::kurt).collect(),
            max: acc.iter().map(MomentAccumulator::max).collect(),
            m: acc.first().map_or(0, |a| a.count() as usize),
        }
    }

    pub fn get(&self, measure: Measure) -> Option<&[f64]> {
        match measure {
            Measure::Mean => Some(&self.mean),
            Measure::Sd => Some(&self.sd),
            Measure::Skew => Some(&self.skew),
            Measure::Kurt => Some(&self.kurt),
            Measure::Max => Some(&self.max),
            Measure::Vlad => None,
        }
    }
}

/// Row-at-a-time accumulator for callers that receive frames one by one.
///
/// Results agree with [`MomentSet::compute`] to rounding, but unlike it they
/// may differ in the last bits when frames arrive in a different order.
#[derive(Clone, Debug)]
pub struct StreamingMoments {
    acc: Vec<MomentAccumulator>,
}

impl StreamingMoments {
    pub fn new(dim: usize) -> Self {
        Self {
            acc: vec![MomentAccumulator::new(); dim],
        }
    }

    pub fn push_row(&mut self, row: &[f32]) -> Result<()> {
        if row.len() != self.acc.len() {
            return Err(Error::DimensionMismatch {
                expected: self.acc.len(),
                actual: row.len(),
            });
        }
        for (a, &v) in self.acc.iter_mut().zip(row) {
            a.push(f64::from(v));
        }
        Ok(())
    }

    pub fn finish(&self) -> Result<MomentSet> {
        if self.acc.first().is_none_or(|a| a.count() == 0) {
            return Err(Error::Empty("no frames pushed"));
        }
        Ok(MomentSet::from_accumulators(&self.acc))
    }
}

fn check_frames(x: &FeatureMatrix, measure: Measure) -> Result<()> {
    if measure == Measure::Vlad {
        return Err(Error::InvalidParameter(
            "vlad is not a moment; encode it with the vlad module".into(),
        ));
    }
    if measure.needs_two_frames() && x.rows() < 2 {
        return Err(Error::InsufficientFrames {
            measure,
            frames: x.rows(),
        });
    }
    Ok(())
}

/// One statistic, one value per feature dimension.
pub fn aggregate(x: &FeatureMatrix, measure: Measure) -> Result<Vec<f64>> {
    check_frames(x, measure)?;
    let set = MomentSet::compute(x);
    Ok(set.get(measure).expect("moment measure").to_vec())
}

/// Concatenated descriptor for a set of measures, normalized as requested.
pub fn aggregate_combo(
    x: &FeatureMatrix,
    measures: &[Measure],
    normalization: Normalization,
) -> Result<VideoDescriptor> {
    if measures.is_empty() {
        return Err(Error::Empty("measure list"));
    }
    for &m in measures {
        check_frames(x, m)?;
    }
    let set = MomentSet::compute(x);
    let blocks = measures
        .iter()
        .map(|&m| (m, set.get(m).expect("moment measure").to_vec()))
        .collect();
    let mut descriptor = descriptor_concat(blocks)?;
    descriptor.normalize(normalization);
    Ok(descriptor)
}

/// Descriptors for a list of videos. With `frames = Some((n, mode, seed))`
/// each video is first cut down to `n` selected frames, or all of its frames
/// if it is shorter. Random draws for every video come from one stream seeded
/// with `seed`, in input order.
pub fn aggregate_videos(
    features: &[FeatureMatrix],
    measures: &[Measure],
    normalization: Normalization,
    frames: Option<(usize, SamplingMode, u64)>,
) -> Result<Vec<VideoDescriptor>> {
    let Some((n, mode, seed)) = frames else {
        return features
            .par_iter()
            .map(|x| aggregate_combo(x, measures, normalization))
            .collect();
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let selections = features
        .iter()
        .map(|x| {
            let n = n.min(x.rows());
            match mode {
                SamplingMode::Linear => linspace_indices(x.rows(), n),
                SamplingMode::Random => random_indices_with(&mut rng, x.rows(), n),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    features
        .par_iter()
        .zip(selections)
        .map(|(x, sel)| aggregate_combo(&x.select(&sel)?, measures, normalization))
        .collect()
}
