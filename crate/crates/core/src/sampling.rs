//! Frame selection: which stored frames of a video feed the aggregation.
//!
//! Random draws use ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`) and a
//! partial Fisher-Yates shuffle of `1..=total`; the first `n` slots are kept
//! and sorted. The same `(total, n, seed)` always yields the same indices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Linear,
    Random,
}

impl std::str::FromStr for SamplingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(SamplingMode::Linear),
            "random" => Ok(SamplingMode::Random),
            other => Err(Error::InvalidParameter(format!(
                "unknown sampling mode `{other}` (expected linear or random)"
            ))),
        }
    }
}

/// Sorted, 1-based frame indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSelection {
    pub indices: Vec<usize>,
    pub mode: SamplingMode,
    pub seed: Option<u64>,
}

fn check_request(total: usize, n: usize) -> Result<()> {
    if n == 0 || n > total {
        return Err(Error::FrameCount {
            requested: n,
            total,
        });
    }
    Ok(())
}

/// `n` frames evenly spread over `1..=total`, rounding half up.
///
/// A single frame is the center one, `round((1 + total) / 2)`.
pub fn linspace_indices(total: usize, n: usize) -> Result<FrameSelection> {
    check_request(total, n)?;
    let indices = if n == 1 {
        // round((1 + total) / 2) with halves rounded up
        vec![(total + 2) / 2]
    } else {
        let den = n - 1;
        let mut out: Vec<usize> = Vec::with_capacity(n);
        for j in 0..n {
            let num = j * (total - 1);
            // 1 + round(num / den), exact in integers
            let mut idx = 1 + (2 * num + den) / (2 * den);
            if let Some(&prev) = out.last() {
                if idx <= prev {
                    idx = prev + 1;
                }
            }
            out.push(idx);
        }
        out
    };
    Ok(FrameSelection {
        indices,
        mode: SamplingMode::Linear,
        seed: None,
    })
}

/// `n` distinct frames drawn uniformly without replacement.
pub fn random_indices(total: usize, n: usize, seed: u64) -> Result<FrameSelection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sel = random_indices_with(&mut rng, total, n)?;
    sel.seed = Some(seed);
    Ok(sel)
}

/// Same draw as [`random_indices`] but continuing an existing generator, so
/// several videos can share one seeded stream.
pub fn random_indices_with<R: Rng + ?Sized>(
    rng: &mut R,
    total: usize,
    n: usize,
) -> Result<FrameSelection> {
    check_request(total, n)?;
    let mut pool: Vec<usize> = (1..=total).collect();
    for i in 0..n {
        let j = rng.random_range(i..total);
        pool.swap(i, j);
    }
    pool.truncate(n);
    pool.sort_unstable();
    Ok(FrameSelection {
        indices: pool,
        mode: SamplingMode::Random,
        seed: None,
    })
}

pub fn select_frames(
    total: usize,
    n: usize,
    mode: SamplingMode,
    seed: u64,
) -> Result<FrameSelection> {
    match mode {
        SamplingMode::Linear => linspace_indices(total, n),
        SamplingMode::Random => random_indices(total, n, seed),
    }
}
