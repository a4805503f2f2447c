use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the relative inertia decrease falls below this.
    pub rel_tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iter: 100,
            rel_tol: 1e-4,
        }
    }
}

/// Learned cluster centers.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    /// `k x d` matrix, one center per row.
    pub centers: Array2<f64>,
    /// Within-cluster sum of squared distances for the final centers.
    pub inertia: f64,
    /// Inertia after the seeding and after every Lloyd update.
    pub history: Vec<f64>,
}

impl Codebook {
    pub fn k(&self) -> usize {
        self.centers.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    /// Index of the nearest center, lowest index on ties.
    pub fn assign(&self, x: ArrayView1<'_, f64>) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(nearest(self.centers.view(), x).0)
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact linear scan; a strict comparison keeps the lowest index on ties.
fn nearest(centers: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.rows().into_iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn assign_all(
    points: ArrayView2<'_, f64>,
    centers: ArrayView2<'_, f64>,
) -> (Vec<usize>, Vec<f64>, f64) {
    let pairs: Vec<(usize, f64)> = (0..points.nrows())
        .into_par_iter()
        .map(|i| nearest(centers, points.row(i)))
        .collect();
    let (labels, dists): (Vec<usize>, Vec<f64>) = pairs.into_iter().unzip();
    // sequential sum keeps the total independent of thread scheduling
    let inertia = dists.iter().sum();
    (labels, dists, inertia)
}

fn seed_centers(
    points: ArrayView2<'_, f64>,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Array2<f64>> {
    let n = points.nrows();
    let mut centers = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut d2: Vec<f64> = points
        .rows()
        .into_iter()
        .map(|p| sq_dist(p, points.row(first)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            return Err(Error::TooFewPoints { needed: k, got: c });
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let pick = pick.expect("positive total weight");
        centers.row_mut(c).assign(&points.row(pick));
        for (i, p) in points.rows().into_iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, points.row(pick)));
        }
    }
    Ok(centers)
}

fn update_centers(points: ArrayView2<'_, f64>, labels: &[usize], centers: &mut Array2<f64>) {
    let k = centers.nrows();
    let mut sums = Array2::<f64>::zeros(centers.raw_dim());
    let mut counts = vec![0usize; k];
    for (p, &l) in points.rows().into_iter().zip(labels) {
        sums.row_mut(l).scaled_add(1.0, &p);
        counts[l] += 1;
    }
    let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let mean = &sums.row(c) / count as f64;
            centers.row_mut(c).assign(&mean);
        }
    }
    if empty.is_empty() {
        return;
    }
    // re-seed each empty cluster at the point farthest from its own center
    let mut far: Vec<f64> = points
        .rows()
        .into_iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, centers.row(l)))
        .collect();
    for c in empty {
        let (idx, _) = far
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| {
                if d > best.1 {
                    (i, d)
                } else {
                    best
                }
            });
        centers.row_mut(c).assign(&points.row(idx));
        far[idx] = 0.0;
    }
}

/// K-Means++ seeding followed by Lloyd iterations.
pub fn kmeanspp_fit(points: ArrayView2<'_, f64>, params: &KMeansParams) -> Result<Codebook> {
    let n = points.nrows();
    if params.k < 2 {
        return Err(Error::InvalidParameter(format!(
            "k must be at least 2, got {}",
            params.k
        )));
    }
    if n < params.k {
        return Err(Error::TooFewPoints {
            needed: params.k,
            got: n,
        });
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite k-means input".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centers = seed_centers(points, params.k, &mut rng)?;
    let (mut labels, _, mut inertia) = assign_all(points, centers.view());
    let mut history = vec![inertia];

    for _ in 0..params.max_iter {
        if inertia == 0.0 {
            break;
        }
        update_centers(points, &labels, &mut centers);
        let (next_labels, _, next_inertia) = assign_all(points, centers.view());
        debug_assert!(
            next_inertia <= inertia * (1.0 + 1e-12),
            "Lloyd inertia increased: {inertia} -> {next_inertia}"
        );
        history.push(next_inertia);
        let converged = inertia - next_inertia <= params.rel_tol * inertia;
        labels = next_labels;
        inertia = next_inertia;
        if converged {
            break;
        }
    }

    Ok(Codebook {
        centers,
        inertia,
        history,
    })
}
