//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use dynscene::svm::{BinarySvmModel, KernelKind};
use dynscene::FeatureMatrix;
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Population statistics of one column by the textbook two-pass formulas.
#[derive(Clone, Copy, Debug)]
pub struct NaiveMoments {
    pub mean: f64,
    pub sd: f64,
    pub skew: f64,
    pub kurt: f64,
    pub max: f64,
}

pub fn naive_moments(xs: &[f64]) -> NaiveMoments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let central = |p: i32| xs.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    let m2 = central(2);
    let (skew, kurt) = if xs.iter().all(|&x| x == xs[0]) {
        (0.0, 0.0)
    } else {
        (central(3) / m2.powf(1.5), central(4) / (m2 * m2))
    };
    NaiveMoments {
        mean,
        sd: m2.sqrt(),
        skew,
        kurt,
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn column(x: &FeatureMatrix, j: usize) -> Vec<f64> {
    x.data().column(j).iter().map(|&v| f64::from(v)).collect()
}

/// `|a - b| <= tol * max(|b|, 1)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Random matrix mixing dense, sparse (ReLU-like) and constant columns.
pub fn random_features(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> FeatureMatrix {
    let style: Vec<u8> = (0..cols).map(|_| rng.random_range(0..4)).collect();
    let data = Array2::from_shape_fn((rows, cols), |(_, j)| match style[j] {
        0 => rng.random_range(0.0f32..10.0),
        1 => rng.random_range(-3.0f32..3.0).max(0.0),
        2 => (rng.random::<f32>() * 4.0).exp(),
        _ => 1.5,
    });
    FeatureMatrix::new(data, false).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// VLAD by explicit loops: nearest center by scanning every center (lowest
/// index wins ties), residuals summed per center.
pub fn vlad_reference(
    centers: ArrayView2<'_, f64>,
    frames: ArrayView2<'_, f64>,
    power_l2: bool,
) -> Vec<f64> {
    let (k, d) = centers.dim();
    let mut v = vec![0.0; k * d];
    for i in 0..frames.nrows() {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for c in 0..k {
            let mut dist = 0.0;
            for j in 0..d {
                let diff = frames[[i, j]] - centers[[c, j]];
                dist += diff * diff;
            }
            if dist < best_dist {
                best_dist = dist;
                best = c;
            }
        }
        for j in 0..d {
            v[best * d + j] += frames[[i, j]] - centers[[best, j]];
        }
    }
    if power_l2 {
        for x in &mut v {
            *x = if *x < 0.0 { -(-*x).sqrt() } else { x.sqrt() };
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
    v
}

pub fn kernel(kind: KernelKind, a: &[f64], b: &[f64]) -> f64 {
    match kind {
        KernelKind::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        KernelKind::Hik => a.iter().zip(b).map(|(x, y)| x.min(*y)).sum(),
    }
}

pub fn rows(x: ArrayView2<'_, f64>) -> Vec<Vec<f64>> {
    x.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Dual variables recovered from a trained model, indexed like the training set.
pub fn alphas(model: &BinarySvmModel, y: &[f64]) -> Vec<f64> {
    let mut alpha = vec![0.0; y.len()];
    for (&i, &c) in model.sv_indices.iter().zip(&model.coef) {
        alpha[i] = c * y[i];
    }
    alpha
}

/// Checks box and equality constraints and the KKT conditions of the C-SVC
/// dual on the training set, recomputing margins from scratch. Returns the
/// first violation found.
pub fn check_kkt(
    model: &BinarySvmModel,
    x: ArrayView2<'_, f64>,
    y: &[f64],
    tol: f64,
) -> Result<(), String> {
    let c = model.c;
    let alpha = alphas(model, y);
    for (i, &a) in alpha.iter().enumerate() {
        if !(-1e-12..=c * (1.0 + 1e-12)).contains(&a) {
            return Err(format!("alpha[{i}] = {a} outside [0, {c}]"));
        }
    }
    let balance: f64 = alpha.iter().zip(y).map(|(a, y)| a * y).sum();
    if balance.abs() > 1e-9 * c.max(1.0) * y.len() as f64 {
        return Err(format!("sum y alpha = {balance}"));
    }
    let data = rows(x);
    for i in 0..y.len() {
        let f: f64 = (0..y.len())
            .map(|j| alpha[j] * y[j] * kernel(model.kernel, &data[j], &data[i]))
            .sum::<f64>()
            + model.bias;
        let margin = y[i] * f;
        let a = alpha[i];
        let ok = if a <= 0.0 {
            margin >= 1.0 - tol
        } else if a >= c {
            margin <= 1.0 + tol
        } else {
            (margin - 1.0).abs() <= tol
        };
        if !ok {
            return Err(format!("KKT violated at {i}: alpha {a}, margin {margin}"));
        }
    }
    Ok(())
}

/// Dual objective `0.5 a'Qa - sum a` with `Q_ij = y_i y_j K(x_i, x_j)`.
pub fn dual_objective(q: &Array2<f64>, alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * q[[i, j]] * alpha[j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

pub fn q_matrix(kind: KernelKind, x: ArrayView2<'_, f64>, y: &[f64]) -> Array2<f64> {
    let data = rows(x);
    Array2::from_shape_fn((y.len(), y.len()), |(i, j)| {
        y[i] * y[j] * kernel(kind, &data[i], &data[j])
    })
}

/// Euclidean projection onto `{0 <= a <= c, y'a = 0}`: `a = clip(v - t y)`
/// with `t` found by bisection, since `y'clip(v - t y)` is non-increasing in `t`.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |t: f64| -> Vec<f64> {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi - t * yi).clamp(0.0, c))
            .collect()
    };
    let g = |t: f64| -> f64 { at(t).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let span = v.iter().map(|x| x.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Minimum of the dual by accelerated projected gradient.
pub fn qp_oracle(q: &Array2<f64>, y: &[f64], c: f64, iterations: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    // Lipschitz constant bound: largest absolute row sum of Q
    let lip = (0..n)
        .map(|i| q.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let grad: Vec<f64> = (0..n)
            .map(|i| q.row(i).iter().zip(&z).map(|(qi, zi)| qi * zi).sum::<f64>() - 1.0)
            .collect();
        let step: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi - gi / lip).collect();
        let next = project(&step, y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next
            .iter()
            .zip(&a)
            .map(|(n1, a0)| n1 + (t - 1.0) / t_next * (n1 - a0))
            .collect();
        a = next;
        t = t_next;
    }
    let obj = dual_objective(q, &a);
    (a, obj)
}

/// Linearly separable two-class problem: points at distance at least `margin`
/// from a random hyperplane, labelled by side.
pub fn separable_problem(
    rng: &mut ChaCha8Rng,
    n: usize,
    dim: usize,
    margin: f64,
) -> (Array2<f64>, Vec<f64>) {
    let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let b = rng.random_range(-0.5..0.5);
    let mut x = Array2::zeros((n, dim));
    let mut y = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s = (p.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b) / norm;
        // alternate labels so both classes are present
        let want = if i % 2 == 0 { 1.0 } else { -1.0 };
        if s * want >= margin {
            for (j, v) in p.iter().enumerate() {
                x[[i, j]] = *v;
            }
            y.push(want);
            i += 1;
        }
    }
    (x, y)
}

/// Byte strings every feature-file reader must refuse, with a label each.
pub fn malformed_feature_files() -> Vec<(String, Vec<u8>)> {
    let x = FeatureMatrix::from_rows(&[vec![1.0f32, 2.0, 3.0], vec![4.0, 5.0, 6.0]], true).unwrap();
    let good = dynscene::io::encode_feature_matrix(&x).unwrap();
    let mut out = Vec::new();
    let mut push = |name: &str, bytes: Vec<u8>| out.push((name.to_string(), bytes));

    for i in 0..4 {
        let mut b = good.clone();
        b[i] ^= 0x20;
        push(&format!("magic byte {i}"), b);
    }
    push("empty", vec![]);
    for len in [1, 4, 8, 12, 16, 19, 20, 23, good.len() - 4, good.len() - 1] {
        push(&format!("truncated to {len}"), good[..len].to_vec());
    }
    let mut b = good.clone();
    b.push(0);
    push("trailing byte", b);
    let mut b = good.clone();
    b.extend_from_slice(&0f32.to_le_bytes());
    push("trailing value", b);
    for version in [0u32, 2, u32::MAX] {
        let mut b = good.clone();
        b[4..8].copy_from_slice(&version.to_le_bytes());
        push(&format!("version {version}"), b);
    }
    for (name, at, v) in [
        ("rows 0", 8, 0u32),
        ("cols 0", 12, 0),
        ("rows too many", 8, 3),
        ("cols too many", 12, 4),
    ] {
        let mut b = good.clone();
        b[at..at + 4].copy_from_slice(&v.to_le_bytes());
        push(name, b);
    }
    let mut b = good.clone();
    b[16..20].copy_from_slice(&2u32.to_le_bytes());
    push("reserved flag", b);
    for (name, v) in [
        ("NaN", f32::NAN),
        ("+inf", f32::INFINITY),
        ("-inf", f32::NEG_INFINITY),
        ("negative post-ReLU", -1.0),
    ] {
        for slot in [0usize, 5] {
            let mut b = good.clone();
            let at = 20 + 4 * slot;
            b[at..at + 4].copy_from_slice(&v.to_le_bytes());
            push(&format!("{name} at {slot}"), b);
        }
    }
    out
}
