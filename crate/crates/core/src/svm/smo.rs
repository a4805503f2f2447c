//! Sequential minimal optimization for the C-SVC dual
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a   s.t.  y^T a = 0,  0 <= a_i <= C,   Q_ij = y_i y_j K_ij
//! ```
//!
//! Working pairs are chosen with second-order information (maximal violating
//! `i`, then the `j` with the largest guaranteed objective decrease). No
//! shrinking; callers hand in a kernel lookup, usually backed by a
//! precomputed Gram matrix.

const TAU: f64 = 1e-12;

#[derive(Clone, Debug)]
pub(crate) struct Solution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub objective: f64,
    /// Final maximal KKT violation `m(a) - M(a)`.
    pub gap: f64,
    pub iterations: usize,
}

pub(crate) fn solve<K>(kernel: K, y: &[f64], c: f64, eps: f64, max_iter: usize) -> Solution
where
    K: Fn(usize, usize) -> f64,
{
    let l = y.len();
    let diag: Vec<f64> = (0..l).map(|i| kernel(i, i)).collect();
    let mut alpha = vec![0.0; l];
    let mut grad = vec![-1.0; l];
    let mut q_i = vec![0.0; l];
    let mut q_j = vec![0.0; l];
    let mut iterations = 0;
    let mut gap;

    let fill_row = |row: &mut [f64], i: usize| {
        for (t, q) in row.iter_mut().enumerate() {
            *q = y[i] * y[t] * kernel(i, t);
        }
    };

    loop {
        // pick i: maximal -y_t G_t over I_up
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            let up = if y[t] > 0.0 {
                alpha[t] < c
            } else {
                alpha[t] > 0.0
            };
            if up && -y[t] * grad[t] >= g_max {
                g_max = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            gap = 0.0;
            break;
        };
        fill_row(&mut q_i, i);

        // pick j over I_low by second-order decrease
        let mut g_max2 = f64::NEG_INFINITY;
        let mut obj_min = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..l {
            let low = if y[t] > 0.0 {
                alpha[t] > 0.0
            } else {
                alpha[t] < c
            };
            if !low {
                continue;
            }
            let m_t = y[t] * grad[t];
            if m_t >= g_max2 {
                g_max2 = m_t;
            }
            let grad_diff = g_max + m_t;
            if grad_diff > 0.0 {
                let mut quad = diag[i] + diag[t] - 2.0 * y[i] * y[t] * q_i[t];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = Some(t);
                }
            }
        }
        gap = g_max + g_max2;
        let j = match j_sel {
            Some(j) if gap >= eps => j,
            _ => break,
        };
        if iterations >= max_iter {
            log::warn!("SMO stopped after {iterations} iterations with KKT gap {gap:.3e}");
            break;
        }
        iterations += 1;
        fill_row(&mut q_j, j);

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = diag[i] + diag[j] + 2.0 * q_i[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - 2.0 * q_i[j];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..l {
            grad[t] += q_i[t] * d_i + q_j[t] * d_j;
        }
    }

    let rho = compute_rho(&alpha, &grad, y, c);
    let objective = alpha
        .iter()
        .zip(&grad)
        .map(|(a, g)| a * (g - 1.0))
        .sum::<f64>()
        / 2.0;
    Solution {
        alpha,
        rho,
        objective,
        gap,
        iterations,
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}
