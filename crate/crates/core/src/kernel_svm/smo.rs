//! Sequential minimal optimization for the soft-margin dual
//!
//! ```text
//! min  ½ αᵀQα − Σα    s.t.  0 ≤ α ≤ C,  yᵀα = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Each iteration picks the maximal violating pair and solves the two-variable
//! subproblem analytically. The gap `max_{I_up} −y∇f − min_{I_low} −y∇f`
//! is the stopping measure.

use super::cache::KernelRows;
use super::KernelSpec;
use crate::dataset::TwoClassView;

const TAU: f64 = 1e-12;

pub(crate) struct SmoOutcome {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gap: f64,
    /// αᵀQα, the squared norm of the weight vector in feature space.
    pub w_norm_sq: f64,
}

pub(crate) fn solve(view: &TwoClassView<'_>, kernel: KernelSpec, c: f64, eps: f64, max_iter: usize) -> SmoOutcome {
    let m = view.len();
    let y = view.targets();
    let mut q = KernelRows::new(view, kernel);
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];

    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    while iterations < max_iter {
        // maximal violating pair
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        let mut j = usize::MAX;
        for t in 0..m {
            if y[t] > 0.0 {
                if !is_upper(alpha[t]) && -grad[t] > gmax {
                    gmax = -grad[t];
                    i = t;
                }
                if !is_lower(alpha[t]) && grad[t] > gmax2 {
                    gmax2 = grad[t];
                    j = t;
                }
            } else {
                if !is_lower(alpha[t]) && grad[t] > gmax {
                    gmax = grad[t];
                    i = t;
                }
                if !is_upper(alpha[t]) && -grad[t] > gmax2 {
                    gmax2 = -grad[t];
                    j = t;
                }
            }
        }
        gap = gmax + gmax2;
        if gap < eps || i == usize::MAX || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;

        let ki = q.row(i);
        let kj = q.row(j);
        let (yi, yj) = (y[i], y[j]);
        let qij = yi * yj * ki[j];
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_ai, old_aj);

        if yi != yj {
            let mut quad = q.diag(i) + q.diag(j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = q.diag(i) + q.diag(j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let dai = ai - old_ai;
        let daj = aj - old_aj;
        for t in 0..m {
            grad[t] += y[t] * (yi * ki[t] * dai + yj * kj[t] * daj);
        }
    }

    // bias from free vectors, or the midpoint of the feasible interval
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..m {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
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
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };

    let sv: Vec<usize> = (0..m).filter(|&t| alpha[t] > 0.0).collect();
    let mut w_norm_sq = 0.0;
    for &s in &sv {
        let ks = q.row(s);
        let inner: f64 = sv.iter().map(|&t| alpha[t] * y[t] * ks[t]).sum();
        w_norm_sq += alpha[s] * y[s] * inner;
    }

    SmoOutcome {
        alpha,
        rho,
        iterations,
        converged,
        gap,
        w_norm_sq,
    }
}
