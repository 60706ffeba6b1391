//! Entropy-regularized transport between two equally weighted ensembles.
//!
//! The optimal coupling has the form `p_ij = u_i exp(-d_ij/λ) v_j`, with
//! `u_i = exp(-1/2 - α_i/λ)` and `v_j = exp(-1/2 - β_j/λ)` for the marginal
//! multipliers `α, β`. Potentials are kept in the log domain because
//! `exp(-d/λ)` underflows long before `λ` is small enough to be interesting.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky_solve, log_sum_exp, Matrix};

/// Largest ensemble the exhaustive permutation oracle accepts.
pub const BRUTEFORCE_MAX: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlan {
    plan: Matrix,
    log_u: Vec<f64>,
    log_v: Vec<f64>,
    cost: Matrix,
    reg: f64,
    iterations: usize,
    converged: bool,
    marginal_violation: f64,
}

impl TransportPlan {
    pub fn plan(&self) -> &Matrix {
        &self.plan
    }

    pub fn cost(&self) -> &Matrix {
        &self.cost
    }

    pub fn reg(&self) -> f64 {
        self.reg
    }

    pub fn log_u(&self) -> &[f64] {
        &self.log_u
    }

    pub fn log_v(&self) -> &[f64] {
        &self.log_v
    }

    /// `u_i`; may underflow to 0 for small `λ`, where `log_u` stays usable.
    pub fn u(&self) -> Vec<f64> {
        self.log_u.iter().map(|x| libm::exp(*x)).collect()
    }

    pub fn v(&self) -> Vec<f64> {
        self.log_v.iter().map(|x| libm::exp(*x)).collect()
    }

    /// Row multipliers `α_i = -λ (log u_i + 1/2)`.
    pub fn alpha(&self) -> Vec<f64> {
        self.log_u.iter().map(|l| -self.reg * (l + 0.5)).collect()
    }

    /// Column multipliers `β_j = -λ (log v_j + 1/2)`.
    pub fn beta(&self) -> Vec<f64> {
        self.log_v.iter().map(|l| -self.reg * (l + 0.5)).collect()
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Whether the marginal tolerance was met before `max_iter`.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// `max(|Σ_j p_ij - 1/M|, |Σ_i p_ij - 1/M|)` of the returned plan.
    pub fn marginal_violation(&self) -> f64 {
        self.marginal_violation
    }

    /// `Σ p_ij d_ij`.
    pub fn objective(&self) -> f64 {
        transport_cost(&self.plan, &self.cost)
    }
}

pub fn transport_cost(plan: &Matrix, cost: &Matrix) -> f64 {
    plan.as_slice()
        .iter()
        .zip(cost.as_slice())
        .map(|(p, d)| p * d)
        .sum()
}

/// Largest deviation of any row or column sum from `1/M` (rows) or `1/N` (columns).
pub fn marginal_violation(plan: &Matrix) -> f64 {
    let (rows, cols) = (plan.rows(), plan.cols());
    let mut worst: f64 = 0.0;
    for i in 0..rows {
        let s: f64 = plan.row(i).iter().sum();
        worst = worst.max((s - 1.0 / rows as f64).abs());
    }
    for j in 0..cols {
        let s: f64 = (0..rows).map(|i| plan.get(i, j)).sum();
        worst = worst.max((s - 1.0 / cols as f64).abs());
    }
    worst
}

/// Alternating log-domain normalization of `u` then `v` until both uniform
/// marginals hold within `tol` (L∞), or `max_iter` sweeps have run. A plan
/// that missed the tolerance is returned with `converged() == false`.
/// Sweeps that stop halving the residual hand over to Newton steps on the
/// dual, each counted as an iteration.
pub fn sinkhorn_plan(cost: &Matrix, reg: f64, max_iter: usize, tol: f64) -> Result<TransportPlan> {
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(invalid("reg", "entropic regularizer must be positive"));
    }
    if cost.rows() == 0 || cost.cols() == 0 {
        return Err(Error::EmptyEnsemble);
    }
    for i in 0..cost.rows() {
        if let Some(j) = cost.row(i).iter().position(|d| !d.is_finite()) {
            return Err(Error::NonFiniteCost { row: i, col: j });
        }
    }
    let (m, n) = (cost.rows(), cost.cols());
    let log_a = -libm::log(m as f64);
    let log_b = -libm::log(n as f64);
    let mut log_kernel = cost.clone();
    log_kernel.scale(-1.0 / reg);

    let mut log_u = vec![0.0; m];
    let mut log_v = vec![0.0; n];
    let mut scratch = vec![0.0; m.max(n)];
    let mut iterations = 0;
    let mut converged = false;
    let mut violation = f64::INFINITY;
    let mut window_start = f64::INFINITY;

    while iterations < max_iter {
        iterations += 1;
        for i in 0..m {
            let row = log_kernel.row(i);
            for j in 0..n {
                scratch[j] = row[j] + log_v[j];
            }
            log_u[i] = log_a - log_sum_exp(&scratch[..n]);
        }
        for j in 0..n {
            for i in 0..m {
                scratch[i] = log_kernel.get(i, j) + log_u[i];
            }
            log_v[j] = log_b - log_sum_exp(&scratch[..m]);
        }
        // columns are exact after the v-update; rows carry the residual
        violation = 0.0;
        for i in 0..m {
            let row = log_kernel.row(i);
            let s: f64 = (0..n).map(|j| libm::exp(log_u[i] + row[j] + log_v[j])).sum();
            violation = violation.max((s - libm::exp(log_a)).abs());
        }
        if violation <= tol {
            converged = true;
            break;
        }
        // Near-degenerate costs make the sweeps crawl; finish with Newton on the dual.
        if iterations % STALL_WINDOW == 0 {
            if violation > 0.5 * window_start {
                break;
            }
            window_start = violation;
        }
    }
    while !converged && iterations < max_iter && newton_step(&log_kernel, &mut log_u, &mut log_v) {
        iterations += 1;
        violation = dual_residual(&log_kernel, &log_u, &log_v);
        converged = violation <= tol;
    }

    let mut plan = Matrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            plan.set(i, j, libm::exp(log_u[i] + log_kernel.get(i, j) + log_v[j]));
        }
    }
    let marginal = marginal_violation(&plan).max(if converged { 0.0 } else { violation });
    Ok(TransportPlan {
        plan,
        log_u,
        log_v,
        cost: cost.clone(),
        reg,
        iterations,
        converged,
        marginal_violation: marginal,
    })
}

const STALL_WINDOW: usize = 200;

fn dual_sums(log_kernel: &Matrix, log_u: &[f64], log_v: &[f64]) -> (Vec<f64>, Vec<f64>, Matrix) {
    let (m, n) = (log_kernel.rows(), log_kernel.cols());
    let mut p = Matrix::zeros(m, n);
    let (mut r, mut c) = (vec![0.0; m], vec![0.0; n]);
    for i in 0..m {
        for j in 0..n {
            let x = libm::exp(log_u[i] + log_kernel.get(i, j) + log_v[j]);
            p.set(i, j, x);
            r[i] += x;
            c[j] += x;
        }
    }
    (r, c, p)
}

fn dual_residual(log_kernel: &Matrix, log_u: &[f64], log_v: &[f64]) -> f64 {
    let (r, c, _) = dual_sums(log_kernel, log_u, log_v);
    let (a, b) = (1.0 / r.len() as f64, 1.0 / c.len() as f64);
    let rows = r.iter().map(|x| (x - a).abs());
    let cols = c.iter().map(|x| (x - b).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

// Convex dual sum(P) - a.log_u - b.log_v; the last log_v is pinned to remove the gauge.
fn dual_value(log_kernel: &Matrix, log_u: &[f64], log_v: &[f64]) -> f64 {
    let (r, _, _) = dual_sums(log_kernel, log_u, log_v);
    let (a, b) = (1.0 / log_u.len() as f64, 1.0 / log_v.len() as f64);
    r.iter().sum::<f64>() - a * log_u.iter().sum::<f64>() - b * log_v.iter().sum::<f64>()
}

/// One damped Newton step on the dual. `false` when no progress is possible.
fn newton_step(log_kernel: &Matrix, log_u: &mut [f64], log_v: &mut [f64]) -> bool {
    let (m, n) = (log_u.len(), log_v.len());
    let k = m + n - 1;
    let (r, c, p) = dual_sums(log_kernel, log_u, log_v);
    let (a, b) = (1.0 / m as f64, 1.0 / n as f64);
    let mut grad = vec![0.0; k];
    let mut hess = Matrix::zeros(k, k);
    for i in 0..m {
        grad[i] = r[i] - a;
        hess.set(i, i, r[i]);
    }
    for j in 0..n - 1 {
        grad[m + j] = c[j] - b;
        hess.set(m + j, m + j, c[j]);
        for i in 0..m {
            hess.set(i, m + j, p.get(i, j));
            hess.set(m + j, i, p.get(i, j));
        }
    }
    let ridge = 1e-14 * a.max(b);
    for d in 0..k {
        hess.set(d, d, hess.get(d, d) + ridge);
    }
    let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
    let Ok(step) = cholesky_solve(&hess, &neg) else {
        return false;
    };
    let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();
    if !(slope < 0.0) {
        return false;
    }
    let f0 = dual_value(log_kernel, log_u, log_v);
    let (u0, v0) = (log_u.to_vec(), log_v.to_vec());
    let mut t = 1.0;
    for _ in 0..40 {
        for i in 0..m {
            log_u[i] = u0[i] + t * step[i];
        }
        for j in 0..n - 1 {
            log_v[j] = v0[j] + t * step[m + j];
        }
        if dual_value(log_kernel, log_u, log_v) <= f0 + 1e-4 * t * slope {
            return true;
        }
        t *= 0.5;
    }
    log_u.copy_from_slice(&u0);
    log_v.copy_from_slice(&v0);
    false
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactPlan {
    /// `(1/M) ×` permutation matrix.
    pub plan: Matrix,
    /// Row `i` is matched to column `permutation[i]`.
    pub permutation: Vec<usize>,
    /// `Σ p_ij d_ij`.
    pub objective: f64,
}

/// Unregularized transport with uniform marginals, solved by enumerating all
/// `M!` permutations (an optimal vertex of the Birkhoff polytope is a
/// permutation matrix). Ties keep the first permutation in Heap's order.
pub fn exact_plan_bruteforce(cost: &Matrix) -> Result<ExactPlan> {
    let m = cost.rows();
    if cost.cols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: cost.cols(),
        });
    }
    if m == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if m > BRUTEFORCE_MAX {
        return Err(Error::OracleTooLarge {
            max: BRUTEFORCE_MAX,
            got: m,
        });
    }
    let score = |p: &[usize]| -> f64 { p.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum() };

    let mut perm: Vec<usize> = (0..m).collect();
    let mut best = perm.clone();
    let mut best_score = score(&perm);
    // iterative Heap's algorithm
    let mut c = vec![0usize; m];
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let s = score(&perm);
            if s < best_score {
                best_score = s;
                best.copy_from_slice(&perm);
            }
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    let mut plan = Matrix::zeros(m, m);
    for (r, &col) in best.iter().enumerate() {
        plan.set(r, col, 1.0 / m as f64);
    }
    Ok(ExactPlan {
        plan,
        permutation: best,
        objective: best_score / m as f64,
    })
}

/// `Σ p_ij log p_ij` with `0 log 0 = 0`.
pub fn plan_entropy(plan: &Matrix) -> f64 {
    plan.as_slice()
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| p * libm::log(*p))
        .sum()
}
