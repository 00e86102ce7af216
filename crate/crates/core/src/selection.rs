//! Kernel-weight selection.
//!
//! Picks the multi-kernel weights that maximize the two-sample test power
//! of the linear-time estimator: with `d` the per-kernel statistics and `Q`
//! their covariance estimate, the power-optimal direction solves
//!
//! ```text
//! minimize βᵀ(Q + εI)β   subject to   dᵀβ = 1, β ≥ 0.
//! ```
//!
//! The solver is projected gradient descent with a fixed step from a
//! Lipschitz bound (power iteration on `Q + εI`), plus an active-set
//! refinement that solves the equality-constrained system exactly once the
//! zero pattern has settled. Sizes here are tiny (m ≤ a few dozen), so a
//! dependency-free first-order method is deterministic and fast.
//!
//! The ratio the weights optimize is invariant to positive rescaling of β,
//! so the optimizer direction survives renormalization: the QP solution
//! (satisfying `dᵀβ = 1`) is rescaled to `Σβ = 1` before installation into
//! a kernel family.

use crate::error::{Error, Result};

/// Default regularizer for the weight program.
pub const DEFAULT_EPSILON: f64 = 1e-3;

const MAX_ITERATIONS: usize = 10_000;
const CONVERGENCE_TOL: f64 = 1e-8;
const KKT_ACCEPT_TOL: f64 = 1e-6;
const POLISH_PERIOD: usize = 25;

#[derive(Debug, Clone)]
pub struct WeightSolution {
    /// Solution of the program itself: `dᵀraw = 1`, `raw ≥ 0`.
    pub raw: Vec<f64>,
    /// `raw` rescaled to sum to one, ready for a kernel family.
    pub normalized: Vec<f64>,
    /// `rawᵀ(Q + εI)·raw`.
    pub objective: f64,
    /// Norm of the projected gradient at `raw`.
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Solves the weight program for per-kernel statistics `d` and covariance
/// estimate `q` (symmetric within 1e-9).
///
/// Errors with [`Error::Infeasible`] when no `d_u` is positive (the
/// constraint set is empty over the non-negative orthant), and with
/// [`Error::Solver`] when the tolerance cannot be reached.
pub fn solve_kernel_weights(d: &[f64], q: &[Vec<f64>], epsilon: f64) -> Result<WeightSolution> {
    let m = d.len();
    if m == 0 {
        return Err(Error::Param("empty statistic vector".into()));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Param(format!("epsilon {epsilon} must be positive")));
    }
    if q.len() != m || q.iter().any(|row| row.len() != m) {
        return Err(Error::Input(format!("covariance must be {m}x{m}")));
    }
    for (u, row) in q.iter().enumerate() {
        for (v, &val) in row.iter().enumerate() {
            if !val.is_finite() {
                return Err(Error::Numeric(format!("covariance entry [{u}][{v}] is {val}")));
            }
            if (val - q[v][u]).abs() > 1e-9 {
                return Err(Error::Input(format!(
                    "covariance not symmetric at [{u}][{v}]: {} vs {}",
                    val, q[v][u]
                )));
            }
        }
    }
    for &du in d {
        if !du.is_finite() {
            return Err(Error::Numeric(format!("statistic entry {du} is not finite")));
        }
    }
    if !d.iter().any(|&du| du > 0.0) {
        return Err(Error::Infeasible(
            "no positive per-kernel statistic; weight constraint set is empty".into(),
        ));
    }

    // H = (Q + Qᵀ)/2 + εI, symmetrized exactly.
    let mut h = vec![vec![0.0; m]; m];
    for u in 0..m {
        for v in 0..m {
            h[u][v] = 0.5 * (q[u][v] + q[v][u]);
        }
        h[u][u] += epsilon;
    }

    let lipschitz = (2.0 * spectral_norm(&h) * 1.02).max(2.0 * epsilon);
    let step = 1.0 / lipschitz;

    // Start from the projection of the uniform point.
    let uniform = vec![1.0 / m as f64; m];
    let mut beta = project_weighted_simplex(&uniform, d);

    let mut iterations = 0;
    let mut converged = false;
    for it in 0..MAX_ITERATIONS {
        iterations = it + 1;
        let grad = mat_vec(&h, &beta);
        let trial: Vec<f64> = beta
            .iter()
            .zip(&grad)
            .map(|(b, g)| b - step * 2.0 * g)
            .collect();
        let next = project_weighted_simplex(&trial, d);
        let residual = norm_diff(&beta, &next) / step;
        beta = next;

        if residual <= CONVERGENCE_TOL {
            converged = true;
            break;
        }
        if (it + 1) % POLISH_PERIOD == 0 {
            if let Some(polished) = active_set_polish(&beta, &h, d) {
                beta = polished;
                converged = true;
                break;
            }
        }
    }
    if !converged {
        if let Some(polished) = active_set_polish(&beta, &h, d) {
            beta = polished;
        }
    }

    let kkt_residual = projected_gradient_norm(&beta, &h, d, step);
    if kkt_residual > KKT_ACCEPT_TOL {
        return Err(Error::Solver(format!(
            "projected-gradient residual {kkt_residual:.3e} exceeds {KKT_ACCEPT_TOL:.0e} \
             after {iterations} iterations (m = {m}, step = {step:.3e})"
        )));
    }

    let mut raw = beta;
    for b in &mut raw {
        if *b < 0.0 {
            debug_assert!(*b >= -1e-12);
            *b = 0.0;
        }
    }
    let constraint: f64 = raw.iter().zip(d).map(|(b, du)| b * du).sum();
    if (constraint - 1.0).abs() > 1e-8 {
        return Err(Error::Solver(format!(
            "constraint dᵀβ = {constraint} drifted from 1"
        )));
    }

    let total: f64 = raw.iter().sum();
    let normalized: Vec<f64> = raw.iter().map(|b| b / total).collect();
    let objective = quadratic_form(&h, &raw);

    Ok(WeightSolution {
        raw,
        normalized,
        objective,
        kkt_residual,
        iterations,
    })
}

fn mat_vec(h: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    h.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn quadratic_form(h: &[Vec<f64>], x: &[f64]) -> f64 {
    x.iter().zip(mat_vec(h, x)).map(|(a, b)| a * b).sum()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// ‖β − P(β − s·∇f(β))‖ / s, the stationarity residual of the program.
fn projected_gradient_norm(beta: &[f64], h: &[Vec<f64>], d: &[f64], step: f64) -> f64 {
    let grad = mat_vec(h, beta);
    let trial: Vec<f64> = beta
        .iter()
        .zip(&grad)
        .map(|(b, g)| b - step * 2.0 * g)
        .collect();
    let proj = project_weighted_simplex(&trial, d);
    norm_diff(beta, &proj) / step
}

/// Largest absolute eigenvalue by power iteration. Deterministic start with
/// a small index tilt so the iterate is never orthogonal to the top
/// eigenvector of these small symmetric matrices.
fn spectral_norm(h: &[Vec<f64>]) -> f64 {
    let m = h.len();
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.01 * i as f64).collect();
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let n0 = norm(&v);
    v.iter_mut().for_each(|a| *a /= n0);
    let mut rayleigh = 0.0;
    for _ in 0..100 {
        let w = mat_vec(h, &v);
        let wn = norm(&w);
        if wn < 1e-300 {
            return 0.0;
        }
        v = w.iter().map(|a| a / wn).collect();
        rayleigh = v
            .iter()
            .zip(mat_vec(h, &v))
            .map(|(a, b)| a * b)
            .sum::<f64>();
    }
    rayleigh.abs()
}

/// Euclidean projection onto `{β ≥ 0, dᵀβ = 1}`.
///
/// The KKT conditions give `β = max(0, y − τ·d)` for the scalar `τ` solving
/// `φ(τ) = dᵀ max(0, y − τ·d) = 1`. `φ` is continuous, piecewise linear and
/// non-increasing, so the root segment is located by scanning the sorted
/// breakpoints `y_i/d_i` and solved in closed form.
pub(crate) fn project_weighted_simplex(y: &[f64], d: &[f64]) -> Vec<f64> {
    debug_assert_eq!(y.len(), d.len());
    debug_assert!(d.iter().any(|&x| x > 0.0));

    let mut breakpoints: Vec<f64> = y
        .iter()
        .zip(d)
        .filter(|(_, &di)| di != 0.0)
        .map(|(&yi, &di)| yi / di)
        .collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let phi = |tau: f64| -> f64 {
        y.iter()
            .zip(d)
            .map(|(&yi, &di)| di * (yi - tau * di).max(0.0))
            .sum::<f64>()
            - 1.0
    };

    // First breakpoint where φ crosses (or touches) zero.
    let crossing = breakpoints.iter().position(|&bp| phi(bp) <= 0.0);
    let tau = match crossing {
        Some(k) if phi(breakpoints[k]) == 0.0 => breakpoints[k],
        Some(k) => {
            // Root strictly inside the open segment left of breakpoint k.
            let representative = if k == 0 {
                breakpoints[0] - 1.0
            } else {
                0.5 * (breakpoints[k - 1] + breakpoints[k])
            };
            solve_segment(y, d, representative)
        }
        None => {
            // φ stays positive through the last breakpoint; the root sits in
            // the final segment, where only negative-d coordinates are active.
            let last = *breakpoints.last().expect("some d_i is nonzero");
            solve_segment(y, d, last + 1.0)
        }
    };

    y.iter()
        .zip(d)
        .map(|(&yi, &di)| (yi - tau * di).max(0.0))
        .collect()
}

/// Solves `Σ_A d_i(y_i − τ d_i) = 1` for the active set at `representative`.
fn solve_segment(y: &[f64], d: &[f64], representative: f64) -> f64 {
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for (&yi, &di) in y.iter().zip(d) {
        if di != 0.0 && yi - representative * di > 0.0 {
            s1 += di * yi;
            s2 += di * di;
        }
    }
    debug_assert!(s2 > 0.0, "root segment with empty active set");
    (s1 - 1.0) / s2
}

/// Exact solve of the equality-constrained program restricted to the
/// current free set. Accepted only when the result is primal and dual
/// feasible, in which case it is the optimum.
fn active_set_polish(beta: &[f64], h: &[Vec<f64>], d: &[f64]) -> Option<Vec<f64>> {
    let m = beta.len();
    let free: Vec<usize> = (0..m).filter(|&i| beta[i] > 0.0).collect();
    if free.is_empty() {
        return None;
    }
    let k = free.len();

    // KKT system: [2H_FF, d_F; d_Fᵀ, 0] · [β_F; ν] = [0; 1].
    let mut a = vec![vec![0.0; k + 2]; k + 1];
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            a[r][c] = 2.0 * h[i][j];
        }
        a[r][k] = d[i];
        a[r][k + 1] = 0.0;
    }
    for (c, &j) in free.iter().enumerate() {
        a[k][c] = d[j];
    }
    a[k][k] = 0.0;
    a[k][k + 1] = 1.0;

    let solution = gaussian_solve(&mut a)?;
    let nu = solution[k];

    let mut candidate = vec![0.0; m];
    for (r, &i) in free.iter().enumerate() {
        if solution[r] < -1e-12 {
            return None;
        }
        candidate[i] = solution[r].max(0.0);
    }

    // Dual feasibility on the active set: (2Hβ)_i − ν d_i ≥ 0.
    let grad2 = mat_vec(h, &candidate);
    for i in 0..m {
        if candidate[i] == 0.0 && 2.0 * grad2[i] - nu * d[i] < -1e-9 {
            return None;
        }
    }
    Some(candidate)
}

/// Gaussian elimination with partial pivoting on an augmented system;
/// `None` when a pivot collapses.
fn gaussian_solve(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for c in col..=n {
                let update = factor * a[col][c];
                a[row][c] -= update;
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = a[row][n];
        for c in (row + 1)..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}
