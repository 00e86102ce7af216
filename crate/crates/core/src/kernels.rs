//! Gaussian kernels, multi-kernel families, and bandwidth selection.
//!
//! A [`KernelFamily`] is a convex combination of Gaussian kernels
//! `k(x, y) = Σ_u β_u · exp(−‖x−y‖² / γ_u)` with `Σ β_u = 1`, `β_u ≥ 0`.
//! Bandwidths are in squared-distance units: the exponent divides the
//! squared Euclidean distance by `γ_u` directly.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;

/// Weight-normalization tolerance for a stored family.
const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Pair budget above which the median heuristic switches to a seeded
/// subsample of pairs.
const MEDIAN_PAIR_BUDGET: usize = 1_000_000;

/// Fixed stream for the median-heuristic pair subsample, so the statistic is
/// a pure function of its input.
const MEDIAN_SUBSAMPLE_SEED: u64 = 0x6d65_6469_616e_5f73;

/// A convex combination of Gaussian kernels.
///
/// Invariants (enforced at construction): at least one kernel, every
/// bandwidth positive and finite, every weight non-negative and finite,
/// weights summing to one within `1e-9`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFamily {
    bandwidths: Vec<f64>,
    weights: Vec<f64>,
}

impl KernelFamily {
    pub fn new(bandwidths: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if bandwidths.is_empty() {
            return Err(Error::Param("kernel family needs at least one kernel".into()));
        }
        if bandwidths.len() != weights.len() {
            return Err(Error::Param(format!(
                "{} bandwidths but {} weights",
                bandwidths.len(),
                weights.len()
            )));
        }
        for &g in &bandwidths {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::Param(format!("bandwidth {g} must be positive and finite")));
            }
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Param(format!("weight {w} must be non-negative and finite")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Param(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self { bandwidths, weights })
    }

    /// Family with the given bandwidths and uniform weights `1/m`.
    pub fn uniform(bandwidths: Vec<f64>) -> Result<Self> {
        let m = bandwidths.len();
        if m == 0 {
            return Err(Error::Param("kernel family needs at least one kernel".into()));
        }
        let w = 1.0 / m as f64;
        Self::new(bandwidths, vec![w; m])
    }

    /// Single-kernel family.
    pub fn single(gamma: f64) -> Result<Self> {
        Self::new(vec![gamma], vec![1.0])
    }

    /// Geometric bandwidth grid `γ_base · 2^e` for
    /// `e = −span, −span+step, …, +span`, with uniform weights.
    ///
    /// `span` must be an integer multiple of `step` (within 1e-9); the grid
    /// then has `2·span/step + 1` kernels. `span = 0` yields the single
    /// bandwidth `γ_base`.
    pub fn grid(gamma_base: f64, span_exponent: f64, step_exponent: f64) -> Result<Self> {
        if !(gamma_base.is_finite() && gamma_base > 0.0) {
            return Err(Error::Param(format!(
                "base bandwidth {gamma_base} must be positive and finite"
            )));
        }
        if !(span_exponent.is_finite() && span_exponent >= 0.0) {
            return Err(Error::Param(format!(
                "span exponent {span_exponent} must be non-negative"
            )));
        }
        if !(step_exponent.is_finite() && step_exponent > 0.0) {
            return Err(Error::Param(format!(
                "step exponent {step_exponent} must be positive"
            )));
        }
        let ratio = span_exponent / step_exponent;
        let half_steps = ratio.round();
        if (ratio - half_steps).abs() > 1e-9 {
            return Err(Error::Param(format!(
                "span {span_exponent} is not a multiple of step {step_exponent}"
            )));
        }
        let half_steps = half_steps as i64;
        let mut bandwidths = Vec::with_capacity((2 * half_steps + 1) as usize);
        for i in -half_steps..=half_steps {
            let e = i as f64 * step_exponent;
            bandwidths.push(gamma_base * 2f64.powf(e));
        }
        Self::uniform(bandwidths)
    }

    /// Same bandwidths with new weights, rescaled so they sum to one.
    pub fn reweighted(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::Param(format!(
                "{} weights for a family of {}",
                weights.len(),
                self.len()
            )));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(Error::Param(format!("weight sum {sum} must be positive")));
        }
        let normalized: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        Self::new(self.bandwidths.clone(), normalized)
    }

    pub fn len(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: m >= 1
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ_u β_u · exp(−d² / γ_u)` for a precomputed squared distance.
    pub(crate) fn eval_sq_dist(&self, sq_dist: f64) -> f64 {
        self.bandwidths
            .iter()
            .zip(&self.weights)
            .map(|(&g, &b)| b * (-sq_dist / g).exp())
            .sum()
    }
}

pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Input(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::Input("zero-dimensional points".into()));
    }
    Ok(())
}

/// Gaussian kernel `exp(−‖x−y‖² / γ)`.
pub fn eval_gaussian(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    check_dims(x, y)?;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Param(format!("bandwidth {gamma} must be positive and finite")));
    }
    Ok((-squared_distance(x, y) / gamma).exp())
}

/// Multi-kernel evaluation `Σ_u β_u · exp(−‖x−y‖² / γ_u)`.
pub fn eval_multi(x: &[f64], y: &[f64], family: &KernelFamily) -> Result<f64> {
    check_dims(x, y)?;
    Ok(family.eval_sq_dist(squared_distance(x, y)))
}

/// Median of the squared pairwise Euclidean distances over all unordered
/// distinct pairs, the usual bandwidth pick for the kernels above.
///
/// For an even number of pairs the lower-middle element is taken, so the
/// result is always an observed distance. Above 10^6 pairs a fixed-seed
/// uniform subsample of 10^6 pairs (with replacement) stands in for the
/// full enumeration; the statistic stays a pure function of its input.
pub fn median_heuristic(samples: &[Vec<f64>]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "median heuristic needs at least 2 samples, got {n}"
        )));
    }
    let dim = samples[0].len();
    for s in samples {
        if s.len() != dim {
            return Err(Error::Input(format!(
                "dimension mismatch: {} vs {}",
                s.len(),
                dim
            )));
        }
    }

    let total_pairs = n * (n - 1) / 2;
    let mut dists = Vec::with_capacity(total_pairs.min(MEDIAN_PAIR_BUDGET));
    if total_pairs <= MEDIAN_PAIR_BUDGET {
        for i in 0..n {
            for j in (i + 1)..n {
                dists.push(squared_distance(&samples[i], &samples[j]));
            }
        }
    } else {
        let mut rng = rng::seeded(MEDIAN_SUBSAMPLE_SEED);
        while dists.len() < MEDIAN_PAIR_BUDGET {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                dists.push(squared_distance(&samples[i], &samples[j]));
            }
        }
    }

    dists.sort_by(f64::total_cmp);
    let median = dists[(dists.len() - 1) / 2];
    if median <= 0.0 {
        return Err(Error::Degenerate(
            "all pairwise distances are zero".into(),
        ));
    }
    Ok(median)
}
