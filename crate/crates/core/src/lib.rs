//! Multi-kernel maximum mean discrepancy (MK-MMD) statistics and a small
//! domain-adaptive training engine.
//!
//! The crate provides:
//!
//! * Gaussian [`kernels`] with convex multi-kernel families, the median
//!   bandwidth heuristic, and geometric bandwidth grids;
//! * linear-time and quadratic-time unbiased squared-[`mmd`] estimators and
//!   the per-kernel statistic/covariance pair feeding weight selection;
//! * [`selection`]: the simplex-constrained quadratic program that picks
//!   test-power-optimal kernel weights;
//! * a dense feedforward [`network`] with backpropagation, checkpointing,
//!   and SGD with momentum and annealing;
//! * the [`trainer`]: cross-entropy risk plus layerwise MK-MMD penalties,
//!   optimized by alternating parameter and kernel-weight updates;
//! * [`diagnostics`]: a permutation two-sample test and the proxy
//!   A-distance of a trained two-sample classifier;
//! * synthetic domain-shift [`data`] generators and CSV dataset IO.
//!
//! Everything stochastic is driven by explicit seeds through [`rng`], so
//! results are reproducible bit-for-bit.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod kernels;
pub mod mmd;
pub mod network;
pub mod rng;
pub mod selection;
pub mod sweep;
pub mod trainer;

pub use error::{Error, Result};
pub use kernels::{eval_gaussian, eval_multi, median_heuristic, KernelFamily};
pub use mmd::{
    mmd2_linear, mmd2_quadratic_unbiased, per_kernel_stats, quad_statistic, MmdReport, QuadTuple,
};
pub use selection::{solve_kernel_weights, WeightSolution};
