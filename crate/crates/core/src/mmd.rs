//! Squared-MMD estimators.
//!
//! Two routes to the same population quantity:
//!
//! * [`mmd2_quadratic_unbiased`] — the O(n²) U-statistic, used as the
//!   reference estimator and by the permutation test;
//! * [`mmd2_linear`] — the O(n) streaming estimator that averages a
//!   four-kernel term over disjoint quad-tuples, cheap enough to sit inside
//!   a training loop.
//!
//! [`per_kernel_stats`] additionally produces the per-kernel statistic
//! vector and its covariance estimate, the inputs to kernel-weight
//! selection.

use crate::error::{Error, Result};
use crate::kernels::{squared_distance, KernelFamily};

/// The four-point sample unit of the linear-time estimator: two consecutive
/// source points and two consecutive target points.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTuple {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
}

impl QuadTuple {
    pub fn new(s1: Vec<f64>, s2: Vec<f64>, t1: Vec<f64>, t2: Vec<f64>) -> Result<Self> {
        let dim = s1.len();
        if dim == 0 {
            return Err(Error::Input("zero-dimensional quad-tuple".into()));
        }
        if s2.len() != dim || t1.len() != dim || t2.len() != dim {
            return Err(Error::Input(format!(
                "quad-tuple dimensions disagree: {}/{}/{}/{}",
                dim,
                s2.len(),
                t1.len(),
                t2.len()
            )));
        }
        Ok(Self { s1, s2, t1, t2 })
    }

    /// Squared distances of the four kernel arguments:
    /// (s1,s2), (t1,t2), (s1,t2), (s2,t1).
    fn sq_dists(&self) -> [f64; 4] {
        [
            squared_distance(&self.s1, &self.s2),
            squared_distance(&self.t1, &self.t2),
            squared_distance(&self.s1, &self.t2),
            squared_distance(&self.s2, &self.t1),
        ]
    }
}

/// The estimator's per-quad term
/// `k(s1,s2) + k(t1,t2) − k(s1,t2) − k(s2,t1)` under the multi-kernel.
/// Always in [−2, 2].
pub fn quad_statistic(quad: &QuadTuple, family: &KernelFamily) -> f64 {
    let [d_ss, d_tt, d_st, d_ts] = quad.sq_dists();
    family.eval_sq_dist(d_ss) + family.eval_sq_dist(d_tt)
        - family.eval_sq_dist(d_st)
        - family.eval_sq_dist(d_ts)
}

/// Per-base-kernel values of the quad term, one entry per bandwidth.
pub fn quad_statistic_per_kernel(quad: &QuadTuple, family: &KernelFamily) -> Vec<f64> {
    let [d_ss, d_tt, d_st, d_ts] = quad.sq_dists();
    family
        .bandwidths()
        .iter()
        .map(|&g| {
            (-d_ss / g).exp() + (-d_tt / g).exp() - (-d_st / g).exp() - (-d_ts / g).exp()
        })
        .collect()
}

/// Pairs consecutive samples of each domain into quad-tuples, truncating
/// both streams to the largest common even length. Order matters: the
/// caller shuffles beforehand if i.i.d. pairing is wanted.
pub fn quads_from_samples(source: &[Vec<f64>], target: &[Vec<f64>]) -> Result<Vec<QuadTuple>> {
    let usable = source.len().min(target.len()) & !1;
    if usable < 4 {
        return Err(Error::Input(format!(
            "need at least 4 usable samples per domain, got {} source / {} target",
            source.len(),
            target.len()
        )));
    }
    (0..usable / 2)
        .map(|i| {
            QuadTuple::new(
                source[2 * i].clone(),
                source[2 * i + 1].clone(),
                target[2 * i].clone(),
                target[2 * i + 1].clone(),
            )
        })
        .collect()
}

/// Linear-time unbiased squared-MMD estimate: the mean of
/// [`quad_statistic`] over the quad-tuples formed by consecutive pairing.
/// May be negative; unbiased estimators admit negative values, so callers
/// must not assume non-negativity.
pub fn mmd2_linear(
    source: &[Vec<f64>],
    target: &[Vec<f64>],
    family: &KernelFamily,
) -> Result<f64> {
    let quads = quads_from_samples(source, target)?;
    Ok(mmd2_linear_from_quads(&quads, family))
}

/// The linear estimator on pre-formed quads; `(2/n_s)·Σ g` reduces to the
/// plain mean of the per-quad terms.
pub fn mmd2_linear_from_quads(quads: &[QuadTuple], family: &KernelFamily) -> f64 {
    let sum: f64 = quads.iter().map(|q| quad_statistic(q, family)).sum();
    sum / quads.len() as f64
}

/// Quadratic-time unbiased squared-MMD estimate. Within-domain terms
/// average the kernel over ordered distinct pairs (i ≠ j); the cross term
/// averages over all n_s·n_t pairs.
pub fn mmd2_quadratic_unbiased(
    source: &[Vec<f64>],
    target: &[Vec<f64>],
    family: &KernelFamily,
) -> Result<f64> {
    let ns = source.len();
    let nt = target.len();
    if ns < 2 || nt < 2 {
        return Err(Error::Input(format!(
            "need at least 2 samples per domain, got {ns} source / {nt} target"
        )));
    }
    let dim = source[0].len();
    for s in source.iter().chain(target.iter()) {
        if s.len() != dim {
            return Err(Error::Input(format!(
                "dimension mismatch: {} vs {}",
                s.len(),
                dim
            )));
        }
    }

    let mut within_s = 0.0;
    for i in 0..ns {
        for j in (i + 1)..ns {
            within_s += family.eval_sq_dist(squared_distance(&source[i], &source[j]));
        }
    }
    // Ordered distinct pairs double the i<j sum and the denominator alike.
    within_s /= (ns * (ns - 1)) as f64 / 2.0;

    let mut within_t = 0.0;
    for i in 0..nt {
        for j in (i + 1)..nt {
            within_t += family.eval_sq_dist(squared_distance(&target[i], &target[j]));
        }
    }
    within_t /= (nt * (nt - 1)) as f64 / 2.0;

    let mut cross = 0.0;
    for s in source {
        for t in target {
            cross += family.eval_sq_dist(squared_distance(s, t));
        }
    }
    cross /= (ns * nt) as f64;

    Ok(within_s + within_t - 2.0 * cross)
}

/// Per-kernel statistics of a quad stream: the statistic vector `d`, its
/// covariance estimate `Q`, and the combined value/variance under the
/// family's current weights.
#[derive(Debug, Clone)]
pub struct MmdReport {
    /// Linear-estimator value of each base kernel alone.
    pub per_kernel_d: Vec<f64>,
    /// Covariance estimate built from differences of consecutive quad terms;
    /// symmetric positive semidefinite by construction.
    pub covariance_q: Vec<Vec<f64>>,
    /// `βᵀd`, identical to the linear estimator under the multi-kernel.
    pub combined_mmd2: f64,
    /// `βᵀQβ` clamped at zero.
    pub variance: f64,
}

/// Computes [`MmdReport`] from at least two quads. The quad list is
/// truncated to an even count so every retained quad belongs to one
/// difference pair; `Q = (4/n_s)·Σ gΔ gΔᵀ` over those pairs with
/// `n_s = 2·quad_count`.
pub fn per_kernel_stats(quads: &[QuadTuple], family: &KernelFamily) -> Result<MmdReport> {
    let usable = quads.len() & !1;
    if usable < 2 {
        return Err(Error::Input(format!(
            "need at least 2 quad-tuples, got {}",
            quads.len()
        )));
    }
    let quads = &quads[..usable];
    let m = family.len();

    // J×m table of per-kernel quad terms.
    let g: Vec<Vec<f64>> = quads
        .iter()
        .map(|q| quad_statistic_per_kernel(q, family))
        .collect();

    let mut d = vec![0.0; m];
    for row in &g {
        for (acc, v) in d.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for acc in &mut d {
        *acc /= usable as f64;
    }

    // 4/n_s with n_s = 2J collapses to 2/J.
    let scale = 2.0 / usable as f64;
    let mut q_mat = vec![vec![0.0; m]; m];
    for pair in g.chunks_exact(2) {
        let delta: Vec<f64> = pair[0].iter().zip(&pair[1]).map(|(a, b)| a - b).collect();
        for u in 0..m {
            for v in u..m {
                q_mat[u][v] += scale * delta[u] * delta[v];
            }
        }
    }
    for u in 0..m {
        for v in 0..u {
            q_mat[u][v] = q_mat[v][u];
        }
    }

    let beta = family.weights();
    let combined_mmd2: f64 = beta.iter().zip(&d).map(|(b, du)| b * du).sum();
    let mut variance = 0.0;
    for u in 0..m {
        for v in 0..m {
            variance += beta[u] * q_mat[u][v] * beta[v];
        }
    }

    Ok(MmdReport {
        per_kernel_d: d,
        covariance_q: q_mat,
        combined_mmd2,
        variance: variance.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::eval_gaussian;
    use crate::rng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn single(gamma: f64) -> KernelFamily {
        KernelFamily::single(gamma).unwrap()
    }

    fn quad1(s1: f64, s2: f64, t1: f64, t2: f64) -> QuadTuple {
        QuadTuple::new(vec![s1], vec![s2], vec![t1], vec![t2]).unwrap()
    }

    #[test]
    fn quad_statistic_vanishes_on_identical_points() {
        let q = quad1(1.5, 1.5, 1.5, 1.5);
        assert_eq!(quad_statistic(&q, &single(2.0)), 0.0);
    }

    #[test]
    fn quad_statistic_saturates_at_two_for_distant_domains() {
        let q = quad1(0.0, 0.0, 10.0, 10.0);
        let g = quad_statistic(&q, &single(1.0));
        assert!((g - 2.0).abs() < 1e-40, "g = {g}");
    }

    #[test]
    fn quad_statistic_hand_summed() {
        // γ=1, s=(0,1), t=(0.5,1.5): e^{−1} + e^{−1} − e^{−2.25} − e^{−0.25},
        // assembled here term by term as the independent check.
        let q = quad1(0.0, 1.0, 0.5, 1.5);
        let expected = eval_gaussian(&[0.0], &[1.0], 1.0).unwrap()
            + eval_gaussian(&[0.5], &[1.5], 1.0).unwrap()
            - eval_gaussian(&[0.0], &[1.5], 1.0).unwrap()
            - eval_gaussian(&[1.0], &[0.5], 1.0).unwrap();
        let scalar = (-1.0f64).exp() + (-1.0f64).exp() - (-2.25f64).exp() - (-0.25f64).exp();
        assert!((expected - scalar).abs() < 1e-15);
        assert!((scalar - (-0.148441)).abs() < 1e-6);
        assert!((quad_statistic(&q, &single(1.0)) - scalar).abs() < 1e-15);
    }

    #[test]
    fn quad_statistic_bounded() {
        let f = KernelFamily::grid(1.0, 2.0, 1.0).unwrap();
        let mut rng = rng::seeded(3);
        for _ in 0..500 {
            let q = quad1(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            let g = quad_statistic(&q, &f);
            assert!((-2.0..=2.0).contains(&g), "g = {g}");
        }
    }

    #[test]
    fn linear_estimator_zero_when_streams_identical() {
        let pts: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, -(i as f64)]).collect();
        let v = mmd2_linear(&pts, &pts, &single(1.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn linear_estimator_matches_direct_two_quad_sum() {
        // Eight 1-D points → two quads; the estimate is the mean of the two
        // per-quad terms, summed out by hand below.
        let source = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let target = vec![vec![0.5], vec![1.5], vec![2.5], vec![3.5]];
        let f = single(2.0);
        let g0 = quad_statistic(&quad1(0.0, 1.0, 0.5, 1.5), &f);
        let g1 = quad_statistic(&quad1(2.0, 3.0, 2.5, 3.5), &f);
        let v = mmd2_linear(&source, &target, &f).unwrap();
        assert!((v - 0.5 * (g0 + g1)).abs() < 1e-15);
    }

    #[test]
    fn linear_estimator_truncates_to_common_even_length() {
        // 7 source / 5 target usable → 4 per domain → 2 quads.
        let source: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64]).collect();
        let target: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 + 0.25]).collect();
        let quads = quads_from_samples(&source, &target).unwrap();
        assert_eq!(quads.len(), 2);
        assert_eq!(quads[1].s2, vec![3.0]);
    }

    #[test]
    fn linear_estimator_rejects_tiny_inputs() {
        let a = vec![vec![0.0], vec![1.0]];
        let b = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            mmd2_linear(&a, &b, &single(1.0)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn quadratic_estimator_full_enumeration_case() {
        // source = target = {0, 1}: within terms are e^{−1}; the cross term
        // averages {1, e^{−1}, e^{−1}, 1}; total e^{−1} − 1.
        let pts = vec![vec![0.0], vec![1.0]];
        let v = mmd2_quadratic_unbiased(&pts, &pts, &single(1.0)).unwrap();
        let e1 = (-1.0f64).exp();
        let expected = 2.0 * e1 - 2.0 * ((1.0 + e1) / 2.0);
        assert!((v - expected).abs() < 1e-15);
        assert!((v - (e1 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_estimator_single_kernel_equals_degenerate_family() {
        let mut rng = rng::seeded(9);
        let a: Vec<Vec<f64>> = (0..10).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect();
        let b: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.gen_range(-1.0..1.0)]).collect();
        let f1 = single(0.7);
        let f2 = KernelFamily::new(vec![0.7], vec![1.0]).unwrap();
        assert_eq!(
            mmd2_quadratic_unbiased(&a, &b, &f1).unwrap(),
            mmd2_quadratic_unbiased(&a, &b, &f2).unwrap()
        );
    }

    #[test]
    fn quadratic_estimator_near_zero_for_split_sample() {
        // 1000 draws from one Gaussian split in half: the estimate should sit
        // within 3 standard errors of zero, standard error taken from a
        // seeded permutation spread of the same statistic.
        let mut rng = rng::seeded(31);
        let all: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![rng::standard_normal(&mut rng)])
            .collect();
        let (a, b) = all.split_at(500);
        let f = single(2.0);
        let observed = mmd2_quadratic_unbiased(a, b, &f).unwrap();

        let mut pool: Vec<Vec<f64>> = all.clone();
        let mut stats = Vec::new();
        for _ in 0..60 {
            pool.shuffle(&mut rng);
            let (pa, pb) = pool.split_at(500);
            stats.push(mmd2_quadratic_unbiased(pa, pb, &f).unwrap());
        }
        let mean = stats.iter().sum::<f64>() / stats.len() as f64;
        let sd = (stats.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
            / (stats.len() - 1) as f64)
            .sqrt();
        assert!(
            observed.abs() <= 3.0 * sd,
            "observed {observed}, permutation sd {sd}"
        );
    }

    #[test]
    fn linear_mean_over_repairings_matches_quadratic() {
        // The linear estimator is unbiased for the quadratic U-statistic under
        // random re-pairing of the same samples.
        let mut rng = rng::seeded(101);
        let mut source: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng::standard_normal(&mut rng), rng::standard_normal(&mut rng)])
            .collect();
        let mut target: Vec<Vec<f64>> = (0..60)
            .map(|_| {
                vec![
                    rng::standard_normal(&mut rng) + 0.7,
                    rng::standard_normal(&mut rng),
                ]
            })
            .collect();
        let f = KernelFamily::grid(1.0, 1.0, 1.0).unwrap();
        let oracle = mmd2_quadratic_unbiased(&source, &target, &f).unwrap();

        let trials = 200;
        let mut vals = Vec::with_capacity(trials);
        for _ in 0..trials {
            source.shuffle(&mut rng);
            target.shuffle(&mut rng);
            vals.push(mmd2_linear(&source, &target, &f).unwrap());
        }
        let mean = vals.iter().sum::<f64>() / trials as f64;
        let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (trials - 1) as f64)
            .sqrt();
        let se = sd / (trials as f64).sqrt();
        assert!(
            (mean - oracle).abs() <= 3.0 * se,
            "mean {mean} vs oracle {oracle} (se {se})"
        );
    }

    #[test]
    fn stats_zero_q_for_identical_quads() {
        let q = quad1(0.0, 1.0, 0.3, 1.3);
        let quads = vec![q.clone(), q.clone(), q.clone(), q];
        let f = KernelFamily::grid(1.0, 1.0, 1.0).unwrap();
        let report = per_kernel_stats(&quads, &f).unwrap();
        for row in &report.covariance_q {
            for &v in row {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(report.variance, 0.0);
    }

    #[test]
    fn stats_single_kernel_q_is_scaled_square_sum() {
        let quads = vec![
            quad1(0.0, 1.0, 0.5, 1.5),
            quad1(2.0, 3.0, 2.2, 3.4),
            quad1(-1.0, 0.5, 0.0, 0.25),
            quad1(4.0, 4.5, 3.9, 4.8),
        ];
        let f = single(1.5);
        let report = per_kernel_stats(&quads, &f).unwrap();
        let g: Vec<f64> = quads.iter().map(|q| quad_statistic(q, &f)).collect();
        let expected = 2.0 / 4.0 * ((g[0] - g[1]).powi(2) + (g[2] - g[3]).powi(2));
        assert!((report.covariance_q[0][0] - expected).abs() < 1e-15);
        assert!(report.covariance_q[0][0] >= 0.0);
    }

    #[test]
    fn stats_two_kernel_q_matches_enumeration() {
        // Spreadsheet-style enumeration: four quads, two kernels, every g
        // value recomputed here from scalar kernels.
        let quads = vec![
            quad1(0.0, 1.0, 0.5, 1.5),
            quad1(1.0, 2.5, 0.8, 2.0),
            quad1(-0.5, 0.5, 0.0, 1.0),
            quad1(3.0, 3.5, 2.5, 4.0),
        ];
        let f = KernelFamily::uniform(vec![0.5, 4.0]).unwrap();
        let report = per_kernel_stats(&quads, &f).unwrap();

        let g_of = |q: &QuadTuple, gamma: f64| -> f64 {
            eval_gaussian(&q.s1, &q.s2, gamma).unwrap()
                + eval_gaussian(&q.t1, &q.t2, gamma).unwrap()
                - eval_gaussian(&q.s1, &q.t2, gamma).unwrap()
                - eval_gaussian(&q.s2, &q.t1, gamma).unwrap()
        };
        for (u, &gamma) in [0.5, 4.0].iter().enumerate() {
            let d_u: f64 = quads.iter().map(|q| g_of(q, gamma)).sum::<f64>() / 4.0;
            assert!((report.per_kernel_d[u] - d_u).abs() < 1e-15);
            for (v, &gamma2) in [0.5, 4.0].iter().enumerate() {
                let delta0 = g_of(&quads[0], gamma) - g_of(&quads[1], gamma);
                let delta0b = g_of(&quads[0], gamma2) - g_of(&quads[1], gamma2);
                let delta1 = g_of(&quads[2], gamma) - g_of(&quads[3], gamma);
                let delta1b = g_of(&quads[2], gamma2) - g_of(&quads[3], gamma2);
                let expected = 0.5 * (delta0 * delta0b + delta1 * delta1b);
                assert!(
                    (report.covariance_q[u][v] - expected).abs() < 1e-15,
                    "Q[{u}][{v}]"
                );
            }
        }
    }

    #[test]
    fn stats_q_symmetric_and_psd_on_simplex() {
        let mut rng = rng::seeded(77);
        let quads: Vec<QuadTuple> = (0..40)
            .map(|_| {
                quad1(
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-1.0..3.0),
                    rng.gen_range(-1.0..3.0),
                )
            })
            .collect();
        let f = KernelFamily::grid(1.0, 2.0, 0.5).unwrap();
        let report = per_kernel_stats(&quads, &f).unwrap();
        let m = f.len();
        for u in 0..m {
            for v in 0..m {
                assert_eq!(report.covariance_q[u][v], report.covariance_q[v][u]);
            }
        }
        // βᵀQβ for random simplex points; Q is a sum of outer products.
        for _ in 0..50 {
            let mut beta: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = beta.iter().sum();
            beta.iter_mut().for_each(|b| *b /= s);
            let mut quad_form = 0.0;
            for u in 0..m {
                for v in 0..m {
                    quad_form += beta[u] * report.covariance_q[u][v] * beta[v];
                }
            }
            assert!(quad_form >= -1e-12, "βᵀQβ = {quad_form}");
        }
    }

    #[test]
    fn stats_combined_is_linear_in_weights() {
        let quads = vec![
            quad1(0.0, 1.0, 0.5, 1.5),
            quad1(1.0, 2.5, 0.8, 2.0),
            quad1(-0.5, 0.5, 0.0, 1.0),
            quad1(3.0, 3.5, 2.5, 4.0),
        ];
        let f = KernelFamily::new(vec![0.5, 4.0], vec![0.3, 0.7]).unwrap();
        let report = per_kernel_stats(&quads, &f).unwrap();
        let expected: f64 = report
            .per_kernel_d
            .iter()
            .zip(f.weights())
            .map(|(d, b)| d * b)
            .sum();
        assert_eq!(report.combined_mmd2, expected);
        // And the combined value is the linear estimator itself.
        let direct = mmd2_linear_from_quads(&quads, &f);
        assert!((report.combined_mmd2 - direct).abs() < 1e-15);
    }

    #[test]
    fn stats_rejects_single_quad() {
        let quads = vec![quad1(0.0, 1.0, 0.5, 1.5)];
        assert!(matches!(
            per_kernel_stats(&quads, &KernelFamily::single(1.0).unwrap()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn quad_tuple_rejects_mixed_dimensions() {
        assert!(QuadTuple::new(vec![0.0], vec![1.0, 2.0], vec![0.0], vec![1.0]).is_err());
    }
}
