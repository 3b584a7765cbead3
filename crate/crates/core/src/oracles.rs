//! Reference and baseline decoders, plus the row-weight / measurement-count
//! calculator and Monte Carlo checks of the signal norm bounds that back it.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, param, Error, Result};
use crate::matrix::SparseSignMatrix;
use crate::rng::derive_seed;
use crate::signal::{sample_signal, MixturePrior};

/// Largest coefficient count accepted by [`exact_mmse`].
pub const EXACT_MAX_N: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactPosterior {
    pub x_mmse: Vec<f64>,
    /// `Pr(Q(i) = 1 | y)`.
    pub q_post: Vec<f64>,
    /// `ln p(y)`.
    pub log_evidence: f64,
}

/// Exact posterior mean by enumerating all `2^N` state vectors.
///
/// Given states `q`, `x` is Gaussian with diagonal covariance `D_q`, so
/// `y ~ N(0, Phi D_q Phi^T + sigma_z2 I)` and
/// `E[x | y, q] = D_q Phi^T (Phi D_q Phi^T + sigma_z2 I)^-1 y`. State weights
/// are accumulated in the log domain.
pub fn exact_mmse(
    phi: &SparseSignMatrix,
    y: &[f64],
    prior: &MixturePrior,
    sigma_z2: f64,
) -> Result<ExactPosterior> {
    let (m, n) = (phi.m(), phi.n());
    check_len(m, y.len())?;
    if n > EXACT_MAX_N {
        return Err(Error::Size(format!(
            "enumeration is capped at N = {EXACT_MAX_N}, got {n}"
        )));
    }
    let v0 = prior.sigma0() * prior.sigma0();
    let v1 = prior.sigma1() * prior.sigma1();
    if !(sigma_z2 >= 1e-6 * v0) {
        return param(format!(
            "noise variance must be at least 1e-6 sigma0^2, got {sigma_z2}"
        ));
    }
    let dense = phi.to_dense();
    let a = DMatrix::from_fn(m, n, |j, i| dense[j][i]);
    let yv = DVector::from_column_slice(y);
    let (ln_s, ln_1s) = (prior.s().ln(), (1.0 - prior.s()).ln());
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();

    let mut max_lw = f64::NEG_INFINITY;
    let mut total = 0.0;
    let mut mean = vec![0.0; n];
    let mut qsum = vec![0.0; n];
    let mut d = vec![0.0; n];
    for state in 0u32..(1u32 << n) {
        let mut lw = 0.0;
        for (i, di) in d.iter_mut().enumerate() {
            let on = state >> i & 1 == 1;
            *di = if on { v1 } else { v0 };
            lw += if on { ln_s } else { ln_1s };
        }
        let mut cov = DMatrix::from_diagonal_element(m, m, sigma_z2);
        for j in 0..m {
            for k in j..m {
                let c: f64 = (0..n).map(|i| a[(j, i)] * a[(k, i)] * d[i]).sum();
                cov[(j, k)] += c;
                if k != j {
                    cov[(k, j)] += c;
                }
            }
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::Numeric("measurement covariance is not positive definite".into()))?;
        let alpha = chol.solve(&yv);
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        lw += -0.5 * (yv.dot(&alpha) + log_det + m as f64 * ln_2pi);

        if lw > max_lw {
            let r = (max_lw - lw).exp();
            total *= r;
            mean.iter_mut().for_each(|v| *v *= r);
            qsum.iter_mut().for_each(|v| *v *= r);
            max_lw = lw;
        }
        let w = (lw - max_lw).exp();
        total += w;
        let back = a.tr_mul(&alpha);
        for i in 0..n {
            mean[i] += w * d[i] * back[i];
            if state >> i & 1 == 1 {
                qsum[i] += w;
            }
        }
    }
    Ok(ExactPosterior {
        x_mmse: mean.iter().map(|v| v / total).collect(),
        q_post: qsum.iter().map(|v| v / total).collect(),
        log_evidence: max_lw + total.ln(),
    })
}

/// Spectral norm estimate from `iters` power iterations on `Phi^T Phi`.
pub fn spectral_norm(phi: &SparseSignMatrix, iters: usize) -> f64 {
    let n = phi.n();
    if n == 0 || phi.m() == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma2 = 0.0;
    for _ in 0..iters {
        let w = phi.transpose_mul(&phi.encode(&v).expect("sized")).expect("sized");
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        sigma2 = norm;
        v = w.into_iter().map(|x| x / norm).collect();
    }
    sigma2.sqrt()
}

/// Iterative hard thresholding keeping the `k` largest magnitudes.
///
/// The step size is `1 / ||Phi||^2`. Iteration stops after `iters` steps or
/// once an update leaves the estimate unchanged.
pub fn iht_decode(phi: &SparseSignMatrix, y: &[f64], k: usize, iters: usize) -> Result<Vec<f64>> {
    let n = phi.n();
    check_len(phi.m(), y.len())?;
    if k == 0 || k > n {
        return param(format!("sparsity must lie in 1..={n}, got {k}"));
    }
    let norm = spectral_norm(phi, 50);
    let mut x = vec![0.0; n];
    if norm == 0.0 {
        return Ok(x);
    }
    let kappa = 1.0 / (norm * norm);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..iters {
        let fit = phi.encode(&x)?;
        let resid: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
        let grad = phi.transpose_mul(&resid)?;
        let mut z: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + kappa * g).collect();
        order.sort_by(|&a, &b| z[b].abs().total_cmp(&z[a].abs()).then(a.cmp(&b)));
        for &i in &order[k..] {
            z[i] = 0.0;
        }
        if z == x {
            break;
        }
        x = z;
    }
    Ok(x)
}

/// Default group size: `max(8, floor(M / ceil(4 ln N)))`.
pub fn default_m1(m: usize, n: usize) -> usize {
    let groups = (4.0 * (n.max(2) as f64).ln()).ceil() as usize;
    (m / groups.max(1)).max(8)
}

/// Median-of-groups sketch decoder.
///
/// Rows are split into `floor(M / m1)` consecutive groups of `m1` rows (the
/// remainder is unused). With the matrix rescaled to `+-sqrt(N / L)` entries,
/// each group gives the estimate `(1 / m1) sum_j Phi~_ji y~_j` of `x_i`; the
/// output is the median over groups (mean of the middle pair when even).
pub fn median_decode(phi: &SparseSignMatrix, y: &[f64], m1: usize) -> Result<Vec<f64>> {
    let (m, n) = (phi.m(), phi.n());
    check_len(m, y.len())?;
    if m1 == 0 || m1 > m {
        return param(format!("group size must lie in 1..={m}, got {m1}"));
    }
    let groups = m / m1;
    let scale = n as f64 / phi.l() as f64 / m1 as f64;
    let mut est = vec![vec![0.0; groups]; n];
    for j in 0..groups * m1 {
        let g = j / m1;
        for &(i, s) in phi.row(j) {
            est[i][g] += f64::from(s) * y[j];
        }
    }
    Ok(est
        .into_iter()
        .map(|mut e| {
            e.sort_by(f64::total_cmp);
            let mid = groups / 2;
            let med = if groups % 2 == 1 {
                e[mid]
            } else {
                0.5 * (e[mid - 1] + e[mid])
            };
            med * scale
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub eta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub s: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub n: usize,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.gamma > 0.0 && self.mu > 0.0) {
            return param("eta, gamma and mu must be positive");
        }
        if !(self.s > 0.0 && self.s < 1.0 && self.sigma0 > 0.0 && self.sigma0 <= self.sigma1) {
            return param("need 0 < S < 1 and 0 < sigma0 <= sigma1");
        }
        if self.n < 2 {
            return param("n must be at least 2");
        }
        if self.s * (self.n as f64).powf(1.0 + self.gamma) <= 1.0 {
            return param("S N^(1 + gamma) must exceed 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1 {
    /// `eta ln(S N^(1+gamma)) / S`.
    pub l: f64,
    /// `2K + (N - K)(sigma0 / sigma1)^2`.
    pub bracket: f64,
    /// `(1 + 2/eta)(1 + gamma) / mu^2 * bracket * ln N`, without the hidden constant.
    pub m_expr: f64,
    /// `sqrt(2 ln(S N^(1+gamma)) / (S N))`.
    pub q_bound: f64,
    /// Matrix sparsity `N / L`.
    pub sparsity: f64,
}

impl Theorem1 {
    /// `s Q^2`, which equals `2 / eta`.
    pub fn s_q2(&self) -> f64 {
        self.sparsity * self.q_bound * self.q_bound
    }
}

pub fn theorem1_params(bp: &BoundParams) -> Result<Theorem1> {
    bp.validate()?;
    let n = bp.n as f64;
    let lg = (bp.s * n.powf(1.0 + bp.gamma)).ln();
    let l = bp.eta * lg / bp.s;
    let k = bp.s * n;
    let ratio = bp.sigma0 / bp.sigma1;
    let bracket = 2.0 * k + (n - k) * ratio * ratio;
    let m_expr = (1.0 + 2.0 / bp.eta) * (1.0 + bp.gamma) / (bp.mu * bp.mu) * bracket * n.ln();
    Ok(Theorem1 {
        l,
        bracket,
        m_expr,
        q_bound: (2.0 * lg / k).sqrt(),
        sparsity: n / l,
    })
}

/// Wilson score interval at 95% for `hits / trials`.
pub fn wilson_interval(hits: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let nt = trials as f64;
    let p = hits as f64 / nt;
    let denom = 1.0 + z * z / nt;
    let center = (p + z * z / (2.0 * nt)) / denom;
    let half = z / denom * (p * (1.0 - p) / nt + z * z / (4.0 * nt * nt)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub hits: usize,
    pub frequency: f64,
    pub wilson: (f64, f64),
    pub bound: f64,
    /// True unless the whole Wilson interval lies above the bound.
    pub pass: bool,
    /// Distance in standard deviations between the mean statistic and the
    /// event threshold, from a normal approximation. For the l-infinity event
    /// it is the gap between the threshold and the typical peak `sqrt(2 ln K)`,
    /// in units of sigma1.
    pub z_margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub gamma: f64,
    pub trials: usize,
    /// Lower l2 tail, upper l2 tail, large-state count, l-infinity.
    pub checks: [BoundCheck; 4],
    /// Set when some threshold sits within three standard deviations of the
    /// mean, where the asymptotic rates are not expected to hold yet.
    pub regime_warning: bool,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Monte Carlo frequencies of the four norm-bound violation events.
pub fn validate_norm_bounds(
    prior: &MixturePrior,
    n: usize,
    gamma: f64,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    if trials < 1000 {
        return param(format!("at least 1000 trials are required, got {trials}"));
    }
    if !(gamma > 0.0) || n < 2 {
        return param("gamma must be positive and n at least 2");
    }
    let (s, v0, v1) = (
        prior.s(),
        prior.sigma0() * prior.sigma0(),
        prior.sigma1() * prior.sigma1(),
    );
    let nf = n as f64;
    let lg = (s * nf.powf(1.0 + gamma)).ln();
    if !(lg > 0.0) {
        return param("S N^(1 + gamma) must exceed 1");
    }
    let lower = s * nf * v1;
    let upper = nf * (2.0 * s * v1 + (1.0 - s) * v0);
    let count_max = 1.5 * s * nf;
    let linf_max = (2.0 * lg).sqrt() * prior.sigma1();

    let mut hits = [0usize; 4];
    for t in 0..trials {
        let sig = sample_signal(prior, n, derive_seed(seed, &[t as u64]))?;
        let energy: f64 = sig.x.iter().map(|v| v * v).sum();
        let count = sig.q.iter().filter(|&&q| q == 1).count() as f64;
        let peak = sig.x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        hits[0] += usize::from(energy < lower);
        hits[1] += usize::from(energy > upper);
        hits[2] += usize::from(count > count_max);
        hits[3] += usize::from(peak >= linf_max);
    }

    let mean_e = prior.second_moment() * nf;
    let fourth = 3.0 * (s * v1 * v1 + (1.0 - s) * v0 * v0);
    let sd_e = (nf * (fourth - prior.second_moment().powi(2))).sqrt();
    let sd_c = (nf * s * (1.0 - s)).sqrt();
    let z_peak = linf_max / prior.sigma1() - (2.0 * (s * nf).max(1.0).ln()).sqrt();
    let margins = [
        (mean_e - lower) / sd_e,
        (upper - mean_e) / sd_e,
        (count_max - s * nf) / sd_c,
        z_peak,
    ];
    let rate = nf.powf(-gamma);
    let bounds = [rate, rate, rate, 0.5 * rate];
    let names = ["l2_lower_tail", "l2_upper_tail", "large_count", "linf"];
    let checks = std::array::from_fn(|k| {
        let wilson = wilson_interval(hits[k], trials);
        BoundCheck {
            name: names[k],
            hits: hits[k],
            frequency: hits[k] as f64 / trials as f64,
            wilson,
            bound: bounds[k],
            pass: wilson.0 <= bounds[k],
            z_margin: margins[k],
        }
    });
    Ok(BoundReport {
        n,
        gamma,
        trials,
        regime_warning: margins[..3].iter().any(|&z| z < 3.0),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{generate_matrix, MatrixParams};
    use crate::signal::normal_pdf;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn prior() -> MixturePrior {
        MixturePrior::new(0.1, 1.0, 10.0).unwrap()
    }

    fn random_matrix(n: usize, m: usize, l: usize, seed: u64) -> SparseSignMatrix {
        generate_matrix(&MatrixParams {
            n,
            m,
            l,
            regular_columns: false,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn scalar_posterior_matches_hand_formula() {
        let phi = SparseSignMatrix::from_rows(1, vec![vec![(0, -1)]], 0).unwrap();
        let pr = prior();
        let (y, z2) = (-7.5, 0.3);
        let post = exact_mmse(&phi, &[y], &pr, z2).unwrap();
        // x = -y' with y' observed; both states are Gaussian in x.
        let (v0, v1) = (1.0, 100.0);
        let e0 = (1.0 - pr.s()) * normal_pdf(y, 0.0, v0 + z2);
        let e1 = pr.s() * normal_pdf(y, 0.0, v1 + z2);
        let q = e1 / (e0 + e1);
        let m0 = -y * v0 / (v0 + z2);
        let m1 = -y * v1 / (v1 + z2);
        let mean = (1.0 - q) * m0 + q * m1;
        assert!((post.q_post[0] - q).abs() < 1e-12);
        assert!((post.x_mmse[0] - mean).abs() < 1e-12 * mean.abs());
        assert!((post.log_evidence - (e0 + e1).ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_measurements_give_zero_estimate() {
        let phi = random_matrix(10, 5, 3, 1);
        let post = exact_mmse(&phi, &[0.0; 5], &prior(), 0.01).unwrap();
        assert!(post.x_mmse.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn evidence_integrates_to_one_for_scalar_model() {
        // p(y) over a fine quadrature of y must integrate to one.
        let phi = SparseSignMatrix::from_rows(1, vec![vec![(0, 1)]], 0).unwrap();
        let h = 0.01;
        let total: f64 = (-8000..=8000)
            .map(|k| {
                let y = k as f64 * h;
                exact_mmse(&phi, &[y], &prior(), 0.5).unwrap().log_evidence.exp() * h
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn permuting_columns_permutes_estimates() {
        let n = 8;
        let phi = random_matrix(n, 5, 3, 4);
        let mut rng = crate::rng::rng(9);
        let y: Vec<f64> = (0..5).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let base = exact_mmse(&phi, &y, &prior(), 0.05).unwrap();
        let perm = [3usize, 0, 7, 5, 1, 6, 2, 4];
        let rows = (0..phi.m())
            .map(|j| phi.row(j).iter().map(|&(c, s)| (perm[c], s)).collect())
            .collect();
        let permuted = SparseSignMatrix::from_rows(n, rows, 0).unwrap();
        let post = exact_mmse(&permuted, &y, &prior(), 0.05).unwrap();
        for i in 0..n {
            assert!((post.x_mmse[perm[i]] - base.x_mmse[i]).abs() < 1e-9);
            assert!((post.q_post[perm[i]] - base.q_post[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn enumeration_limits() {
        let big = random_matrix(17, 2, 2, 0);
        assert!(matches!(
            exact_mmse(&big, &[0.0; 2], &prior(), 0.1),
            Err(Error::Size(_))
        ));
        let phi = random_matrix(4, 2, 2, 0);
        assert!(exact_mmse(&phi, &[0.0; 2], &prior(), 1e-9).is_err());
    }

    #[test]
    fn iht_recovers_sparse_signal_through_signed_identity() {
        let n = 40;
        let mut rng = crate::rng::rng(2);
        let rows: Vec<Vec<(usize, i8)>> = (0..n)
            .map(|i| vec![(i, if rng.gen_bool(0.5) { 1 } else { -1 })])
            .collect();
        let phi = SparseSignMatrix::from_rows(n, rows, 0).unwrap();
        let mut x = vec![0.0; n];
        for (k, i) in [3usize, 11, 19, 30].into_iter().enumerate() {
            x[i] = 5.0 + k as f64;
        }
        let y = phi.encode(&x).unwrap();
        assert_eq!(iht_decode(&phi, &y, 4, 200).unwrap(), x);
        assert_eq!(iht_decode(&phi, &[0.0; 40], 4, 200).unwrap(), vec![0.0; n]);
        assert!(iht_decode(&phi, &y, 41, 10).is_err());
    }

    #[test]
    fn power_iteration_matches_dense_norm() {
        let phi = random_matrix(30, 20, 5, 8);
        let d = phi.to_dense();
        let a = DMatrix::from_fn(20, 30, |j, i| d[j][i]);
        let exact = a.singular_values().max();
        assert!((spectral_norm(&phi, 50) - exact).abs() < 1e-3 * exact);
    }

    #[test]
    fn median_decoder_basics() {
        let phi = random_matrix(64, 64, 8, 3);
        assert_eq!(median_decode(&phi, &[0.0; 64], 16).unwrap(), vec![0.0; 64]);
        assert!(median_decode(&phi, &[0.0; 64], 65).is_err());
        assert_eq!(default_m1(256, 256), 256 / 23);
        assert_eq!(default_m1(1000, 1000), 1000 / 28);
    }

    #[test]
    fn median_decoder_is_unbiased_on_a_single_group() {
        // One group with every row: the estimate is (N / L M) Phi^T y.
        let phi = random_matrix(20, 10, 4, 5);
        let x: Vec<f64> = (0..20).map(|i| i as f64 - 7.0).collect();
        let y = phi.encode(&x).unwrap();
        let back = phi.transpose_mul(&y).unwrap();
        let est = median_decode(&phi, &y, 10).unwrap();
        for (e, b) in est.iter().zip(&back) {
            assert!((e - b * 20.0 / 40.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn iht_output_is_k_sparse(seed in 0u64..500, k in 1usize..12) {
            let phi = random_matrix(24, 12, 4, seed);
            let mut rng = crate::rng::rng(seed);
            let y: Vec<f64> = (0..12).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let x = iht_decode(&phi, &y, k, 30).unwrap();
            prop_assert!(x.iter().filter(|v| **v != 0.0).count() <= k);
        }

        #[test]
        fn median_decoder_flip_equivariance(seed in 0u64..500, col in 0usize..32) {
            let phi = random_matrix(32, 48, 6, seed);
            let mut rng = crate::rng::rng(seed ^ 0xabc);
            let mut x: Vec<f64> = (0..32).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y = phi.encode(&x).unwrap();
            let base = median_decode(&phi, &y, 8).unwrap();
            let rows = (0..phi.m())
                .map(|j| phi.row(j).iter().map(|&(c, s)| (c, if c == col { -s } else { s })).collect())
                .collect();
            let flipped = SparseSignMatrix::from_rows(32, rows, 0).unwrap();
            x[col] = -x[col];
            let y2 = flipped.encode(&x).unwrap();
            let est = median_decode(&flipped, &y2, 8).unwrap();
            for i in 0..32 {
                let want = if i == col { -base[i] } else { base[i] };
                prop_assert!((est[i] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn theorem1_arithmetic() {
        let bp = BoundParams {
            eta: 1.0,
            gamma: 1.0,
            mu: 1.0,
            s: 0.1,
            sigma0: 1.0,
            sigma1: 10.0,
            n: 1000,
        };
        let t = theorem1_params(&bp).unwrap();
        assert!((t.l - 1e5f64.ln() / 0.1).abs() < 1e-9);
        assert!((t.l - 115.129).abs() < 1e-3);
        let same = theorem1_params(&BoundParams { sigma1: 1.0, ..bp }).unwrap();
        assert!((same.bracket - 1100.0).abs() < 1e-9);
        let mut rng = crate::rng::rng(77);
        for _ in 0..20 {
            let bp = BoundParams {
                eta: rng.gen_range(0.1..5.0),
                gamma: rng.gen_range(0.1..2.0),
                mu: rng.gen_range(0.1..3.0),
                s: rng.gen_range(0.01..0.5),
                sigma0: 1.0,
                sigma1: rng.gen_range(1.5..20.0),
                n: rng.gen_range(100..100_000),
            };
            let t = theorem1_params(&bp).unwrap();
            assert!((t.s_q2() - 2.0 / bp.eta).abs() < 1e-12);
        }
        assert!(theorem1_params(&BoundParams { eta: 0.0, ..bp }).is_err());
    }

    #[test]
    fn wilson_interval_reference_values() {
        let (lo, hi) = wilson_interval(0, 1000);
        assert!(lo.abs() < 1e-15);
        assert!((hi - 0.003_826).abs() < 1e-5);
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.403_8).abs() < 1e-3 && (hi - 0.596_2).abs() < 1e-3);
    }

    #[test]
    fn weak_separation_is_flagged() {
        let pr = MixturePrior::new(0.1, 1.0, 1.1).unwrap();
        let report = validate_norm_bounds(&pr, 30, 0.5, 1000, 1).unwrap();
        assert!(report.regime_warning);
        assert!(validate_norm_bounds(&pr, 30, 0.5, 999, 1).is_err());
    }

    #[test]
    fn lower_tail_frequency_falls_with_n() {
        let f = |n| {
            validate_norm_bounds(&prior(), n, 0.5, 2000, 3).unwrap().checks[0].frequency
        };
        assert!(f(1000) < f(200));
    }
}
