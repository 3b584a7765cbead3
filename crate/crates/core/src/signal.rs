//! Two-state mixture Gaussian signal model and the multi-level mismatch model.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{param, Error, Result};
use crate::rng::rng;

/// Per-coefficient prior: `N(0, sigma1^2)` with probability `s`, otherwise
/// `N(0, sigma0^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixturePrior {
    s: f64,
    sigma0: f64,
    sigma1: f64,
}

impl MixturePrior {
    pub fn new(s: f64, sigma0: f64, sigma1: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return param(format!("sparsity rate must lie in (0, 1), got {s}"));
        }
        if !(sigma0 > 0.0 && sigma0 < sigma1 && sigma1.is_finite()) {
            return param(format!(
                "need 0 < sigma0 < sigma1, got sigma0={sigma0}, sigma1={sigma1}"
            ));
        }
        Ok(Self { s, sigma0, sigma1 })
    }

    /// Sparsity rate `S`.
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    /// `E[X^2] = S sigma1^2 + (1 - S) sigma0^2`.
    pub fn second_moment(&self) -> f64 {
        self.s * self.sigma1 * self.sigma1 + (1.0 - self.s) * self.sigma0 * self.sigma0
    }

    /// Prior density at `t`.
    pub fn density(&self, t: f64) -> f64 {
        self.s * normal_pdf(t, 0.0, self.sigma1 * self.sigma1)
            + (1.0 - self.s) * normal_pdf(t, 0.0, self.sigma0 * self.sigma0)
    }
}

/// Normal density with the given mean and variance.
pub fn normal_pdf(t: f64, mean: f64, var: f64) -> f64 {
    let d = t - mean;
    (-0.5 * d * d / var).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// `C`-component mismatch model: every coefficient carries background
/// `N(0, sigma0^2)`; independently for each level `c in 1..C`, with
/// probability `s` it also carries an `N(0, (c sigma2)^2)` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiLevelPrior {
    s: f64,
    c: usize,
    sigma0: f64,
    sigma2: f64,
}

impl MultiLevelPrior {
    pub fn new(s: f64, c: usize, sigma0: f64, sigma2: f64) -> Result<Self> {
        if c < 2 {
            return param(format!("component count must be at least 2, got {c}"));
        }
        if !(s > 0.0 && (c - 1) as f64 * s < 1.0) {
            return param(format!("need 0 < (C-1)S < 1, got C={c}, S={s}"));
        }
        if !(sigma0 > 0.0 && sigma2 > 0.0 && sigma2.is_finite()) {
            return param(format!(
                "need sigma0 > 0 and sigma2 > 0, got {sigma0}, {sigma2}"
            ));
        }
        Ok(Self {
            s,
            c,
            sigma0,
            sigma2,
        })
    }

    /// The `C`-level model carrying the same expected energy as `prior`.
    pub fn matching(prior: &MixturePrior, c: usize) -> Result<Self> {
        let sigma2 = derive_sigma2(prior.sigma0, prior.sigma1, c)?;
        Self::new(prior.s, c, prior.sigma0, sigma2)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn components(&self) -> usize {
        self.c
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `E[X^2] = sigma0^2 + S sigma2^2 sum_{k<C} k^2`.
    pub fn second_moment(&self) -> f64 {
        let ksq: f64 = (1..self.c).map(|k| (k * k) as f64).sum();
        self.sigma0 * self.sigma0 + self.s * self.sigma2 * self.sigma2 * ksq
    }
}

/// Amplitude step `sigma2 = sqrt((sigma1^2 - sigma0^2) / sum_{k=1}^{C-1} k^2)`.
pub fn derive_sigma2(sigma0: f64, sigma1: f64, c: usize) -> Result<f64> {
    if c < 2 {
        return param(format!("component count must be at least 2, got {c}"));
    }
    if !(sigma0 > 0.0 && sigma1 >= sigma0) {
        return param(format!(
            "need 0 < sigma0 <= sigma1, got sigma0={sigma0}, sigma1={sigma1}"
        ));
    }
    let ksq: f64 = (1..c).map(|k| (k * k) as f64).sum();
    Ok(((sigma1 * sigma1 - sigma0 * sigma0) / ksq).sqrt())
}

/// A sampled signal together with its hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalInstance {
    pub x: Vec<f64>,
    /// State per coefficient. Two-state signals use 0/1; multi-level signals
    /// record the highest active level (0 when only background is present).
    pub q: Vec<u8>,
    pub seed: u64,
}

impl SignalInstance {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Draws `n` iid coefficients from `prior`.
///
/// Per coefficient the generator consumes one uniform (state) and then one
/// standard normal (amplitude).
pub fn sample_signal(prior: &MixturePrior, n: usize, seed: u64) -> Result<SignalInstance> {
    if n == 0 {
        return param("signal length must be at least 1");
    }
    let mut rng = rng(seed);
    let mut x = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for _ in 0..n {
        let large = rng.gen::<f64>() < prior.s;
        let z: f64 = rng.sample(StandardNormal);
        let sigma = if large { prior.sigma1 } else { prior.sigma0 };
        x.push(sigma * z);
        q.push(large as u8);
    }
    Ok(SignalInstance { x, q, seed })
}

/// Draws `n` iid coefficients from the multi-level model.
///
/// Per coefficient the generator consumes `C - 1` uniforms (one per level)
/// and then one standard normal; the sum of independent Gaussian terms is
/// drawn as a single Gaussian of the summed variance. With `C = 2` this
/// consumes the stream exactly like [`sample_signal`], so both models yield
/// the same realization for the same seed when `sigma1^2 = sigma0^2 + sigma2^2`.
pub fn sample_multilevel_signal(
    prior: &MultiLevelPrior,
    n: usize,
    seed: u64,
) -> Result<SignalInstance> {
    if n == 0 {
        return param("signal length must be at least 1");
    }
    let mut rng = rng(seed);
    let mut x = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let base = prior.sigma0 * prior.sigma0;
    for _ in 0..n {
        let mut var = base;
        let mut top = 0u8;
        for level in 1..prior.c {
            if rng.gen::<f64>() < prior.s {
                let amp = level as f64 * prior.sigma2;
                var += amp * amp;
                top = level as u8;
            }
        }
        let z: f64 = rng.sample(StandardNormal);
        x.push(var.sqrt() * z);
        q.push(top);
    }
    Ok(SignalInstance { x, q, seed })
}

/// Returns `y + z` with `z` iid `N(0, sigma_z2)`.
pub fn add_noise(y: &[f64], sigma_z2: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma_z2 >= 0.0) || !sigma_z2.is_finite() {
        return Err(Error::Parameter(format!(
            "noise variance must be nonnegative, got {sigma_z2}"
        )));
    }
    if sigma_z2 == 0.0 {
        return Ok(y.to_vec());
    }
    let sd = sigma_z2.sqrt();
    let mut rng = rng(seed);
    Ok(y.iter()
        .map(|&v| v + sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}
