//! Sampled-density message codec.
//!
//! Densities live on a symmetric grid of `p` (odd) points with spacing
//! `delta`, centered at zero. Products are pointwise; convolutions are linear
//! (zero-padded) and computed with a real FFT.

use realfft::RealFftPlanner;

use crate::error::{param, Error, Result};
use crate::signal::{normal_pdf, MixturePrior};

/// Tolerance used when checking normalization.
pub const NORM_TOL: f64 = 1e-9;

/// Uniform symmetric sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    p: usize,
    delta: f64,
}

impl Grid {
    pub fn new(p: usize, delta: f64) -> Result<Self> {
        if p == 0 || p.is_multiple_of(2) {
            return param(format!("grid size must be odd, got {p}"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return param(format!("grid spacing must be positive, got {delta}"));
        }
        Ok(Self { p, delta })
    }

    /// Spacing `spacing * sigma0`, covering at least `+-half_width * sigma1`
    /// with the smallest odd 3-5-7-smooth point count.
    pub fn for_prior(prior: &MixturePrior, spacing: f64, half_width: f64) -> Result<Self> {
        if !(spacing > 0.0 && half_width > 0.0) {
            return param("grid spacing factor and half width must be positive");
        }
        let delta = spacing * prior.sigma0();
        let span = 2.0 * half_width * prior.sigma1() / delta;
        Self::new(smooth_odd_at_least(span.ceil() as usize + 1), delta)
    }

    /// Default geometry: `delta = sigma0 / 2`, half width `6 sigma1`.
    pub fn default_for(prior: &MixturePrior) -> Self {
        Self::for_prior(prior, 0.5, 6.0).expect("positive factors")
    }

    /// `p = 525 = 3 * 5^2 * 7` samples spread over `+-6 sigma1`.
    pub fn preset_525(prior: &MixturePrior) -> Self {
        Self::new(525, 12.0 * prior.sigma1() / 524.0).expect("valid preset")
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Index of the zero point.
    pub fn half(&self) -> usize {
        self.p / 2
    }

    /// Largest representable magnitude.
    pub fn extent(&self) -> f64 {
        self.half() as f64 * self.delta
    }

    pub fn point(&self, i: usize) -> f64 {
        (i as f64 - self.half() as f64) * self.delta
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.p).map(|i| self.point(i))
    }
}

/// Smallest `n >= min` of the form `2^a 3^b 5^c 7^d`.
pub fn fast_len(min: usize) -> usize {
    (min.max(1)..).find(|&n| is_smooth(n, &[2, 3, 5, 7])).unwrap()
}

/// Smallest odd `n >= min` of the form `3^b 5^c 7^d`.
pub fn smooth_odd_at_least(min: usize) -> usize {
    (min.max(1)..)
        .find(|&n| n % 2 == 1 && is_smooth(n, &[3, 5, 7]))
        .unwrap()
}

fn is_smooth(mut n: usize, primes: &[usize]) -> bool {
    for &f in primes {
        while n.is_multiple_of(f) {
            n /= f;
        }
    }
    n == 1
}

/// Full linear convolution of two sequences (length `a + b - 1`) via a
/// zero-padded real FFT.
pub fn fft_linear_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let len = fast_len(out_len);
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut buf = fwd.make_input_vec();
    buf[..a.len()].copy_from_slice(a);
    let mut fa = fwd.make_output_vec();
    fwd.process(&mut buf, &mut fa).expect("sized by plan");
    buf.iter_mut().for_each(|v| *v = 0.0);
    buf[..b.len()].copy_from_slice(b);
    let mut fb = fwd.make_output_vec();
    fwd.process(&mut buf, &mut fb).expect("sized by plan");

    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    let mut out = inv.make_output_vec();
    inv.process(&mut fa, &mut out).expect("sized by plan");
    let scale = 1.0 / len as f64;
    out.truncate(out_len);
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Posterior summaries of a density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
    /// Mode; ties go to the smallest magnitude, then the negative point.
    pub argmax: f64,
}

/// A normalized density sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridPdf {
    grid: Grid,
    values: Vec<f64>,
}

impl GridPdf {
    /// Normalizes raw nonnegative samples. Fails when the mass is zero.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.p {
            return Err(Error::Shape {
                expected: grid.p,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Input("density samples must be finite and nonnegative".into()));
        }
        let mut pdf = Self { grid, values };
        pdf.normalize()?;
        Ok(pdf)
    }

    pub fn uniform(grid: Grid) -> Self {
        let v = 1.0 / (grid.p as f64 * grid.delta);
        Self {
            grid,
            values: vec![v; grid.p],
        }
    }

    /// Unit mass at grid index `k`.
    pub fn spike(grid: Grid, k: usize) -> Result<Self> {
        if k >= grid.p {
            return Err(Error::Range(format!("spike index {k} >= {}", grid.p)));
        }
        let mut values = vec![0.0; grid.p];
        values[k] = 1.0 / grid.delta;
        Ok(Self { grid, values })
    }

    /// Gaussian sampled at the grid points and renormalized (truncated
    /// Gaussian semantics when the variance is large relative to the grid).
    pub fn from_gaussian(grid: Grid, mean: f64, var: f64) -> Result<Self> {
        if !(var > 0.0) {
            return param(format!("variance must be positive, got {var}"));
        }
        if !(mean.abs() <= grid.extent()) {
            return Err(Error::Range(format!(
                "mean {mean} outside grid range +-{}",
                grid.extent()
            )));
        }
        let values = grid.points().map(|t| normal_pdf(t, mean, var)).collect();
        Self::from_values(grid, values)
    }

    /// `s N(0, sigma1^2) + (1 - s) N(0, sigma0^2)` for `s` in `[0, 1]`.
    pub fn from_mixture(grid: Grid, s: f64, sigma0: f64, sigma1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) || !(sigma0 > 0.0 && sigma1 > 0.0) {
            return param("mixture weight must lie in [0, 1] and deviations be positive");
        }
        let (v0, v1) = (sigma0 * sigma0, sigma1 * sigma1);
        let values = grid
            .points()
            .map(|t| s * normal_pdf(t, 0.0, v1) + (1.0 - s) * normal_pdf(t, 0.0, v0))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn from_prior(grid: Grid, prior: &MixturePrior) -> Self {
        Self::from_mixture(grid, prior.s(), prior.sigma0(), prior.sigma1())
            .expect("prior mass lies on any grid containing zero")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `sum values * delta`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.delta
    }

    fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Degenerate(format!("density has mass {mass}")));
        }
        let k = 1.0 / mass;
        self.values.iter_mut().for_each(|v| *v *= k);
        Ok(())
    }

    fn same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return param("densities live on different grids");
        }
        Ok(())
    }

    /// Pointwise product, renormalized.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .collect();
        Self::from_values(self.grid, values).map_err(|_| {
            Error::Degenerate("product of densities with disjoint supports".into())
        })
    }

    /// Density of the sum of two independent variables, truncated back to the
    /// grid. Returns the result and the fraction of mass that fell off-grid.
    pub fn convolve(&self, other: &Self) -> Result<(Self, f64)> {
        self.same_grid(other)?;
        let full = fft_linear_convolve(&self.values, &other.values);
        let d = self.grid.delta;
        let half = self.grid.half();
        let total: f64 = full.iter().map(|v| v.max(0.0)).sum::<f64>() * d * d;
        let values: Vec<f64> = full[half..half + self.grid.p]
            .iter()
            .map(|v| v.max(0.0) * d)
            .collect();
        let kept = values.iter().sum::<f64>() * d;
        if !(kept > 1e-12 * total) {
            return Err(Error::Degenerate("all convolved mass fell off the grid".into()));
        }
        let clipped = (1.0 - kept / total).max(0.0);
        Ok((Self::from_values(self.grid, values)?, clipped))
    }

    /// Density of `-X`.
    pub fn reflect(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Density of `X + t`, linearly interpolated onto the grid. Returns the
    /// result and the fraction of mass shifted off-grid.
    pub fn shift(&self, t: f64) -> Result<(Self, f64)> {
        if !t.is_finite() {
            return Err(Error::Input(format!("non-finite shift {t}")));
        }
        let p = self.grid.p;
        let offset = t / self.grid.delta;
        let values: Vec<f64> = (0..p)
            .map(|i| sample_linear(&self.values, i as f64 - offset))
            .collect();
        let kept = values.iter().sum::<f64>() * self.grid.delta;
        let clipped = (1.0 - kept).max(0.0);
        Ok((Self::from_values(self.grid, values)?, clipped))
    }

    pub fn moments(&self) -> Moments {
        let d = self.grid.delta;
        let mut mean = 0.0;
        let mut best = (f64::NEG_INFINITY, 0.0f64);
        for (i, &v) in self.values.iter().enumerate() {
            let t = self.grid.point(i);
            mean += t * v;
            let better = v > best.0
                || (v == best.0
                    && (t.abs() < best.1.abs() || (t.abs() == best.1.abs() && t < best.1)));
            if better {
                best = (v, t);
            }
        }
        mean *= d;
        let var = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let c = self.grid.point(i) - mean;
                c * c * v
            })
            .sum::<f64>()
            * d;
        Moments {
            mean,
            var,
            argmax: best.1,
        }
    }

    /// `sum |f - g| * delta`.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.delta
    }
}

/// Linear interpolation of `values` at fractional index `pos`; zero outside.
pub(crate) fn sample_linear(values: &[f64], pos: f64) -> f64 {
    let lo = pos.floor();
    let frac = pos - lo;
    let at = |k: f64| -> f64 {
        if k < 0.0 || k >= values.len() as f64 {
            0.0
        } else {
            values[k as usize]
        }
    };
    if frac == 0.0 {
        at(lo)
    } else {
        (1.0 - frac) * at(lo) + frac * at(lo + 1.0)
    }
}
