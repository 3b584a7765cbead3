//! Gaussian-mixture message codec.
//!
//! Products and convolutions of mixtures are exact but multiply the number
//! of components; [`GaussMixture::reduce_ipra`] brings the order back down by
//! greedy pairwise moment-matched merges.

use crate::error::{param, Error, Result};
use crate::grid::{Grid, GridPdf, Moments};
use crate::signal::{normal_pdf, MixturePrior};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub w: f64,
    pub mu: f64,
    pub var: f64,
}

/// A normalized Gaussian mixture with at least one component.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussMixture {
    comps: Vec<Component>,
}

impl GaussMixture {
    /// Validates components and renormalizes their weights.
    pub fn new(comps: Vec<Component>) -> Result<Self> {
        if comps.is_empty() {
            return param("mixture needs at least one component");
        }
        for c in &comps {
            if !(c.w > 0.0 && c.w.is_finite() && c.var > 0.0 && c.var.is_finite() && c.mu.is_finite()) {
                return param(format!("invalid mixture component {c:?}"));
            }
        }
        let total: f64 = comps.iter().map(|c| c.w).sum();
        Ok(Self {
            comps: comps
                .into_iter()
                .map(|c| Component { w: c.w / total, ..c })
                .collect(),
        })
    }

    pub fn single(mu: f64, var: f64) -> Result<Self> {
        Self::new(vec![Component { w: 1.0, mu, var }])
    }

    pub fn from_prior(prior: &MixturePrior) -> Self {
        Self::new(vec![
            Component {
                w: 1.0 - prior.s(),
                mu: 0.0,
                var: prior.sigma0() * prior.sigma0(),
            },
            Component {
                w: prior.s(),
                mu: 0.0,
                var: prior.sigma1() * prior.sigma1(),
            },
        ])
        .expect("prior components are valid")
    }

    /// Builds a mixture from log-domain weights, normalizing with log-sum-exp.
    fn from_log_weights(parts: Vec<(f64, f64, f64)>) -> Result<Self> {
        let max = parts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Degenerate("mixture weights vanished".into()));
        }
        let comps: Vec<Component> = parts
            .into_iter()
            .map(|(lw, mu, var)| Component {
                w: (lw - max).exp(),
                mu,
                var,
            })
            .filter(|c| c.w > 0.0)
            .collect();
        Self::new(comps)
    }

    pub fn components(&self) -> &[Component] {
        &self.comps
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn density(&self, t: f64) -> f64 {
        self.comps.iter().map(|c| c.w * normal_pdf(t, c.mu, c.var)).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.comps.iter().map(|c| c.w).sum()
    }

    pub fn mean(&self) -> f64 {
        self.comps.iter().map(|c| c.w * c.mu).sum()
    }

    /// `E[X^2]`.
    pub fn second_moment(&self) -> f64 {
        self.comps.iter().map(|c| c.w * (c.var + c.mu * c.mu)).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    /// Normalized product of two mixtures: all `|a| |b|` cross terms.
    ///
    /// Weights are carried in the log domain, so only a product whose every
    /// cross term vanishes (non-finite inputs) is reported as degenerate.
    pub fn mix_multiply(&self, other: &Self) -> Result<Self> {
        let mut parts = Vec::with_capacity(self.len() * other.len());
        for a in &self.comps {
            for b in &other.comps {
                let s = a.var + b.var;
                let d = a.mu - b.mu;
                let lw = a.w.ln() + b.w.ln()
                    - 0.5 * (d * d / s + (2.0 * std::f64::consts::PI * s).ln());
                let var = 1.0 / (1.0 / a.var + 1.0 / b.var);
                let mu = var * (a.mu / a.var + b.mu / b.var);
                parts.push((lw, mu, var));
            }
        }
        Self::from_log_weights(parts)
    }

    /// Density of the sum of independent variables: exact cross terms.
    pub fn mix_convolve(&self, other: &Self) -> Self {
        let mut comps = Vec::with_capacity(self.len() * other.len());
        for a in &self.comps {
            for b in &other.comps {
                comps.push(Component {
                    w: a.w * b.w,
                    mu: a.mu + b.mu,
                    var: a.var + b.var,
                });
            }
        }
        Self::new(comps).expect("cross terms of valid mixtures are valid")
    }

    /// Density of `sign * X + offset`.
    pub fn mix_affine(&self, sign: i8, offset: f64) -> Self {
        let s = if sign < 0 { -1.0 } else { 1.0 };
        Self {
            comps: self
                .comps
                .iter()
                .map(|c| Component {
                    mu: s * c.mu + offset,
                    ..*c
                })
                .collect(),
        }
    }

    /// `beta * self + (1 - beta) * other` as a mixture (not reduced).
    pub fn blend(&self, other: &Self, beta: f64) -> Self {
        if beta >= 1.0 {
            return self.clone();
        }
        let comps = self
            .comps
            .iter()
            .map(|c| Component { w: beta * c.w, ..*c })
            .chain(other.comps.iter().map(|c| Component {
                w: (1.0 - beta) * c.w,
                ..*c
            }))
            .collect();
        Self { comps }
    }

    /// Greedy pairwise replacement down to at most `m` components.
    ///
    /// Each step merges the pair with the smallest Hellinger distance between
    /// the (individually normalized) components; the merge matches weight,
    /// mean, and second moment. Ties go to the lexicographically first pair.
    pub fn reduce_ipra(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return param("model order must be at least 1");
        }
        let mut comps = self.comps.clone();
        if comps.len() <= m {
            return Ok(self.clone());
        }
        let k = comps.len();
        let mut dist = vec![f64::INFINITY; k * k];
        for i in 0..k {
            for j in i + 1..k {
                dist[i * k + j] = hellinger_sq(&comps[i], &comps[j]);
            }
        }
        let mut alive = vec![true; k];
        let mut count = k;
        while count > m {
            let mut best = (f64::INFINITY, 0, 0);
            for i in 0..k {
                if !alive[i] {
                    continue;
                }
                for j in i + 1..k {
                    if alive[j] && dist[i * k + j] < best.0 {
                        best = (dist[i * k + j], i, j);
                    }
                }
            }
            let (_, i, j) = best;
            comps[i] = merge(&comps[i], &comps[j]);
            alive[j] = false;
            count -= 1;
            for o in 0..k {
                if alive[o] && o != i {
                    let (a, b) = if o < i { (o, i) } else { (i, o) };
                    dist[a * k + b] = hellinger_sq(&comps[a], &comps[b]);
                }
            }
        }
        Ok(Self {
            comps: comps
                .into_iter()
                .zip(alive)
                .filter_map(|(c, a)| a.then_some(c))
                .collect(),
        })
    }

    /// Mean and variance in closed form; the mode is found by dense
    /// evaluation at the points of `grid`.
    pub fn mix_moments(&self, grid: &Grid) -> Moments {
        let mut best = (f64::NEG_INFINITY, 0.0f64);
        for t in grid.points() {
            let v = self.density(t);
            let better = v > best.0
                || (v == best.0
                    && (t.abs() < best.1.abs() || (t.abs() == best.1.abs() && t < best.1)));
            if better {
                best = (v, t);
            }
        }
        Moments {
            mean: self.mean(),
            var: self.variance(),
            argmax: best.1,
        }
    }

    /// Samples the mixture on `grid` (renormalized).
    pub fn rasterize(&self, grid: Grid) -> Result<GridPdf> {
        GridPdf::from_values(grid, grid.points().map(|t| self.density(t)).collect())
    }
}

/// Squared Hellinger distance between two normalized Gaussians.
pub fn hellinger_sq(a: &Component, b: &Component) -> f64 {
    let s = a.var + b.var;
    let d = a.mu - b.mu;
    let bc = (2.0 * (a.var * b.var).sqrt() / s).sqrt() * (-d * d / (4.0 * s)).exp();
    (1.0 - bc).max(0.0)
}

/// Moment-matched merge of two weighted components.
pub fn merge(a: &Component, b: &Component) -> Component {
    let w = a.w + b.w;
    let mu = (a.w * a.mu + b.w * b.mu) / w;
    let second = (a.w * (a.var + a.mu * a.mu) + b.w * (b.var + b.mu * b.mu)) / w;
    Component {
        w,
        mu,
        var: (second - mu * mu).max(f64::MIN_POSITIVE),
    }
}
