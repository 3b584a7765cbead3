//! Grid-codec engine.
//!
//! Messages are densities sampled at the `p` grid points. A constraint
//! update places each incoming message (reflected by its edge sign) as mass on
//! a circular array of length `T`, so bin `k` holds the value `k * delta`
//! modulo `T`. Leave-one-out convolutions use prefix and suffix products of
//! the spectra, and the noise density enters through its characteristic
//! function. Variable updates use the quotient of the full product by the
//! excluded message, with every factor floored at `1e-12` of its maximum.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use super::{Engine, Marginals, Telemetry};
use crate::graph::FactorGraph;
use crate::grid::{fast_len, Grid, GridPdf};
use crate::signal::{normal_pdf, MixturePrior};

const FLOOR: f64 = 1e-12;
const CLIP_WARN: f64 = 0.1;

pub(crate) struct GridEngine<'a> {
    graph: &'a FactorGraph,
    y: &'a [f64],
    prior: &'a MixturePrior,
    grid: Grid,
    t_len: usize,
    fwd: Arc<dyn RealToComplex<f64>>,
    inv: Arc<dyn ComplexToReal<f64>>,
    /// Characteristic function of the noise (or regularizer) per bin.
    noise: Vec<f64>,
    prior_vals: Vec<f64>,
    n0_vals: Vec<f64>,
    n1_vals: Vec<f64>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    telemetry: Telemetry,
}

impl<'a> GridEngine<'a> {
    pub fn new(
        graph: &'a FactorGraph,
        y: &'a [f64],
        prior: &'a MixturePrior,
        grid: Grid,
        sigma_z2: f64,
    ) -> Self {
        let (p, half, delta) = (grid.p(), grid.half(), grid.delta());
        // The window read back for a constraint spans y / delta +- half bins;
        // it must not wrap onto the bulk of the sum near zero.
        let y_max = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let reach = 2 * ((y_max / delta).ceil() as usize + half) + 2;
        let t_len = fast_len((2 * p).max(reach));
        let mut planner = RealFftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(t_len);
        let inv = planner.plan_fft_inverse(t_len);

        // Noiseless decoding still smooths by a quarter-bin Gaussian so the
        // point constraint is resolvable on the grid.
        let var = if sigma_z2 > 0.0 {
            sigma_z2
        } else {
            0.25 * delta * delta
        };
        let noise = (0..t_len / 2 + 1)
            .map(|k| {
                let w = 2.0 * std::f64::consts::PI * k as f64 / (t_len as f64 * delta);
                (-0.5 * var * w * w).exp()
            })
            .collect();

        let prior_vals = GridPdf::from_prior(grid, prior).values().to_vec();
        let v0 = prior.sigma0() * prior.sigma0();
        let v1 = prior.sigma1() * prior.sigma1();
        let n0_vals = grid.points().map(|t| normal_pdf(t, 0.0, v0)).collect();
        let n1_vals = grid.points().map(|t| normal_pdf(t, 0.0, v1)).collect();

        let n_edges = graph.edges().len();
        let mut v2c = Vec::with_capacity(n_edges * p);
        for _ in 0..n_edges {
            v2c.extend_from_slice(&prior_vals);
        }
        let c2v = vec![1.0 / (p as f64 * delta); n_edges * p];
        Self {
            graph,
            y,
            prior,
            grid,
            t_len,
            fwd,
            inv,
            noise,
            prior_vals,
            n0_vals,
            n1_vals,
            v2c,
            c2v,
            telemetry: Telemetry::default(),
        }
    }

    /// Max-normalized, floored copies of the messages into variable `v`.
    fn incoming(&self, v: usize, out: &mut Vec<f64>) {
        let p = self.grid.p();
        out.clear();
        for &e in self.graph.var_edges(v) {
            let msg = &self.c2v[e * p..(e + 1) * p];
            let max = msg.iter().fold(0.0f64, |a, &b| a.max(b));
            if max > 0.0 {
                out.extend(msg.iter().map(|&m| (m / max).max(FLOOR)));
            } else {
                out.extend(std::iter::repeat_n(1.0, p));
            }
        }
    }
}

/// Scales `v` to unit mass; returns false when the mass is not positive.
fn normalize(v: &mut [f64], delta: f64) -> bool {
    let mass = v.iter().sum::<f64>() * delta;
    if !(mass > 0.0 && mass.is_finite()) {
        return false;
    }
    let inv = 1.0 / mass;
    v.iter_mut().for_each(|x| *x *= inv);
    true
}

fn rescale_by_max(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |a, &b| a.max(b));
    if max > 0.0 && max.is_finite() {
        let inv = 1.0 / max;
        v.iter_mut().for_each(|x| *x *= inv);
    }
}

/// Damps `new` against `old` in place, stores it, and returns the L1 change.
fn commit(new: &mut [f64], old: &mut [f64], beta: Option<f64>, delta: f64) -> f64 {
    if let Some(b) = beta {
        for (n, o) in new.iter_mut().zip(old.iter()) {
            *n = b * *n + (1.0 - b) * o;
        }
    }
    let change = new
        .iter()
        .zip(old.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * delta;
    old.copy_from_slice(new);
    change
}

impl Engine for GridEngine<'_> {
    fn constraint_pass(&mut self, beta: Option<f64>) -> f64 {
        let (p, half, delta) = (self.grid.p(), self.grid.half() as isize, self.grid.delta());
        let t_len = self.t_len;
        let nb = t_len / 2 + 1;
        let mut buf = self.fwd.make_input_vec();
        let mut out = self.inv.make_output_vec();
        let mut fwd_scratch = self.fwd.make_scratch_vec();
        let mut inv_scratch = self.inv.make_scratch_vec();
        let mut spectra: Vec<Complex<f64>> = Vec::new();
        let mut prefix: Vec<Complex<f64>> = Vec::new();
        let mut suffix = vec![Complex::new(0.0, 0.0); nb];
        let mut work = vec![Complex::new(0.0, 0.0); nb];
        let mut new = vec![0.0; p];
        let mut max_change = 0.0f64;
        let one = Complex::new(1.0, 0.0);

        for c in 0..self.graph.n_con() {
            let range = self.graph.con_edges(c);
            let edges = &self.graph.edges()[range.clone()];
            let d = edges.len();
            spectra.resize(d * nb, one);
            prefix.resize(d * nb, one);
            for (k, (e, edge)) in range.clone().zip(edges).enumerate() {
                buf.iter_mut().for_each(|b| *b = 0.0);
                let s = edge.sign as isize;
                let msg = &self.v2c[e * p..(e + 1) * p];
                for (i, &m) in msg.iter().enumerate() {
                    let idx = (s * (i as isize - half)).rem_euclid(t_len as isize) as usize;
                    buf[idx] = m * delta;
                }
                self.fwd
                    .process_with_scratch(&mut buf, &mut spectra[k * nb..(k + 1) * nb], &mut fwd_scratch)
                    .expect("buffers sized by plan");
            }
            // prefix[k] = product of spectra before k.
            for b in 0..nb {
                prefix[b] = one;
            }
            for k in 1..d {
                for b in 0..nb {
                    prefix[k * nb + b] = prefix[(k - 1) * nb + b] * spectra[(k - 1) * nb + b];
                }
            }
            for (b, s) in suffix.iter_mut().enumerate() {
                *s = Complex::new(self.noise[b], 0.0);
            }
            let pos0 = self.y[c] / delta;
            let scale = 1.0 / t_len as f64;
            for k in (0..d).rev() {
                for b in 0..nb {
                    work[b] = prefix[k * nb + b] * suffix[b];
                }
                work[0].im = 0.0;
                if t_len.is_multiple_of(2) {
                    work[nb - 1].im = 0.0;
                }
                self.inv
                    .process_with_scratch(&mut work, &mut out, &mut inv_scratch)
                    .expect("buffers sized by plan");
                for b in 0..nb {
                    suffix[b] *= spectra[k * nb + b];
                }

                let e = range.start + k;
                let s = edges[k].sign as f64;
                let mut in_window = 0.0;
                for (i, slot) in new.iter_mut().enumerate() {
                    let pos = pos0 - s * (i as f64 - half as f64);
                    let v = (circular_linear(&out, pos) * scale).max(0.0);
                    in_window += v;
                    *slot = v;
                }
                let clipped = (1.0 - in_window).max(0.0);
                if clipped > CLIP_WARN {
                    self.telemetry.clipped_warnings += 1;
                }
                self.telemetry.max_clipped = self.telemetry.max_clipped.max(clipped);
                if !normalize(&mut new, delta) {
                    // Nothing in this constraint's window: it carries no information.
                    self.telemetry.degenerate_messages += 1;
                    new.iter_mut().for_each(|v| *v = 1.0 / (p as f64 * delta));
                }
                let old = &mut self.c2v[e * p..(e + 1) * p];
                max_change = max_change.max(commit(&mut new, old, beta, delta));
            }
        }
        max_change
    }

    fn variable_pass(&mut self, beta: Option<f64>) -> f64 {
        let (p, delta) = (self.grid.p(), self.grid.delta());
        let mut inc = Vec::new();
        let mut full = vec![0.0; p];
        let mut new = vec![0.0; p];
        let mut max_change = 0.0f64;
        for v in 0..self.graph.n_var() {
            let edges = self.graph.var_edges(v);
            if edges.is_empty() {
                continue;
            }
            self.incoming(v, &mut inc);
            full.copy_from_slice(&self.prior_vals);
            rescale_by_max(&mut full);
            for k in 0..edges.len() {
                for (f, c) in full.iter_mut().zip(&inc[k * p..(k + 1) * p]) {
                    *f *= c;
                }
                rescale_by_max(&mut full);
            }
            for (k, &e) in edges.iter().enumerate() {
                for ((n, f), c) in new.iter_mut().zip(&full).zip(&inc[k * p..(k + 1) * p]) {
                    *n = f / c;
                }
                if !normalize(&mut new, delta) {
                    self.telemetry.degenerate_messages += 1;
                    new.copy_from_slice(&self.prior_vals);
                }
                let old = &mut self.v2c[e * p..(e + 1) * p];
                max_change = max_change.max(commit(&mut new, old, beta, delta));
            }
        }
        max_change
    }

    fn marginals(&self) -> Marginals {
        let n = self.graph.n_var();
        let s = self.prior.s();
        let mut out = Marginals {
            x_mmse: vec![0.0; n],
            x_map: vec![0.0; n],
            q: vec![s; n],
        };
        let p = self.grid.p();
        let mut inc = Vec::new();
        let mut prod = vec![1.0; p];
        for v in 0..n {
            let d = self.graph.var_edges(v).len();
            if d == 0 {
                // Unmeasured: the prior mean and mode are both zero.
                continue;
            }
            self.incoming(v, &mut inc);
            prod.iter_mut().for_each(|x| *x = 1.0);
            for k in 0..d {
                for (f, c) in prod.iter_mut().zip(&inc[k * p..(k + 1) * p]) {
                    *f *= c;
                }
                rescale_by_max(&mut prod);
            }
            let a0: f64 = prod.iter().zip(&self.n0_vals).map(|(a, b)| a * b).sum();
            let a1: f64 = prod.iter().zip(&self.n1_vals).map(|(a, b)| a * b).sum();
            let z = s * a1 + (1.0 - s) * a0;
            if z > 0.0 {
                out.q[v] = s * a1 / z;
            }
            let post: Vec<f64> = prod.iter().zip(&self.prior_vals).map(|(a, b)| a * b).collect();
            if let Ok(pdf) = GridPdf::from_values(self.grid, post) {
                let m = pdf.moments();
                out.x_mmse[v] = m.mean;
                out.x_map[v] = m.argmax;
            }
        }
        out
    }

    fn telemetry(&mut self) -> &mut Telemetry {
        &mut self.telemetry
    }
}

/// Linear interpolation of a circular array at fractional index `pos`.
fn circular_linear(values: &[f64], pos: f64) -> f64 {
    let n = values.len() as isize;
    let lo = pos.floor();
    let frac = pos - lo;
    let i = (lo as isize).rem_euclid(n) as usize;
    let j = (i + 1) % values.len();
    (1.0 - frac) * values[i] + frac * values[j]
}
