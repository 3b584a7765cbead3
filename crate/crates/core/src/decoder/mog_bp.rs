//! Mixture-codec engine.
//!
//! Every message is a Gaussian mixture of at most `m` components. Products
//! and convolutions are exact and then reduced with IPRA, both inside the
//! prefix/suffix chains and after damping.

use super::{Engine, Marginals, Telemetry};
use crate::graph::FactorGraph;
use crate::grid::Grid;
use crate::mog::{Component, GaussMixture};
use crate::signal::{normal_pdf, MixturePrior};

pub(crate) struct MixtureEngine<'a> {
    graph: &'a FactorGraph,
    y: &'a [f64],
    prior: &'a MixturePrior,
    prior_mix: GaussMixture,
    m: usize,
    eval_grid: Grid,
    noise: Option<GaussMixture>,
    v2c: Vec<GaussMixture>,
    c2v: Vec<GaussMixture>,
    telemetry: Telemetry,
}

impl<'a> MixtureEngine<'a> {
    pub fn new(
        graph: &'a FactorGraph,
        y: &'a [f64],
        prior: &'a MixturePrior,
        m: usize,
        eval_grid: Grid,
        sigma_z2: f64,
    ) -> Self {
        let prior_mix = GaussMixture::from_prior(prior)
            .reduce_ipra(m)
            .expect("order validated");
        let n_edges = graph.edges().len();
        // A very wide Gaussian stands in for the flat initial message.
        let wide = GaussMixture::single(0.0, 1e6 * prior.second_moment()).expect("positive variance");
        Self {
            graph,
            y,
            prior,
            prior_mix: prior_mix.clone(),
            m,
            eval_grid,
            noise: (sigma_z2 > 0.0).then(|| GaussMixture::single(0.0, sigma_z2).expect("positive")),
            v2c: vec![prior_mix; n_edges],
            c2v: vec![wide; n_edges],
            telemetry: Telemetry::default(),
        }
    }

    fn reduce(&self, g: &GaussMixture) -> GaussMixture {
        g.reduce_ipra(self.m).expect("order validated")
    }

    fn l1_change(&self, a: &GaussMixture, b: &GaussMixture) -> f64 {
        self.eval_grid
            .points()
            .map(|t| (a.density(t) - b.density(t)).abs())
            .sum::<f64>()
            * self.eval_grid.delta()
    }

    fn damp(&self, new: GaussMixture, old: &GaussMixture, beta: Option<f64>) -> GaussMixture {
        match beta {
            Some(b) if b < 1.0 => self.reduce(&new.blend(old, b)),
            _ => new,
        }
    }

    /// Product of all incoming constraint messages of `v`, or `None` when the
    /// product vanishes.
    fn incoming_product(&self, v: usize) -> Option<GaussMixture> {
        let mut acc: Option<GaussMixture> = None;
        for &e in self.graph.var_edges(v) {
            acc = Some(match acc {
                None => self.c2v[e].clone(),
                Some(a) => self.reduce(&a.mix_multiply(&self.c2v[e]).ok()?),
            });
        }
        acc
    }
}

impl Engine for MixtureEngine<'_> {
    fn constraint_pass(&mut self, beta: Option<f64>) -> f64 {
        let mut max_change = 0.0f64;
        for c in 0..self.graph.n_con() {
            let range = self.graph.con_edges(c);
            let edges = &self.graph.edges()[range.clone()];
            let d = edges.len();
            let terms: Vec<GaussMixture> = range
                .clone()
                .zip(edges)
                .map(|(e, edge)| self.v2c[e].mix_affine(edge.sign, 0.0))
                .collect();
            // prefix[k] is the reduced sum density of terms before k.
            let mut prefix: Vec<Option<GaussMixture>> = Vec::with_capacity(d);
            prefix.push(self.noise.clone());
            for k in 1..d {
                let next = match &prefix[k - 1] {
                    None => terms[k - 1].clone(),
                    Some(a) => self.reduce(&a.mix_convolve(&terms[k - 1])),
                };
                prefix.push(Some(next));
            }
            let mut suffix: Option<GaussMixture> = None;
            for k in (0..d).rev() {
                let sum = match (&prefix[k], &suffix) {
                    (Some(a), Some(b)) => self.reduce(&a.mix_convolve(b)),
                    (Some(a), None) => a.clone(),
                    (None, Some(b)) => b.clone(),
                    // A single noiseless term pins the coefficient exactly;
                    // a narrow Gaussian keeps the message representable.
                    (None, None) => GaussMixture::single(0.0, 1e-6 * self.prior.sigma0().powi(2))
                        .expect("positive variance"),
                };
                suffix = Some(match suffix {
                    None => terms[k].clone(),
                    Some(b) => self.reduce(&b.mix_convolve(&terms[k])),
                });
                let s = edges[k].sign;
                let y = self.y[c];
                let new = sum.mix_affine(-s, f64::from(s) * y);
                let e = range.start + k;
                let new = self.damp(new, &self.c2v[e], beta);
                max_change = max_change.max(self.l1_change(&new, &self.c2v[e]));
                self.c2v[e] = new;
            }
        }
        max_change
    }

    fn variable_pass(&mut self, beta: Option<f64>) -> f64 {
        let mut max_change = 0.0f64;
        for v in 0..self.graph.n_var() {
            let edges = self.graph.var_edges(v);
            let d = edges.len();
            if d == 0 {
                continue;
            }
            // prefix[k]: prior times messages before k; None once it vanished.
            let mut prefix: Vec<Option<GaussMixture>> = Vec::with_capacity(d);
            prefix.push(Some(self.prior_mix.clone()));
            for k in 1..d {
                let next = prefix[k - 1]
                    .as_ref()
                    .and_then(|a| a.mix_multiply(&self.c2v[edges[k - 1]]).ok())
                    .map(|g| self.reduce(&g));
                prefix.push(next);
            }
            let mut suffix: Option<Option<GaussMixture>> = None;
            for k in (0..d).rev() {
                let e = edges[k];
                let prod = match (&prefix[k], &suffix) {
                    (Some(a), None) => Some(a.clone()),
                    (Some(a), Some(Some(b))) => a.mix_multiply(b).ok().map(|g| self.reduce(&g)),
                    _ => None,
                };
                let new = prod.unwrap_or_else(|| {
                    self.telemetry.degenerate_messages += 1;
                    self.prior_mix.clone()
                });
                suffix = Some(match suffix {
                    None => Some(self.c2v[e].clone()),
                    Some(Some(b)) => b.mix_multiply(&self.c2v[e]).ok().map(|g| self.reduce(&g)),
                    Some(None) => None,
                });
                let new = self.damp(new, &self.v2c[e], beta);
                max_change = max_change.max(self.l1_change(&new, &self.v2c[e]));
                self.v2c[e] = new;
            }
        }
        max_change
    }

    fn marginals(&self) -> Marginals {
        let n = self.graph.n_var();
        let s = self.prior.s();
        let v0 = self.prior.sigma0().powi(2);
        let v1 = self.prior.sigma1().powi(2);
        let mut out = Marginals {
            x_mmse: vec![0.0; n],
            x_map: vec![0.0; n],
            q: vec![s; n],
        };
        for v in 0..n {
            let Some(inc) = self.incoming_product(v) else {
                continue;
            };
            let against = |var: f64| -> f64 {
                inc.components()
                    .iter()
                    .map(|c: &Component| c.w * normal_pdf(c.mu, 0.0, c.var + var))
                    .sum()
            };
            let (a0, a1) = (against(v0), against(v1));
            let z = s * a1 + (1.0 - s) * a0;
            if z > 0.0 {
                out.q[v] = s * a1 / z;
            }
            if let Ok(post) = GaussMixture::from_prior(self.prior).mix_multiply(&inc) {
                let mo = post.mix_moments(&self.eval_grid);
                out.x_mmse[v] = mo.mean;
                out.x_map[v] = mo.argmax;
            }
        }
        out
    }

    fn telemetry(&mut self) -> &mut Telemetry {
        &mut self.telemetry
    }
}
