//! Damped belief-propagation decoding over the measurement factor graph.
//!
//! The prior and state-mixing factors of each coefficient form a tree hanging
//! off its variable node, so they are folded into the variable update: the
//! prior density enters every variable-to-constraint product, and the state
//! posterior is recovered afterwards by quadrature against the two component
//! densities. Each iteration is a flooding pass: all constraint nodes, then
//! all variable nodes, each reading only the previous half-iteration's
//! messages.

mod grid_bp;
mod mog_bp;

use std::time::Instant;

use crate::error::{check_len, param, Error, Result};
use crate::graph::{build_graph, FactorGraph};
use crate::grid::Grid;
use crate::matrix::SparseSignMatrix;
use crate::signal::MixturePrior;

/// Message representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Codec {
    /// Sampled densities on a fixed grid; constraint convolutions via FFT.
    Grid(Grid),
    /// Gaussian mixtures with at most `max_components` terms. `eval_grid` is
    /// only used to locate the posterior mode and to measure message change.
    Mixture { max_components: usize, eval_grid: Grid },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub codec: Codec,
    /// Weight of the new message in `beta * new + (1 - beta) * old`.
    pub beta: f64,
    pub damp_constraints: bool,
    pub damp_variables: bool,
    pub max_iters: usize,
    /// Early stop once the largest L1 message change drops to this value.
    pub tol: f64,
    /// Measurement noise variance.
    pub sigma_z2: f64,
    /// Halve `beta` once if the message change grows three iterations in a row.
    pub divergence_guard: bool,
}

impl DecoderConfig {
    /// Grid codec with the default geometry, `beta = 0.5`,
    /// `ceil(2 log2 n)` iterations and `tol = 1e-4`.
    pub fn new(prior: &MixturePrior, n: usize) -> Self {
        Self {
            codec: Codec::Grid(Grid::default_for(prior)),
            beta: 0.5,
            damp_constraints: true,
            damp_variables: true,
            max_iters: default_iters(n),
            tol: 1e-4,
            sigma_z2: 0.0,
            divergence_guard: true,
        }
    }

    /// Mixture codec with `m` components (default 6 in the CLI).
    pub fn mixture(prior: &MixturePrior, n: usize, m: usize) -> Self {
        let eval_grid = Grid::for_prior(prior, 0.25, 6.0).expect("positive factors");
        Self {
            codec: Codec::Mixture {
                max_components: m,
                eval_grid,
            },
            ..Self::new(prior, n)
        }
    }

    pub fn validate(&self, prior: &MixturePrior) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return param(format!("damping weight must lie in (0, 1], got {}", self.beta));
        }
        if self.max_iters == 0 {
            return param("max_iters must be at least 1");
        }
        if !(self.tol >= 0.0) {
            return param(format!("tolerance must be nonnegative, got {}", self.tol));
        }
        if !(self.sigma_z2 >= 0.0 && self.sigma_z2.is_finite()) {
            return param(format!("noise variance must be nonnegative, got {}", self.sigma_z2));
        }
        match self.codec {
            Codec::Grid(g) if g.delta() >= prior.sigma0() => param(format!(
                "grid spacing {} must be below sigma0 = {}",
                g.delta(),
                prior.sigma0()
            )),
            Codec::Mixture { max_components: 0, .. } => param("mixture order must be at least 1"),
            _ => Ok(()),
        }
    }
}

/// `ceil(2 log2 n)`, at least 1.
pub fn default_iters(n: usize) -> usize {
    ((2.0 * (n.max(2) as f64).log2()).ceil() as usize).max(1)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Telemetry {
    /// Largest L1 change over all messages, per iteration.
    pub max_change: Vec<f64>,
    /// Constraint messages that lost more than 10% of their mass off-grid.
    pub clipped_warnings: usize,
    pub max_clipped: f64,
    /// Messages that vanished and were replaced by a neutral density.
    pub degenerate_messages: usize,
    /// Iteration at which the divergence guard halved `beta`.
    pub beta_halved_at: Option<usize>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub x_mmse: Vec<f64>,
    pub x_map: Vec<f64>,
    /// `Pr(Q(i) = 1 | y)`.
    pub q_posterior: Vec<f64>,
    pub iters_run: usize,
    pub converged: bool,
    /// `||y - Phi x_mmse||_2`.
    pub residual_l2: f64,
    pub telemetry: Telemetry,
}

pub(crate) struct Marginals {
    pub x_mmse: Vec<f64>,
    pub x_map: Vec<f64>,
    pub q: Vec<f64>,
}

/// One message codec driven by [`run`].
pub(crate) trait Engine {
    /// Updates every constraint-to-variable message; returns the largest change.
    fn constraint_pass(&mut self, beta: Option<f64>) -> f64;
    /// Updates every variable-to-constraint message; returns the largest change.
    fn variable_pass(&mut self, beta: Option<f64>) -> f64;
    fn marginals(&self) -> Marginals;
    fn telemetry(&mut self) -> &mut Telemetry;
}

fn run<E: Engine>(engine: &mut E, cfg: &DecoderConfig) -> (usize, bool) {
    let mut beta = cfg.beta;
    let mut halved = false;
    let mut rising = 0;
    let mut converged = false;
    let mut iters = 0;
    for iter in 1..=cfg.max_iters {
        iters = iter;
        // There is no previous estimate to average with on the first pass.
        let damp = |on: bool| (on && iter > 1).then_some(beta);
        let dc = engine.constraint_pass(damp(cfg.damp_constraints));
        let dv = engine.variable_pass(damp(cfg.damp_variables));
        let change = dc.max(dv);
        let history = &mut engine.telemetry().max_change;
        if let Some(&prev) = history.last() {
            rising = if change > prev { rising + 1 } else { 0 };
        }
        history.push(change);
        if iter > 1 && change <= cfg.tol {
            converged = true;
            break;
        }
        if cfg.divergence_guard && !halved && rising >= 3 {
            beta *= 0.5;
            halved = true;
            engine.telemetry().beta_halved_at = Some(iter);
        }
    }
    (iters, converged)
}

/// Runs CS-BP on `y = Phi x (+ noise)` under `prior`.
pub fn decode(
    phi: &SparseSignMatrix,
    y: &[f64],
    prior: &MixturePrior,
    cfg: &DecoderConfig,
) -> Result<DecodeResult> {
    check_len(phi.m(), y.len())?;
    if let Some(v) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::Input(format!("non-finite measurement {v}")));
    }
    cfg.validate(prior)?;
    let start = Instant::now();
    let graph = build_graph(phi);
    let (marg, iters, converged, mut telemetry) = match cfg.codec {
        Codec::Grid(grid) => {
            let mut e = grid_bp::GridEngine::new(&graph, y, prior, grid, cfg.sigma_z2);
            finish(&mut e, &graph, cfg)
        }
        Codec::Mixture {
            max_components,
            eval_grid,
        } => {
            let mut e =
                mog_bp::MixtureEngine::new(&graph, y, prior, max_components, eval_grid, cfg.sigma_z2);
            finish(&mut e, &graph, cfg)
        }
    };
    let fitted = phi.encode(&marg.x_mmse)?;
    let residual_l2 = y
        .iter()
        .zip(&fitted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    telemetry.seconds = start.elapsed().as_secs_f64();
    Ok(DecodeResult {
        x_mmse: marg.x_mmse,
        x_map: marg.x_map,
        q_posterior: marg.q,
        iters_run: iters,
        converged,
        residual_l2,
        telemetry,
    })
}

fn finish<E: Engine>(
    e: &mut E,
    graph: &FactorGraph,
    cfg: &DecoderConfig,
) -> (Marginals, usize, bool, Telemetry) {
    let (iters, converged) = if graph.n_con() == 0 {
        (0, true)
    } else {
        run(e, cfg)
    };
    let marg = e.marginals();
    (marg, iters, converged, std::mem::take(e.telemetry()))
}

/// Decodes from the first `k` measurements for every `k` in `prefixes`.
pub fn progressive_decode(
    phi: &SparseSignMatrix,
    y: &[f64],
    prefixes: &[usize],
    prior: &MixturePrior,
    cfg: &DecoderConfig,
) -> Result<Vec<DecodeResult>> {
    check_len(phi.m(), y.len())?;
    if prefixes.windows(2).any(|w| w[1] < w[0]) {
        return param("prefix lengths must be ascending");
    }
    prefixes
        .iter()
        .map(|&k| {
            let sub = phi.take_rows(k)?;
            decode(&sub, &y[..k], prior, cfg)
        })
        .collect()
}
