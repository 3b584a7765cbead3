//! Sweeps, timing runs, and oracle comparisons.
//!
//! Seeding uses common random numbers: the signal and noise of trial `t`
//! depend only on `(base_seed, n, t)`, so every sweep point (measurement
//! count, row weight, noise level, component count) sees the same signals,
//! and the matrix depends on `(matrix seed, n, m, l, t)`. Work is spread
//! over `(point, trial)` jobs and rows are emitted in canonical order, so the
//! output does not depend on the worker count.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::time::Instant;

use rayon::prelude::*;

use csbp_core::decoder::{decode, DecoderConfig};
use csbp_core::matrix::{generate_matrix, SparseSignMatrix};
use csbp_core::oracles::{default_m1, exact_mmse, iht_decode, median_decode};
use csbp_core::rng::derive_seed;
use csbp_core::signal::{
    add_noise, sample_multilevel_signal, sample_signal, MixturePrior, MultiLevelPrior,
};

use crate::config::{Algorithm, ExperimentConfig, Regularity};
use crate::CliError;

const TAG_SIGNAL: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_MATRIX: u64 = 3;

pub const CSV_HEADER: &str = "experiment,algorithm,n,m,l,s,sigma0,sigma1,sigma_z2,c_components,codec,trial,seed,l2_error,linf_error,iters,converged,seconds";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub sigma_z2: f64,
    pub c: usize,
}

/// One CSV row. Summary rows carry `trial = -1` and lower-median statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment: String,
    pub algorithm: Algorithm,
    pub point: Point,
    pub s: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub codec: &'static str,
    pub trial: i64,
    pub seed: u64,
    pub l2_error: f64,
    pub linf_error: f64,
    pub iters: usize,
    pub converged: bool,
    pub seconds: Option<f64>,
}

impl TrialRecord {
    pub fn csv_line(&self) -> String {
        let p = &self.point;
        let seconds = self.seconds.map_or_else(|| "NA".to_string(), |s| format!("{s:?}"));
        format!(
            "{},{},{},{},{},{:?},{:?},{:?},{:?},{},{},{},{},{:?},{:?},{},{},{}",
            self.experiment,
            self.algorithm,
            p.n,
            p.m,
            p.l,
            self.s,
            self.sigma0,
            self.sigma1,
            p.sigma_z2,
            p.c,
            self.codec,
            self.trial,
            self.seed,
            self.l2_error,
            self.linf_error,
            self.iters,
            u8::from(self.converged),
            seconds
        )
    }
}

/// Mean and lower median of the per-trial l2 errors of one (point, algorithm).
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub point: Point,
    pub algorithm: Algorithm,
    pub median_l2: f64,
    pub mean_l2: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOutput {
    /// Trial rows then summary rows, per point.
    pub rows: Vec<TrialRecord>,
    pub summaries: Vec<Summary>,
}

impl SweepOutput {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    /// Lower-median l2 error for the first summary matching the filter.
    pub fn median(&self, algorithm: Algorithm, f: impl Fn(&Point) -> bool) -> Option<f64> {
        self.summaries
            .iter()
            .find(|s| s.algorithm == algorithm && f(&s.point))
            .map(|s| s.median_l2)
    }
}

/// Element `(len - 1) / 2` of the sorted values.
pub fn lower_median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Hash of the shared trial inputs, used to check every algorithm sees the
/// same `(Phi, x, y)`.
fn fingerprint(phi: &SparseSignMatrix, x: &[f64], y: &[f64]) -> u64 {
    let mut h = DefaultHasher::new();
    (phi.m(), phi.n(), phi.l()).hash(&mut h);
    for j in 0..phi.m() {
        phi.row(j).hash(&mut h);
    }
    for v in x.iter().chain(y) {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Signal, matrix and measurements of one trial.
pub struct Instance {
    pub phi: SparseSignMatrix,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub signal_seed: u64,
}

pub fn instance(cfg: &ExperimentConfig, prior: &MixturePrior, pt: &Point, trial: usize) -> Result<Instance, CliError> {
    let t = trial as u64;
    let signal_seed = derive_seed(cfg.base_seed, &[TAG_SIGNAL, pt.n as u64, t]);
    let noise_seed = derive_seed(cfg.base_seed, &[TAG_NOISE, pt.n as u64, t]);
    let matrix_base = cfg.matrix_seed.unwrap_or(cfg.base_seed);
    let matrix_seed = derive_seed(matrix_base, &[TAG_MATRIX, pt.n as u64, pt.m as u64, pt.l as u64, t]);
    let x = if pt.c == 2 {
        sample_signal(prior, pt.n, signal_seed)
    } else {
        MultiLevelPrior::matching(prior, pt.c)
            .and_then(|ml| sample_multilevel_signal(&ml, pt.n, signal_seed))
    }
    .map_err(CliError::runtime)?
    .x;
    let phi = generate_matrix(&cfg.matrix_params(pt.n, pt.m, pt.l, matrix_seed)?).map_err(CliError::runtime)?;
    let clean = phi.encode(&x).map_err(CliError::runtime)?;
    let y = add_noise(&clean, pt.sigma_z2, noise_seed).map_err(CliError::runtime)?;
    Ok(Instance {
        phi,
        x,
        y,
        signal_seed,
    })
}

/// Output of one algorithm on one instance.
pub struct Estimate {
    pub x_hat: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
}

pub fn run_algorithm(
    cfg: &ExperimentConfig,
    prior: &MixturePrior,
    dec: &DecoderConfig,
    alg: Algorithm,
    inst: &Instance,
) -> Result<Estimate, CliError> {
    let (phi, y) = (&inst.phi, &inst.y);
    let n = phi.n();
    Ok(match alg {
        Algorithm::Csbp => {
            let r = decode(phi, y, prior, dec).map_err(CliError::runtime)?;
            Estimate {
                x_hat: r.x_mmse,
                iters: r.iters_run,
                converged: r.converged,
            }
        }
        Algorithm::Iht => {
            let k = ((prior.s() * n as f64).round() as usize).clamp(1, n);
            Estimate {
                x_hat: iht_decode(phi, y, k, cfg.iht_iters).map_err(CliError::runtime)?,
                iters: cfg.iht_iters,
                converged: true,
            }
        }
        Algorithm::Median => {
            let m1 = cfg.median_m1.unwrap_or_else(|| default_m1(phi.m(), n));
            Estimate {
                x_hat: median_decode(phi, y, m1).map_err(CliError::runtime)?,
                iters: 0,
                converged: true,
            }
        }
        Algorithm::Exact => {
            // Enumeration needs a nondegenerate covariance.
            let z2 = dec.sigma_z2.max(1e-6 * prior.sigma0() * prior.sigma0());
            Estimate {
                x_hat: exact_mmse(phi, y, prior, z2).map_err(CliError::runtime)?.x_mmse,
                iters: 0,
                converged: true,
            }
        }
    })
}

fn run_point_trial(
    cfg: &ExperimentConfig,
    prior: &MixturePrior,
    pt: &Point,
    trial: usize,
    algorithms: &[Algorithm],
    always_time: bool,
) -> Result<Vec<TrialRecord>, CliError> {
    let inst = instance(cfg, prior, pt, trial)?;
    let dec = cfg.decoder(prior, pt.n, pt.sigma_z2)?;
    let print = fingerprint(&inst.phi, &inst.x, &inst.y);
    let mut rows = Vec::with_capacity(algorithms.len());
    for &alg in algorithms {
        if fingerprint(&inst.phi, &inst.x, &inst.y) != print {
            return Err(CliError::Runtime("trial inputs changed between algorithms".into()));
        }
        let start = Instant::now();
        let est = run_algorithm(cfg, prior, &dec, alg, &inst)?;
        let seconds = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
        rows.push(TrialRecord {
            experiment: cfg.name.clone(),
            algorithm: alg,
            point: *pt,
            s: cfg.s,
            sigma0: cfg.sigma0,
            sigma1: cfg.sigma1,
            codec: if alg == Algorithm::Csbp { cfg.codec.name() } else { "none" },
            trial: trial as i64,
            seed: inst.signal_seed,
            l2_error: l2(&est.x_hat, &inst.x),
            linf_error: linf(&est.x_hat, &inst.x),
            iters: est.iters,
            converged: est.converged,
            seconds: (always_time || cfg.wall_time).then_some(seconds),
        });
    }
    Ok(rows)
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(CliError::runtime)
}

/// Worker count from `CSBP_THREADS`, else the available parallelism.
pub fn threads_from_env() -> usize {
    std::env::var("CSBP_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&t: &usize| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// All sweep points in canonical order: row weight, measurement count,
/// noise level, component count.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<Point> {
    let mut points = Vec::new();
    for &l in &cfg.l_sweep {
        for &m in &cfg.m_sweep {
            for &sigma_z2 in &cfg.sigma_z2_sweep {
                for &c in &cfg.c_sweep {
                    points.push(Point {
                        n: cfg.n,
                        m,
                        l,
                        sigma_z2,
                        c,
                    });
                }
            }
        }
    }
    points
}

fn run_points(
    cfg: &ExperimentConfig,
    points: &[Point],
    algorithms: &[Algorithm],
    threads: usize,
    always_time: bool,
) -> Result<SweepOutput, CliError> {
    let prior = cfg.prior()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let run = |&(p, t): &(usize, usize)| run_point_trial(cfg, &prior, &points[p], t, algorithms, always_time);
    let results: Vec<Result<Vec<TrialRecord>, CliError>> = if threads <= 1 {
        jobs.iter().map(run).collect()
    } else {
        pool(threads)?.install(|| jobs.par_iter().map(run).collect())
    };

    let mut out = SweepOutput::default();
    let mut results = results.into_iter();
    for pt in points {
        let mut point_rows = Vec::with_capacity(cfg.trials * algorithms.len());
        for _ in 0..cfg.trials {
            point_rows.extend(results.next().expect("one result per job")?);
        }
        let mut summary_rows = Vec::new();
        for &alg in algorithms {
            let mine: Vec<&TrialRecord> = point_rows.iter().filter(|r| r.algorithm == alg).collect();
            let col = |f: fn(&TrialRecord) -> f64| lower_median(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            let l2s: Vec<f64> = mine.iter().map(|r| r.l2_error).collect();
            let summary = Summary {
                point: *pt,
                algorithm: alg,
                median_l2: lower_median(&l2s),
                mean_l2: l2s.iter().sum::<f64>() / l2s.len() as f64,
            };
            summary_rows.push(TrialRecord {
                trial: -1,
                seed: cfg.base_seed,
                l2_error: summary.median_l2,
                linf_error: col(|r| r.linf_error),
                iters: col(|r| r.iters as f64) as usize,
                converged: mine.iter().all(|r| r.converged),
                seconds: mine[0].seconds.map(|_| col(|r| r.seconds.unwrap_or(0.0))),
                ..mine[0].clone()
            });
            out.summaries.push(summary);
        }
        out.rows.extend(point_rows);
        out.rows.extend(summary_rows);
    }
    Ok(out)
}

/// Per-trial and summary rows for every sweep point and algorithm.
pub fn run_sweep(cfg: &ExperimentConfig, threads: usize) -> Result<SweepOutput, CliError> {
    cfg.validate()?;
    run_points(cfg, &sweep_points(cfg), &cfg.algorithms, threads, false)
}

/// Sweep over `model.c_sweep` with signals drawn from the multi-level model
/// while the decoder keeps the two-state prior. CS-BP and IHT always run.
pub fn run_mismatch(cfg: &ExperimentConfig, threads: usize) -> Result<SweepOutput, CliError> {
    let mut cfg = cfg.clone();
    if cfg.name == "sweep" {
        cfg.name = "mismatch".into();
    }
    let mut algs = vec![Algorithm::Csbp, Algorithm::Iht];
    algs.extend(cfg.algorithms.iter().filter(|a| !algs.contains(a)).copied().collect::<Vec<_>>());
    cfg.algorithms = algs;
    run_sweep(&cfg, threads)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingOutput {
    pub sweep: SweepOutput,
    /// Slope of ln(median CS-BP seconds) against ln N.
    pub csbp_exponent: Option<f64>,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Timing points: `M = m_ratio N`, rounded up to keep columns regular when
/// requested. The first row weight and noise level of the config are used.
pub fn timing_points(cfg: &ExperimentConfig) -> Result<Vec<Point>, CliError> {
    if cfg.n_sweep.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("model.n_sweep must be strictly ascending".into()));
    }
    let l = cfg.l_sweep[0];
    cfg.n_sweep
        .iter()
        .map(|&n| {
            let mut m = ((cfg.m_ratio * n as f64).round() as usize).max(1);
            if cfg.regular_columns != Regularity::No {
                let step = n / gcd(l, n);
                m = m.div_ceil(step) * step;
            }
            cfg.matrix_params(n, m, l, 0)?;
            Ok(Point {
                n,
                m,
                l,
                sigma_z2: cfg.sigma_z2_sweep[0],
                c: cfg.c_sweep[0],
            })
        })
        .collect()
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Wall time per decode against N. Runs on one worker so decodes do not
/// compete for cores; seconds are always recorded.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<TimingOutput, CliError> {
    let mut cfg = cfg.clone();
    if cfg.name == "sweep" {
        cfg.name = "timing".into();
    }
    cfg.prior()?;
    if cfg.trials == 0 || cfg.algorithms.is_empty() {
        return Err(CliError::Config("timing needs trials >= 1 and at least one algorithm".into()));
    }
    let points = timing_points(&cfg)?;
    let sweep = run_points(&cfg, &points, &cfg.algorithms, 1, true)?;
    let mut ns = Vec::new();
    let mut secs = Vec::new();
    for pt in &points {
        if let Some(r) = sweep
            .rows
            .iter()
            .find(|r| r.trial == -1 && r.algorithm == Algorithm::Csbp && r.point == *pt)
        {
            ns.push(pt.n as f64);
            secs.push(r.seconds.unwrap_or(f64::MIN_POSITIVE));
        }
    }
    Ok(TimingOutput {
        csbp_exponent: loglog_slope(&ns, &secs),
        sweep,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub trial: usize,
    pub bp_l2: f64,
    pub exact_l2: f64,
    /// `||x_bp - x_exact||_2`.
    pub gap_l2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub rows: Vec<OracleRow>,
    pub median_bp: f64,
    pub median_exact: f64,
}

impl OracleComparison {
    pub fn table(&self) -> String {
        let mut out = String::from("trial  bp_l2      exact_l2   gap_l2\n");
        for r in &self.rows {
            writeln!(out, "{:<6} {:<10.4} {:<10.4} {:.4}", r.trial, r.bp_l2, r.exact_l2, r.gap_l2)
                .expect("writing to a String");
        }
        writeln!(
            out,
            "median {:<10.4} {:<10.4} ratio {:.4}",
            self.median_bp,
            self.median_exact,
            self.median_bp / self.median_exact
        )
        .expect("writing to a String");
        out
    }
}

/// CS-BP against the enumeration posterior on small instances, using the
/// first sweep point of the config.
pub fn oracle_compare(cfg: &ExperimentConfig, threads: usize) -> Result<OracleComparison, CliError> {
    let mut cfg = cfg.clone();
    cfg.algorithms = vec![Algorithm::Csbp, Algorithm::Exact];
    cfg.validate()?;
    let prior = cfg.prior()?;
    let pt = sweep_points(&cfg)[0];
    let dec = cfg.decoder(&prior, pt.n, pt.sigma_z2)?;
    let run = |t: usize| -> Result<OracleRow, CliError> {
        let inst = instance(&cfg, &prior, &pt, t)?;
        let bp = run_algorithm(&cfg, &prior, &dec, Algorithm::Csbp, &inst)?.x_hat;
        let ex = run_algorithm(&cfg, &prior, &dec, Algorithm::Exact, &inst)?.x_hat;
        Ok(OracleRow {
            trial: t,
            bp_l2: l2(&bp, &inst.x),
            exact_l2: l2(&ex, &inst.x),
            gap_l2: l2(&bp, &ex),
        })
    };
    let rows: Vec<OracleRow> = pool(threads)?
        .install(|| (0..cfg.trials).into_par_iter().map(run).collect::<Result<_, _>>())?;
    Ok(OracleComparison {
        median_bp: lower_median(&rows.iter().map(|r| r.bp_l2).collect::<Vec<_>>()),
        median_exact: lower_median(&rows.iter().map(|r| r.exact_l2).collect::<Vec<_>>()),
        rows,
    })
}
