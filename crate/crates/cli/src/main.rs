use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use csbp_cli::config::{Algorithm, ExperimentConfig};
use csbp_cli::experiment::{
    oracle_compare, run_algorithm, run_mismatch, run_sweep, run_timing, threads_from_env, Instance,
    SweepOutput,
};
use csbp_cli::files::{parse_vector, serialize_vector};
use csbp_cli::CliError;
use csbp_core::matrix::{generate_matrix, parse_matrix, serialize_matrix};
use csbp_core::oracles::{theorem1_params, validate_norm_bounds, BoundParams};
use csbp_core::rng::derive_seed;
use csbp_core::signal::{add_noise, sample_multilevel_signal, MultiLevelPrior};

#[derive(Parser)]
#[command(name = "csbp", version, about = "Compressive sensing decoding by belief propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set model.n=500`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a CS-LDPC matrix for (model.n, matrix.m, matrix.l, matrix.seed).
    GenerateMatrix {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure a signal: y = Phi x (+ noise.sigma_z2 noise).
    Encode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        matrix: PathBuf,
        /// Signal vector file; sampled from the model when absent.
        #[arg(long)]
        signal: Option<PathBuf>,
        /// Where to write the sampled signal.
        #[arg(long)]
        signal_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate a signal with the first algorithm of run.algorithms.
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error against measurement count, row weight, and noise level (CSV).
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Decode wall time against signal length (CSV).
    Timing {
        #[command(flatten)]
        common: Common,
    },
    /// Signals with more mixture components than the decoder assumes (CSV).
    Mismatch {
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo check of the signal norm bounds behind the row-weight rule.
    ValidateBounds {
        #[command(flatten)]
        common: Common,
    },
    /// CS-BP against exact enumeration on small instances.
    OracleCompare {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for o in &common.overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn emit_sweep(cfg: &ExperimentConfig, out: &SweepOutput) -> Result<(), CliError> {
    for s in &out.summaries {
        let p = &s.point;
        eprintln!(
            "{} n={} m={} l={} sigma_z2={} c={}: median l2 {:.4}, mean l2 {:.4}",
            s.algorithm, p.n, p.m, p.l, p.sigma_z2, p.c, s.median_l2, s.mean_l2
        );
    }
    emit(cfg.output.as_deref(), &out.to_csv())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = threads_from_env();
    match cli.command {
        Command::GenerateMatrix { common, out } => {
            let cfg = load(&common)?;
            let params = cfg.matrix_params(
                cfg.n,
                cfg.m_sweep[0],
                cfg.l_sweep[0],
                cfg.matrix_seed.unwrap_or(cfg.base_seed),
            )?;
            let phi = generate_matrix(&params).map_err(CliError::runtime)?;
            emit(out.as_deref().or(cfg.output.as_deref()), &serialize_matrix(&phi))
        }
        Command::Encode {
            common,
            matrix,
            signal,
            signal_out,
            out,
        } => {
            let cfg = load(&common)?;
            let prior = cfg.prior()?;
            let phi = parse_matrix(&read(&matrix)?).map_err(CliError::runtime)?;
            let x = match signal {
                Some(p) => parse_vector(&read(&p)?)?,
                None => {
                    let ml = MultiLevelPrior::matching(&prior, cfg.c_sweep[0]).map_err(CliError::config)?;
                    let x = sample_multilevel_signal(&ml, phi.n(), derive_seed(cfg.base_seed, &[1]))
                        .map_err(CliError::runtime)?
                        .x;
                    if let Some(p) = &signal_out {
                        emit(Some(p), &serialize_vector(&x))?;
                    }
                    x
                }
            };
            let clean = phi.encode(&x).map_err(CliError::runtime)?;
            let y = add_noise(&clean, cfg.sigma_z2_sweep[0], derive_seed(cfg.base_seed, &[2]))
                .map_err(CliError::runtime)?;
            emit(out.as_deref(), &serialize_vector(&y))
        }
        Command::Decode {
            common,
            matrix,
            measurements,
            out,
        } => {
            let cfg = load(&common)?;
            let prior = cfg.prior()?;
            let phi = parse_matrix(&read(&matrix)?).map_err(CliError::runtime)?;
            let y = parse_vector(&read(&measurements)?)?;
            let alg = cfg.algorithms.first().copied().unwrap_or(Algorithm::Csbp);
            let dec = cfg.decoder(&prior, phi.n(), cfg.sigma_z2_sweep[0])?;
            dec.validate(&prior).map_err(CliError::config)?;
            let inst = Instance {
                x: vec![0.0; phi.n()],
                phi,
                y,
                signal_seed: 0,
            };
            let est = run_algorithm(&cfg, &prior, &dec, alg, &inst)?;
            emit(out.as_deref(), &serialize_vector(&est.x_hat))
        }
        Command::Sweep { common } => {
            let cfg = load(&common)?;
            emit_sweep(&cfg, &run_sweep(&cfg, threads)?)
        }
        Command::Mismatch { common } => {
            let cfg = load(&common)?;
            emit_sweep(&cfg, &run_mismatch(&cfg, threads)?)
        }
        Command::Timing { common } => {
            let cfg = load(&common)?;
            let out = run_timing(&cfg)?;
            match out.csbp_exponent {
                Some(e) => eprintln!("csbp log-log time exponent: {e:.3}"),
                None => eprintln!("csbp log-log time exponent: n/a (fewer than two points)"),
            }
            emit(cfg.output.as_deref(), &out.sweep.to_csv())
        }
        Command::ValidateBounds { common } => {
            let cfg = load(&common)?;
            let prior = cfg.prior()?;
            let report = validate_norm_bounds(&prior, cfg.n, cfg.gamma, cfg.trials, cfg.base_seed)
                .map_err(CliError::config)?;
            let t1 = theorem1_params(&BoundParams {
                eta: cfg.eta,
                gamma: cfg.gamma,
                mu: cfg.mu,
                s: cfg.s,
                sigma0: cfg.sigma0,
                sigma1: cfg.sigma1,
                n: cfg.n,
            })
            .map_err(CliError::config)?;
            let mut text = format!(
                "n={} gamma={} trials={} regime_warning={}\n",
                report.n, report.gamma, report.trials, report.regime_warning
            );
            for c in &report.checks {
                text.push_str(&format!(
                    "{:<14} freq={:.5} wilson=[{:.5},{:.5}] bound={:.5} z_margin={:.2} {}\n",
                    c.name,
                    c.frequency,
                    c.wilson.0,
                    c.wilson.1,
                    c.bound,
                    c.z_margin,
                    if c.pass { "PASS" } else { "FAIL" }
                ));
            }
            text.push_str(&format!(
                "row weight L={:.3} measurement expression={:.1} Q={:.5} sQ^2={:.6} (2/eta={:.6})\n",
                t1.l,
                t1.m_expr,
                t1.q_bound,
                t1.s_q2(),
                2.0 / cfg.eta
            ));
            emit(cfg.output.as_deref(), &text)
        }
        Command::OracleCompare { common } => {
            let cfg = load(&common)?;
            emit(cfg.output.as_deref(), &oracle_compare(&cfg, threads)?.table())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csbp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
