//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, keys are dotted
//! (`model.n = 1000`). Lists are comma separated. Later assignments replace
//! earlier ones, and `--set` overrides are applied after the file.

use std::fmt;
use std::path::PathBuf;

use csbp_core::decoder::{default_iters, Codec, DecoderConfig};
use csbp_core::grid::{smooth_odd_at_least, Grid};
use csbp_core::matrix::MatrixParams;
use csbp_core::signal::{MixturePrior, MultiLevelPrior};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Csbp,
    Iht,
    Median,
    Exact,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Csbp => "csbp",
            Self::Iht => "iht",
            Self::Median => "median",
            Self::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecKind {
    Grid,
    Mog,
}

impl CodecKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Grid => "grid",
            Self::Mog => "mog",
        }
    }
}

/// Column-regularity request. `Auto` uses the regular construction whenever
/// `L M` is divisible by `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    Yes,
    No,
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub n: usize,
    pub s: f64,
    pub sigma0: f64,
    pub sigma1: f64,
    pub c_sweep: Vec<usize>,
    pub n_sweep: Vec<usize>,
    pub l_sweep: Vec<usize>,
    pub m_sweep: Vec<usize>,
    pub m_ratio: f64,
    pub regular_columns: Regularity,
    pub matrix_seed: Option<u64>,
    pub codec: CodecKind,
    pub p: Option<usize>,
    pub delta: Option<f64>,
    pub beta: f64,
    pub max_iters: Option<usize>,
    pub tol: f64,
    pub m_comps: usize,
    pub sigma_z2_sweep: Vec<f64>,
    pub trials: usize,
    pub algorithms: Vec<Algorithm>,
    pub base_seed: u64,
    pub iht_iters: usize,
    pub median_m1: Option<usize>,
    pub gamma: f64,
    pub eta: f64,
    pub mu: f64,
    pub output: Option<PathBuf>,
    pub wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "sweep".into(),
            n: 1000,
            s: 0.1,
            sigma0: 1.0,
            sigma1: 10.0,
            c_sweep: vec![2],
            n_sweep: vec![500, 1000, 2000, 4000, 8000],
            l_sweep: vec![20],
            m_sweep: vec![400],
            m_ratio: 0.4,
            regular_columns: Regularity::Auto,
            matrix_seed: None,
            codec: CodecKind::Grid,
            p: None,
            delta: None,
            beta: 0.5,
            max_iters: None,
            tol: 1e-4,
            m_comps: 6,
            sigma_z2_sweep: vec![0.0],
            trials: 100,
            algorithms: vec![Algorithm::Csbp],
            base_seed: 1,
            iht_iters: 200,
            median_m1: None,
            gamma: 0.5,
            eta: 1.0,
            mu: 1.0,
            output: None,
            wall_time: false,
        }
    }
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "run.name",
    "model.n",
    "model.s",
    "model.sigma0",
    "model.sigma1",
    "model.c_components",
    "model.c_sweep",
    "model.n_sweep",
    "matrix.l",
    "matrix.l_sweep",
    "matrix.m",
    "matrix.m_sweep",
    "matrix.m_ratio",
    "matrix.regular_columns",
    "matrix.seed",
    "decoder.codec",
    "decoder.p",
    "decoder.delta",
    "decoder.beta",
    "decoder.max_iters",
    "decoder.tol",
    "decoder.m_comps",
    "noise.sigma_z2",
    "noise.sigma_z2_sweep",
    "run.trials",
    "run.algorithms",
    "run.base_seed",
    "run.iht_iters",
    "run.median_m1",
    "bounds.gamma",
    "bounds.eta",
    "bounds.mu",
    "output.path",
    "output.wall_time",
];

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Config(format!("{key}: cannot parse {value:?} as {what}"))
}

fn one<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T, CliError> {
    value.trim().parse().map_err(|_| bad(key, value, what))
}

fn list<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<Vec<T>, CliError> {
    let items: Vec<T> = value
        .split(',')
        .map(|v| one(key, v, what))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn flag(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, value, "a boolean")),
    }
}

impl ExperimentConfig {
    /// Applies one assignment. Unknown keys are rejected by name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "run.name" => self.name = v.to_string(),
            "model.n" => self.n = one(key, v, "a count")?,
            "model.s" => self.s = one(key, v, "a real")?,
            "model.sigma0" => self.sigma0 = one(key, v, "a real")?,
            "model.sigma1" => self.sigma1 = one(key, v, "a real")?,
            "model.c_components" => self.c_sweep = vec![one(key, v, "a count")?],
            "model.c_sweep" => self.c_sweep = list(key, v, "counts")?,
            "model.n_sweep" => self.n_sweep = list(key, v, "counts")?,
            "matrix.l" => self.l_sweep = vec![one(key, v, "a count")?],
            "matrix.l_sweep" => self.l_sweep = list(key, v, "counts")?,
            "matrix.m" => self.m_sweep = vec![one(key, v, "a count")?],
            "matrix.m_sweep" => self.m_sweep = list(key, v, "counts")?,
            "matrix.m_ratio" => self.m_ratio = one(key, v, "a real")?,
            "matrix.regular_columns" => {
                self.regular_columns = match v {
                    "auto" => Regularity::Auto,
                    _ if flag(key, v)? => Regularity::Yes,
                    _ => Regularity::No,
                }
            }
            "matrix.seed" => self.matrix_seed = Some(one(key, v, "an integer")?),
            "decoder.codec" => {
                self.codec = match v {
                    "grid" => CodecKind::Grid,
                    "mog" => CodecKind::Mog,
                    _ => return Err(bad(key, v, "grid or mog")),
                }
            }
            "decoder.p" => self.p = Some(one(key, v, "a count")?),
            "decoder.delta" => self.delta = Some(one(key, v, "a real")?),
            "decoder.beta" => self.beta = one(key, v, "a real")?,
            "decoder.max_iters" => self.max_iters = Some(one(key, v, "a count")?),
            "decoder.tol" => self.tol = one(key, v, "a real")?,
            "decoder.m_comps" => self.m_comps = one(key, v, "a count")?,
            "noise.sigma_z2" => self.sigma_z2_sweep = vec![one(key, v, "a real")?],
            "noise.sigma_z2_sweep" => self.sigma_z2_sweep = list(key, v, "reals")?,
            "run.trials" => self.trials = one(key, v, "a count")?,
            "run.algorithms" => {
                self.algorithms = v
                    .split(',')
                    .map(|a| match a.trim() {
                        "csbp" => Ok(Algorithm::Csbp),
                        "iht" => Ok(Algorithm::Iht),
                        "median" => Ok(Algorithm::Median),
                        "exact" => Ok(Algorithm::Exact),
                        other => Err(bad(key, other, "one of csbp, iht, median, exact")),
                    })
                    .collect::<Result<_, _>>()?
            }
            "run.base_seed" => self.base_seed = one(key, v, "an integer")?,
            "run.iht_iters" => self.iht_iters = one(key, v, "a count")?,
            "run.median_m1" => self.median_m1 = Some(one(key, v, "a count")?),
            "bounds.gamma" => self.gamma = one(key, v, "a real")?,
            "bounds.eta" => self.eta = one(key, v, "a real")?,
            "bounds.mu" => self.mu = one(key, v, "a real")?,
            "output.path" => self.output = Some(PathBuf::from(v)),
            "output.wall_time" => self.wall_time = flag(key, v)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", k + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::Config(format!("line {}: {}", k + 1, e.message())))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {assignment:?} is not key=value")))?;
        self.set(key.trim(), value)
    }

    pub fn prior(&self) -> Result<MixturePrior, CliError> {
        MixturePrior::new(self.s, self.sigma0, self.sigma1).map_err(CliError::config)
    }

    /// Checks everything that can be checked before any trial runs.
    pub fn validate(&self) -> Result<(), CliError> {
        let prior = self.prior()?;
        if self.trials == 0 {
            return Err(CliError::Config("run.trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(CliError::Config("run.algorithms is empty".into()));
        }
        if self.algorithms.contains(&Algorithm::Exact) && self.n > csbp_core::oracles::EXACT_MAX_N {
            return Err(CliError::Config(format!(
                "algorithm exact needs model.n <= {}, got {}",
                csbp_core::oracles::EXACT_MAX_N,
                self.n
            )));
        }
        for &c in &self.c_sweep {
            MultiLevelPrior::matching(&prior, c).map_err(CliError::config)?;
        }
        for &z in &self.sigma_z2_sweep {
            if !(z >= 0.0 && z.is_finite()) {
                return Err(CliError::Config(format!("noise variance {z} is invalid")));
            }
        }
        if !(self.m_ratio > 0.0) {
            return Err(CliError::Config("matrix.m_ratio must be positive".into()));
        }
        self.decoder(&prior, self.n, 0.0)?
            .validate(&prior)
            .map_err(CliError::config)?;
        for &l in &self.l_sweep {
            for &m in &self.m_sweep {
                self.matrix_params(self.n, m, l, 0)?;
            }
        }
        Ok(())
    }

    pub fn grid(&self, prior: &MixturePrior) -> Result<Grid, CliError> {
        let span = 12.0 * prior.sigma1();
        let g = match (self.p, self.delta) {
            (Some(p), Some(d)) => Grid::new(p, d),
            (Some(p), None) if p > 1 => Grid::new(p, span / (p - 1) as f64),
            (Some(p), None) => Grid::new(p, 1.0),
            (None, Some(d)) if d > 0.0 => Grid::new(smooth_odd_at_least((span / d).ceil() as usize + 1), d),
            (None, Some(d)) => Grid::new(3, d),
            (None, None) => Ok(Grid::default_for(prior)),
        };
        g.map_err(CliError::config)
    }

    pub fn decoder(&self, prior: &MixturePrior, n: usize, sigma_z2: f64) -> Result<DecoderConfig, CliError> {
        let codec = match self.codec {
            CodecKind::Grid => Codec::Grid(self.grid(prior)?),
            CodecKind::Mog => Codec::Mixture {
                max_components: self.m_comps,
                eval_grid: Grid::for_prior(prior, 0.25, 6.0).map_err(CliError::config)?,
            },
        };
        Ok(DecoderConfig {
            codec,
            beta: self.beta,
            damp_constraints: true,
            damp_variables: true,
            max_iters: self.max_iters.unwrap_or_else(|| default_iters(n)),
            tol: self.tol,
            sigma_z2,
            divergence_guard: true,
        })
    }

    /// Matrix parameters for one point; rejects unsatisfiable divisibility.
    pub fn matrix_params(&self, n: usize, m: usize, l: usize, seed: u64) -> Result<MatrixParams, CliError> {
        let divisible = n > 0 && (l * m).is_multiple_of(n);
        let regular_columns = match self.regular_columns {
            Regularity::Yes => true,
            Regularity::No => false,
            Regularity::Auto => divisible,
        };
        let params = MatrixParams {
            n,
            m,
            l,
            regular_columns,
            seed,
        };
        params.validate().map_err(CliError::config)?;
        Ok(params)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_lists() {
        let cfg = ExperimentConfig::parse(
            "# desk run\nmodel.n = 500\nmatrix.m_sweep = 100, 200,300 # inline\n\
             run.algorithms = csbp,iht\nmatrix.regular_columns = false\nnoise.sigma_z2 = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.n, 500);
        assert_eq!(cfg.m_sweep, vec![100, 200, 300]);
        assert_eq!(cfg.algorithms, vec![Algorithm::Csbp, Algorithm::Iht]);
        assert_eq!(cfg.regular_columns, Regularity::No);
        assert_eq!(cfg.sigma_z2_sweep, vec![2.0]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse("model.n = 10\nmodel.bogus = 3\n").unwrap_err();
        assert!(err.message().contains("model.bogus"), "{}", err.message());
        assert!(err.message().contains("line 2"));
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.apply_override("decoder.gamma=1").is_err());
        assert!(cfg.apply_override("no-equals").is_err());
    }

    #[test]
    fn every_listed_key_is_accepted() {
        let samples = [
            ("run.name", "x"),
            ("model.n", "100"),
            ("model.s", "0.1"),
            ("model.sigma0", "1"),
            ("model.sigma1", "10"),
            ("model.c_components", "2"),
            ("model.c_sweep", "2,3"),
            ("model.n_sweep", "100,200"),
            ("matrix.l", "20"),
            ("matrix.l_sweep", "5,20"),
            ("matrix.m", "40"),
            ("matrix.m_sweep", "40,80"),
            ("matrix.m_ratio", "0.4"),
            ("matrix.regular_columns", "auto"),
            ("matrix.seed", "3"),
            ("decoder.codec", "mog"),
            ("decoder.p", "243"),
            ("decoder.delta", "0.5"),
            ("decoder.beta", "0.5"),
            ("decoder.max_iters", "10"),
            ("decoder.tol", "1e-4"),
            ("decoder.m_comps", "6"),
            ("noise.sigma_z2", "0"),
            ("noise.sigma_z2_sweep", "0,2"),
            ("run.trials", "3"),
            ("run.algorithms", "csbp"),
            ("run.base_seed", "7"),
            ("run.iht_iters", "100"),
            ("run.median_m1", "8"),
            ("bounds.gamma", "0.5"),
            ("bounds.eta", "1"),
            ("bounds.mu", "1"),
            ("output.path", "out.csv"),
            ("output.wall_time", "true"),
        ];
        assert_eq!(samples.len(), KEYS.len());
        let mut cfg = ExperimentConfig::default();
        for (k, v) in samples {
            assert!(KEYS.contains(&k));
            cfg.set(k, v).unwrap();
        }
    }

    #[test]
    fn validation_catches_bad_points() {
        let mut cfg = ExperimentConfig::parse("model.n = 1000\nmatrix.regular_columns = true\nmatrix.m = 401\n").unwrap();
        assert!(cfg.validate().is_err());
        cfg.set("matrix.regular_columns", "auto").unwrap();
        cfg.validate().unwrap();
        cfg.set("run.algorithms", "exact").unwrap();
        assert!(cfg.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.set("model.c_sweep", "2,20").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn grid_geometry_from_keys() {
        let prior = MixturePrior::new(0.1, 1.0, 10.0).unwrap();
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.grid(&prior).unwrap().p(), 243);
        cfg.set("decoder.p", "525").unwrap();
        let g = cfg.grid(&prior).unwrap();
        assert!((g.extent() - 60.0).abs() < 1e-12);
        cfg.p = None;
        cfg.set("decoder.delta", "0.25").unwrap();
        assert_eq!(cfg.grid(&prior).unwrap().p(), 525);
    }
}
