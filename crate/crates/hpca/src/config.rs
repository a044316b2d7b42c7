//! Experiment configuration.
//!
//! The file format is flat `key = value` text with `#` comments. Every
//! experiment has defaults, so a file may contain nothing but
//! `experiment = alpha_sweep`. Command-line overrides are applied as extra
//! pairs after the file's.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    PcaVsN,
    AlphaSweep,
    DenoisingSweep,
    PoissonSweep,
    MissingSweep,
    ApproxRank,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::PcaVsN,
        Experiment::AlphaSweep,
        Experiment::DenoisingSweep,
        Experiment::PoissonSweep,
        Experiment::MissingSweep,
        Experiment::ApproxRank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PcaVsN => "pca_vs_n",
            Experiment::AlphaSweep => "alpha_sweep",
            Experiment::DenoisingSweep => "denoising_sweep",
            Experiment::PoissonSweep => "poisson_sweep",
            Experiment::MissingSweep => "missing_sweep",
            Experiment::ApproxRank => "approx_rank",
        }
    }

    /// Parameters that may be swept; the first is the default.
    pub fn sweepable(self) -> &'static [&'static str] {
        match self {
            Experiment::PcaVsN => &["n", "p"],
            Experiment::AlphaSweep => &["alpha", "n"],
            Experiment::DenoisingSweep => &["sigma0", "p2", "p1"],
            Experiment::PoissonSweep => &["lambda", "p2"],
            Experiment::MissingSweep => &["p2", "theta", "sigma0", "n"],
            Experiment::ApproxRank => &["tail", "n"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| config_err(format!("unknown experiment {s:?}")))
    }
}

/// Estimators compared in every trial. The order here is the row order
/// within a trial in the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    HeteroPca,
    Svd,
    Dd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::HeteroPca, Method::Svd, Method::Dd];

    pub fn name(self) -> &'static str {
        match self {
            Method::HeteroPca => "heteropca",
            Method::Svd => "svd",
            Method::Dd => "dd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| config_err(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseProfile {
    /// `σ_i ~ Unif[0, 1]`.
    Uniform,
    /// Variances `0.1·p·v_i^α / Σ v^α`.
    Alpha,
}

/// Data model for `missing_sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingModel {
    /// Masked denoising matrix; estimators see `ỸỸᵀ`.
    Denoising,
    /// Masked spiked samples; estimators see the pairwise-complete covariance.
    Spiked,
}

/// Model parameters. Which fields matter depends on the experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub p: usize,
    pub n: usize,
    pub r: usize,
    pub p1: usize,
    pub p2: usize,
    pub alpha: f64,
    pub sigma0: f64,
    pub theta: f64,
    pub lambda: f64,
    pub tail: f64,
    pub weight_power: f64,
    pub sigma_profile: NoiseProfile,
    pub missing_model: MissingModel,
    /// Also estimate the right subspace and `X` in `denoising_sweep`.
    pub estimate_v: bool,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            p: 200,
            n: 400,
            r: 5,
            p1: 50,
            p2: 200,
            alpha: 0.0,
            sigma0: 1.0,
            theta: 0.1,
            lambda: 1.0,
            tail: 0.0,
            weight_power: 1.0,
            sigma_profile: NoiseProfile::Uniform,
            missing_model: MissingModel::Denoising,
            estimate_v: false,
            max_iterations: hpca_core::HeteroPcaConfig::DEFAULT_MAX_ITERATIONS,
            tolerance: hpca_core::HeteroPcaConfig::DEFAULT_TOLERANCE,
        }
    }
}

fn as_count(name: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(config_err(format!("{name} must be a nonnegative integer, got {v}")))
    }
}

impl Params {
    /// Copy with the swept parameter set to `value`.
    pub fn with(&self, name: &str, value: f64) -> Result<Params> {
        let mut out = self.clone();
        match name {
            "p" => out.p = as_count(name, value)?,
            "n" => out.n = as_count(name, value)?,
            "r" => out.r = as_count(name, value)?,
            "p1" => out.p1 = as_count(name, value)?,
            "p2" => out.p2 = as_count(name, value)?,
            "alpha" => out.alpha = value,
            "sigma0" => out.sigma0 = value,
            "theta" => out.theta = value,
            "lambda" => out.lambda = value,
            "tail" => out.tail = value,
            _ => return Err(config_err(format!("{name:?} is not a sweepable parameter"))),
        }
        Ok(out)
    }

    fn validate(&self, experiment: Experiment) -> Result<()> {
        let fail = |msg: String| Err(config_err(msg));
        if self.r == 0 {
            return fail("r must be positive".into());
        }
        let pca = matches!(experiment, Experiment::PcaVsN | Experiment::AlphaSweep | Experiment::ApproxRank)
            || (experiment == Experiment::MissingSweep && self.missing_model == MissingModel::Spiked);
        if pca {
            if self.p < self.r {
                return fail(format!("need p >= r, got p={}, r={}", self.p, self.r));
            }
            if self.n < 2 {
                return fail(format!("need n >= 2, got {}", self.n));
            }
        } else if self.p1 < self.r || self.p2 < self.r {
            return fail(format!("need p1, p2 >= r, got p1={}, p2={}, r={}", self.p1, self.p2, self.r));
        }
        let nonneg = [("alpha", self.alpha), ("sigma0", self.sigma0), ("tail", self.tail), ("tolerance", self.tolerance)];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if !self.weight_power.is_finite() {
            return fail("weight_power must be finite".into());
        }
        if experiment == Experiment::PoissonSweep && !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if experiment == Experiment::MissingSweep && !(self.theta > 0.0 && self.theta < 1.0) {
            return fail(format!("theta must lie in (0, 1), got {}", self.theta));
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: Params,
    pub sweep_param: String,
    pub grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    /// Trials CSV path; aggregates go to `<out>.agg.csv`.
    pub out_path: Option<PathBuf>,
    /// Worker threads; 0 uses one per core. Output does not depend on it.
    pub workers: usize,
    /// Also write `<out>.svg`.
    pub plot: bool,
}

pub const DEFAULT_REPS: usize = 200;
pub const DEFAULT_SEED: u64 = 20190502;

impl ExperimentConfig {
    /// Desk-scale defaults for `experiment`.
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Params::default();
        let (params, sweep, grid) = match experiment {
            Experiment::PcaVsN => (base, "n", vec![100.0, 200.0, 400.0, 800.0]),
            Experiment::AlphaSweep => (
                Params { p: 50, n: 30, sigma_profile: NoiseProfile::Alpha, ..base },
                "alpha",
                vec![0.0, 1.0, 2.0, 4.0],
            ),
            Experiment::DenoisingSweep => (
                Params { r: 3, p1: 50, p2: 200, estimate_v: true, ..base },
                "sigma0",
                vec![0.0, 0.5, 1.0, 1.5, 2.0],
            ),
            Experiment::PoissonSweep => (
                Params { r: 3, p1: 50, p2: 500, ..base },
                "lambda",
                vec![1.0, 2.0, 4.0, 8.0, 16.0],
            ),
            Experiment::MissingSweep => (
                Params { r: 3, p1: 50, sigma0: 0.2, theta: 0.1, ..base },
                "p2",
                vec![800.0, 1600.0, 3200.0],
            ),
            Experiment::ApproxRank => (
                Params { p: 100, r: 3, ..base },
                "tail",
                vec![0.0, 0.02, 0.05, 0.1, 0.2],
            ),
        };
        Self {
            experiment,
            params,
            sweep_param: sweep.into(),
            grid,
            reps: DEFAULT_REPS,
            seed: DEFAULT_SEED,
            methods: Method::ALL.to_vec(),
            out_path: None,
            workers: 0,
            plot: false,
        }
    }

    /// Builds a config from `key = value` pairs; later pairs win. Defaults
    /// come from the last `experiment` pair (or `pca_vs_n`).
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<Self> {
        let experiment = pairs
            .iter()
            .rev()
            .find(|(k, _)| k.as_ref() == "experiment")
            .map(|(_, v)| v.as_ref().parse())
            .transpose()?
            .unwrap_or(Experiment::PcaVsN);
        let mut cfg = Self::defaults(experiment);
        let (mut sweep_set, mut grid_set) = (false, false);
        for (k, v) in pairs {
            let (k, v) = (k.as_ref(), v.as_ref().trim());
            match k {
                "sweep" => sweep_set = true,
                "grid" => grid_set = true,
                _ => {}
            }
            cfg.set(k, v)?;
        }
        if sweep_set && !grid_set {
            return Err(config_err("setting `sweep` requires a matching `grid`"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    pub fn load(path: &Path) -> Result<Vec<(String, String)>> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        parse_pairs(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| config_err(format!("{key}: cannot parse {value:?}")))
        }
        let p = &mut self.params;
        match key {
            "experiment" => {}
            "p" => p.p = num(key, value)?,
            "n" => p.n = num(key, value)?,
            "r" => p.r = num(key, value)?,
            "p1" => p.p1 = num(key, value)?,
            "p2" => p.p2 = num(key, value)?,
            "alpha" => p.alpha = num(key, value)?,
            "sigma0" => p.sigma0 = num(key, value)?,
            "theta" => p.theta = num(key, value)?,
            "lambda" => p.lambda = num(key, value)?,
            "tail" => p.tail = num(key, value)?,
            "weight_power" => p.weight_power = num(key, value)?,
            "estimate_v" => p.estimate_v = num(key, value)?,
            "max_iterations" => p.max_iterations = num(key, value)?,
            "tolerance" => p.tolerance = num(key, value)?,
            "sigma_profile" => {
                p.sigma_profile = match value {
                    "uniform" => NoiseProfile::Uniform,
                    "alpha" => NoiseProfile::Alpha,
                    _ => return Err(config_err(format!("sigma_profile must be uniform or alpha, got {value:?}"))),
                }
            }
            "missing_model" => {
                p.missing_model = match value {
                    "denoising" => MissingModel::Denoising,
                    "spiked" => MissingModel::Spiked,
                    _ => return Err(config_err(format!("missing_model must be denoising or spiked, got {value:?}"))),
                }
            }
            "sweep" => self.sweep_param = value.to_string(),
            "grid" => {
                self.grid = split_list(value)
                    .map(|v| num("grid", v))
                    .collect::<Result<Vec<f64>>>()?
            }
            "methods" => self.methods = split_list(value).map(str::parse).collect::<Result<Vec<Method>>>()?,
            "reps" => self.reps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "plot" => self.plot = num(key, value)?,
            "out" => self.out_path = Some(PathBuf::from(value)),
            _ => return Err(config_err(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(config_err("reps must be at least 1"));
        }
        if self.grid.is_empty() {
            return Err(config_err("grid must not be empty"));
        }
        if !self.experiment.sweepable().contains(&self.sweep_param.as_str()) {
            return Err(config_err(format!(
                "{} cannot sweep {:?}; choose one of {:?}",
                self.experiment,
                self.sweep_param,
                self.experiment.sweepable()
            )));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(config_err("grid values must be finite"));
        }
        let mut sorted = self.grid.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("grid values must be distinct"));
        }
        if self.methods.is_empty() {
            return Err(config_err("at least one method is required"));
        }
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        if m.len() != self.methods.len() {
            return Err(config_err("methods must be distinct"));
        }
        for &v in &self.grid {
            self.params.with(&self.sweep_param, v)?.validate(self.experiment)?;
        }
        Ok(())
    }

    /// Parameters of one grid cell.
    pub fn cell_params(&self, value: f64) -> Result<Params> {
        self.params.with(&self.sweep_param, value)
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected `key = value`", lineno + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(config_err(format!("line {}: empty key", lineno + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}
