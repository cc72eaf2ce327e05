//! Experiment configuration: flat `key = value` lines with dotted section
//! names. A `[section]` header prefixes the keys that follow it, so
//! `[fit]` then `restarts = 3` is the same as `fit.restarts = 3`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use vwlb_core::blr::BlrHyper;
use vwlb_core::gmm::GmmConfig;
use vwlb_core::inference::{CoverageConfig, ModelSpec};
use vwlb_core::{FitOptions, GibbsSettings, WeightScheme};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("key `{key}` is set twice")]
    Duplicate { key: String },
    #[error("unknown key `{key}`")]
    Unknown { key: String },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("key `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.to_string() }
}

/// Raw key/value pairs in key order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.trim().to_string() });
            };
            let k = k.trim();
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1, text: raw.trim().to_string() });
            }
            let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate { key });
            }
        }
        Ok(RawConfig { entries })
    }

    /// Replaces or adds one key, as a command-line override does.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Canonical text form: one `key = value` line per entry, sorted.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Gmm,
    Blr,
}

impl ModelKind {
    /// Name of the swept parameter.
    pub fn grid_param(self) -> &'static str {
        match self {
            ModelKind::Gmm => "delta",
            ModelKind::Blr => "rho",
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gmm" => Ok(ModelKind::Gmm),
            "blr" => Ok(ModelKind::Blr),
            other => Err(format!("unknown model `{other}` (expected gmm|blr)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Gmm => "gmm",
            ModelKind::Blr => "blr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    /// Separation for the mixture, AR(1) correlation for regression.
    pub value: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub values: Vec<f64>,
    pub ns: Vec<usize>,
    pub bootstrap: usize,
    pub replicates: usize,
    pub scheme: WeightScheme,
    pub level: f64,
    pub fit: FitOptions,
    pub gibbs: GibbsSettings,
    pub master_seed: u64,
    pub parallelism: usize,
    pub out: PathBuf,
    pub k: usize,
    pub prior_sd: f64,
    pub beta: Vec<f64>,
    pub noise_sd: f64,
    pub hyper: BlrHyper,
}

const KNOWN: &[&str] = &[
    "model",
    "seed",
    "out",
    "parallelism",
    "grid.delta",
    "grid.rho",
    "grid.n",
    "bootstrap.B",
    "bootstrap.scheme",
    "coverage.R",
    "coverage.level",
    "fit.max_iters",
    "fit.tol",
    "fit.restarts",
    "fit.init_spread",
    "gibbs.samples",
    "gibbs.burnin",
    "gibbs.thin",
    "gmm.k",
    "gmm.prior_sd",
    "blr.beta",
    "blr.noise_sd",
    "blr.v1",
    "blr.a0",
    "blr.b0",
    "blr.nu",
    "blr.lambda",
];

fn scalar<T: FromStr>(raw: &RawConfig, key: &str, default: Option<T>) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    match raw.get(key) {
        Some(v) => v.parse().map_err(|e| invalid(key, e)),
        None => default.ok_or_else(|| ConfigError::Missing { key: key.to_string() }),
    }
}

fn list<T: FromStr>(raw: &RawConfig, key: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    let text = raw.get(key).ok_or_else(|| ConfigError::Missing { key: key.to_string() })?;
    let items = text
        .split(',')
        .map(|v| v.trim().parse().map_err(|e| invalid(key, format!("`{}`: {e}", v.trim()))))
        .collect::<Result<Vec<T>, _>>()?;
    if items.is_empty() {
        return Err(invalid(key, "list is empty"));
    }
    Ok(items)
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        if let Some(key) = raw.keys().find(|k| !KNOWN.contains(k)) {
            return Err(ConfigError::Unknown { key: key.to_string() });
        }
        let model: ModelKind = scalar(raw, "model", None)?;
        let (grid_key, other) = match model {
            ModelKind::Gmm => ("grid.delta", "grid.rho"),
            ModelKind::Blr => ("grid.rho", "grid.delta"),
        };
        if raw.get(other).is_some() {
            return Err(invalid(other, format!("not used by model {model}")));
        }
        let values: Vec<f64> = list(raw, grid_key)?;
        let ns: Vec<usize> = list(raw, "grid.n")?;
        let restarts_default = if model == ModelKind::Gmm { 3 } else { 1 };
        let defaults = FitOptions::default();
        let gibbs_default = match model {
            ModelKind::Gmm => GibbsSettings { n_samples: 500, burnin: 10_000, thin: 20 },
            ModelKind::Blr => GibbsSettings { n_samples: 1000, burnin: 2000, thin: 10 },
        };
        let hd = BlrHyper::default();
        let config = ExperimentConfig {
            model,
            values,
            ns,
            bootstrap: scalar(raw, "bootstrap.B", None)?,
            replicates: scalar(raw, "coverage.R", None)?,
            scheme: scalar(raw, "bootstrap.scheme", Some(WeightScheme::Exp1))?,
            level: scalar(raw, "coverage.level", Some(0.95))?,
            fit: FitOptions {
                max_iters: scalar(raw, "fit.max_iters", Some(defaults.max_iters))?,
                elbo_rel_tol: scalar(raw, "fit.tol", Some(defaults.elbo_rel_tol))?,
                n_restarts: scalar(raw, "fit.restarts", Some(restarts_default))?,
                init_spread: scalar(raw, "fit.init_spread", Some(defaults.init_spread))?,
                seed: 0,
            },
            gibbs: GibbsSettings {
                n_samples: scalar(raw, "gibbs.samples", Some(gibbs_default.n_samples))?,
                burnin: scalar(raw, "gibbs.burnin", Some(gibbs_default.burnin))?,
                thin: scalar(raw, "gibbs.thin", Some(gibbs_default.thin))?,
            },
            master_seed: scalar(raw, "seed", None)?,
            parallelism: scalar(raw, "parallelism", Some(1))?,
            out: scalar(raw, "out", None)?,
            k: scalar(raw, "gmm.k", Some(3))?,
            prior_sd: scalar(raw, "gmm.prior_sd", Some(5.0))?,
            beta: if raw.get("blr.beta").is_some() {
                list(raw, "blr.beta")?
            } else {
                vec![2.0, 3.0, 2.0, 4.0, 1.0, 2.0, 1.0, 0.0, 0.0, 2.0]
            },
            noise_sd: scalar(raw, "blr.noise_sd", Some(1.0))?,
            hyper: BlrHyper {
                v1: scalar(raw, "blr.v1", Some(hd.v1))?,
                a0: scalar(raw, "blr.a0", Some(hd.a0))?,
                b0: scalar(raw, "blr.b0", Some(hd.b0))?,
                nu: scalar(raw, "blr.nu", Some(hd.nu))?,
                lambda: scalar(raw, "blr.lambda", Some(hd.lambda))?,
            },
        };
        config.check()?;
        Ok(config)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let positive = [
            ("bootstrap.B", self.bootstrap),
            ("coverage.R", self.replicates),
            ("fit.max_iters", self.fit.max_iters),
            ("fit.restarts", self.fit.n_restarts),
            ("gibbs.samples", self.gibbs.n_samples),
            ("gibbs.thin", self.gibbs.thin),
            ("gmm.k", self.k),
            ("parallelism", self.parallelism),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(invalid(key, "must be at least 1"));
            }
        }
        if self.ns.contains(&0) {
            return Err(invalid("grid.n", "sample sizes must be at least 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid("coverage.level", "must lie in (0, 1)"));
        }
        if !(self.fit.elbo_rel_tol > 0.0) {
            return Err(invalid("fit.tol", "must be positive"));
        }
        if !(self.fit.init_spread > 0.0) {
            return Err(invalid("fit.init_spread", "must be positive"));
        }
        if !(self.prior_sd > 0.0) {
            return Err(invalid("gmm.prior_sd", "must be positive"));
        }
        if !(self.noise_sd > 0.0) {
            return Err(invalid("blr.noise_sd", "must be positive"));
        }
        if self.scheme == WeightScheme::Unit {
            return Err(invalid("bootstrap.scheme", "unit weights make every replicate identical"));
        }
        match self.model {
            ModelKind::Gmm if self.values.iter().any(|d| !(d.is_finite() && *d >= 0.0)) => {
                Err(invalid("grid.delta", "separations must be finite and nonnegative"))
            }
            ModelKind::Blr if self.values.iter().any(|r| !(r.abs() < 1.0)) => {
                Err(invalid("grid.rho", "correlations must satisfy |rho| < 1"))
            }
            ModelKind::Blr if self.hyper.validate().is_err() => {
                Err(invalid("blr", "hyperparameters must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    /// Grid points in run order: outer loop over `n`, inner over the swept value.
    pub fn grid(&self) -> Vec<GridPoint> {
        self.ns.iter().flat_map(|&n| self.values.iter().map(move |&value| GridPoint { value, n })).collect()
    }

    pub fn grid_seed(&self, index: usize) -> u64 {
        vwlb_core::rng::derive_seed(self.master_seed, "grid", index as u64)
    }

    pub fn coverage_config(&self, index: usize, point: GridPoint) -> CoverageConfig {
        let model = match self.model {
            ModelKind::Gmm => {
                let mut gmm = GmmConfig::with_separation(self.k, point.value);
                gmm.prior_sd = self.prior_sd;
                ModelSpec::Gmm(gmm)
            }
            ModelKind::Blr => ModelSpec::Blr {
                beta_true: self.beta.clone(),
                rho: point.value,
                noise_sd: self.noise_sd,
                hyper: self.hyper,
            },
        };
        CoverageConfig {
            model,
            n: point.n,
            replicates: self.replicates,
            bootstrap: self.bootstrap,
            level: self.level,
            scheme: self.scheme,
            fit: self.fit.clone(),
            gibbs: self.gibbs,
            master_seed: self.grid_seed(index),
            parallelism: self.parallelism,
        }
    }
}

/// File name of the coverage table for one grid point.
pub fn coverage_file_name(model: ModelKind, point: GridPoint) -> String {
    format!("coverage_{}{}_n{}.csv", model.grid_param(), point.value, point.n)
}
