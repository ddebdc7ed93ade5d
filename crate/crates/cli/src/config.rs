//! Experiment configuration.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use prodent::systems::{parse_system, SystemSpec};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    /// The system's canonical metric, weights `1/j`.
    #[default]
    Canonical,
    /// The canonical metric with weights `2^{-j}`.
    Geometric,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Bowen,
    Cover,
    Ks,
}

/// A system given either as a spec string or as its JSON object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemInput {
    Text(String),
    Spec(SystemSpec),
}

impl SystemInput {
    pub fn resolve(&self) -> Result<SystemSpec> {
        match self {
            SystemInput::Text(s) => {
                parse_system(s).map_err(|e| CliError::usage("system", e.to_string()))
            }
            SystemInput::Spec(s) => {
                s.validate()
                    .map_err(|e| CliError::usage("system", e.to_string()))?;
                Ok(s.clone())
            }
        }
    }
}

/// `"a..b"` (inclusive) or an explicit list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NRange {
    Text(String),
    List(Vec<usize>),
}

impl NRange {
    pub fn values(&self) -> Result<Vec<usize>> {
        let v = match self {
            NRange::List(v) => v.clone(),
            NRange::Text(s) => parse_n_range(s)?,
        };
        if v.is_empty() || v[0] == 0 {
            return Err(CliError::usage("n", "values must be positive"));
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::usage("n", "values must be strictly ascending"));
        }
        Ok(v)
    }
}

pub fn parse_n_range(s: &str) -> Result<Vec<usize>> {
    let bad = || CliError::usage("n", format!("expected a..b or a list, got {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(CliError::usage("n", "range must be ascending"));
        }
        Ok((a..=b).collect())
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemInput,
    #[serde(default)]
    pub metric: MetricChoice,
    pub eps: Vec<f64>,
    pub n: NRange,
    #[serde(default)]
    pub estimator: Estimator,
    /// Lattice mesh; defaults to `min(eps) / 4`.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// CSV destination.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// JSON report destination.
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// Per-(ε, n) rows are appended here and reused on the next run.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// Probability of symbol 1 for the `ks` estimator on binary shifts.
    #[serde(default)]
    pub bernoulli: Option<f64>,
}

impl ExperimentConfig {
    pub fn new(system: &str, eps: Vec<f64>, n: &str) -> Self {
        ExperimentConfig {
            system: SystemInput::Text(system.into()),
            metric: MetricChoice::default(),
            eps,
            n: NRange::Text(n.into()),
            estimator: Estimator::default(),
            delta: None,
            seed: 0,
            output: None,
            report: None,
            checkpoint: None,
            bernoulli: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::usage("config", e.to_string()))
    }

    pub fn min_eps(&self) -> f64 {
        self.eps.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mesh(&self) -> f64 {
        self.delta.unwrap_or(self.min_eps() / 4.0)
    }

    /// Checks every field and returns the parsed system and `n` values.
    pub fn validate(&self) -> Result<(SystemSpec, Vec<usize>)> {
        let spec = self.system.resolve()?;
        if self.eps.is_empty() {
            return Err(CliError::usage("eps", "at least one value is required"));
        }
        if let Some(e) = self.eps.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(CliError::usage("eps", format!("{e} is outside (0, 1]")));
        }
        let ns = self.n.values()?;
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(CliError::usage("delta", "must be positive"));
            }
            if d > self.min_eps() / 4.0 {
                return Err(CliError::usage(
                    "delta",
                    format!("{d} exceeds min(eps)/4 = {}", self.min_eps() / 4.0),
                ));
            }
        }
        if let Some(p) = self.bernoulli {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::usage("bernoulli", "must lie in [0, 1]"));
            }
        }
        Ok((spec, ns))
    }
}
