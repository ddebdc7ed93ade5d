//! Reports: one CSV row per `(ε, n)` plus a JSON summary.

use serde::{Deserialize, Serialize};

use prodent::bowen::SandwichInterval;

use crate::error::Result;

/// CSV column order.
pub const CSV_HEADER: [&str; 7] = [
    "system",
    "metric",
    "eps",
    "n",
    "count",
    "log_count",
    "rate_window",
];

/// One `(ε, n)` measurement.
///
/// For the `ks` estimator `count` is the number of cells of `C^n` and
/// `log_count` is `H_μ(C^n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub system: String,
    pub metric: String,
    pub eps: f64,
    pub n: usize,
    pub count: u64,
    pub log_count: f64,
    /// The fitted rate for this ε, on rows inside the fit window.
    pub rate_window: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsSummary {
    pub eps: f64,
    pub rate: f64,
    pub terminal: f64,
    pub window: Option<(usize, usize)>,
    /// Window slope and terminal value differ by more than 10%.
    pub disagree: bool,
    pub saturated: bool,
    /// Fitted on counts above the saturation fraction; refine `delta`.
    #[serde(default)]
    pub coarse: bool,
    pub sandwich: Option<SandwichInterval>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub estimator: String,
    /// Nats per step.
    pub rate: f64,
    pub rate_bits: f64,
    pub per_eps: Vec<EpsSummary>,
    /// Some `(ε, n)` cells were skipped for lack of resources.
    pub incomplete: bool,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<Row>,
    pub summary: Summary,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.summary.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.summary.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
