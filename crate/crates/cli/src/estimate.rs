//! The `estimate` command.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use prodent::bowen::{
    fit_counts, Method, OrbitContext, PackingMode, SandwichInterval, SATURATION_FRACTION,
};
use prodent::covers::{min_subcover_cardinality, Cover, GridDynamics};
use prodent::measures::{
    build_fine_partition, ks_rate, partition_entropy, product_measure, refine_partition,
    FiniteMeasure, FinitePartition,
};
use prodent::spaces::{sample_grid, Metric, SampledSpace, WeightRule};
use prodent::systems::SystemSpec;
use prodent::Error;

use crate::config::{Estimator, ExperimentConfig, MetricChoice};
use crate::error::Result;
use crate::report::{EpsSummary, Report, Row, Summary};

/// A checkpointed `(ε, n)` measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Saved {
    eps: f64,
    n: usize,
    count: u64,
    method: Method,
}

type Key = (u64, usize);

fn key(eps: f64, n: usize) -> Key {
    (eps.to_bits(), n)
}

struct Checkpoint {
    done: HashMap<Key, Saved>,
    writer: Option<Mutex<csv::Writer<std::fs::File>>>,
}

impl Checkpoint {
    fn open(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Checkpoint {
                done: HashMap::new(),
                writer: None,
            });
        };
        let mut done = HashMap::new();
        let fresh = !path.exists();
        if !fresh {
            let mut r = csv::Reader::from_path(path)?;
            for rec in r.deserialize::<Saved>() {
                // a torn final line from an interrupted run is recomputed
                let Ok(s) = rec else { continue };
                done.insert(key(s.eps, s.n), s);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let writer = csv::WriterBuilder::new()
            .has_headers(fresh)
            .from_writer(file);
        Ok(Checkpoint {
            done,
            writer: Some(Mutex::new(writer)),
        })
    }

    fn record(&self, s: &Saved) -> Result<()> {
        if let Some(w) = &self.writer {
            let mut w = w.lock().expect("checkpoint writer poisoned");
            w.serialize(s)?;
            w.flush()?;
        }
        Ok(())
    }
}

/// Runs one experiment. The output depends only on the configuration.
pub fn run_estimate(cfg: &ExperimentConfig) -> Result<Report> {
    let (spec, ns) = cfg.validate()?;
    let n_max = *ns.last().expect("validated nonempty");
    let system = spec.label();
    let resolved = spec.resolved_for(cfg.min_eps(), n_max)?;
    let mut summary = Summary {
        estimator: format!("{:?}", cfg.estimator).to_lowercase(),
        ..Summary::default()
    };
    let space = match sample_grid(&resolved, cfg.mesh()) {
        Ok(s) => s,
        Err(e @ Error::Resource { .. }) => {
            summary.incomplete = true;
            summary.notes.push(e.to_string());
            return Ok(Report {
                rows: vec![],
                summary,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let metric = match cfg.metric {
        MetricChoice::Canonical => space.metric().clone(),
        MetricChoice::Geometric => space.metric().with_weights(WeightRule::Geometric),
    };
    let run = Run {
        cfg,
        ns: &ns,
        system,
        space: &space,
        spec: &resolved,
        metric,
    };
    let report = match cfg.estimator {
        Estimator::Bowen => run.bowen(summary)?,
        Estimator::Cover => run.cover(summary)?,
        Estimator::Ks => run.ks(summary)?,
    };
    if let Some(path) = &cfg.output {
        std::fs::write(path, report.to_csv()?)?;
    }
    if let Some(path) = &cfg.report {
        std::fs::write(path, report.to_json()?)?;
    }
    Ok(report)
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    ns: &'a [usize],
    system: String,
    space: &'a SampledSpace,
    spec: &'a SystemSpec,
    metric: Metric,
}

impl Run<'_> {
    fn row(&self, eps: f64, n: usize, count: u64, log_count: f64) -> Row {
        Row {
            system: self.system.clone(),
            metric: self.metric.label(),
            eps,
            n,
            count,
            log_count,
            rate_window: None,
        }
    }

    fn bowen(&self, mut summary: Summary) -> Result<Report> {
        let n_max = *self.ns.last().unwrap();
        let ctx = OrbitContext::with_metric(self.space, self.spec, self.metric.clone(), n_max)?;
        let checkpoint = Checkpoint::open(self.cfg.checkpoint.as_deref())?;
        let jobs: Vec<(f64, usize)> = self
            .cfg
            .eps
            .iter()
            .flat_map(|&e| self.ns.iter().map(move |&n| (e, n)))
            .filter(|&(e, n)| !checkpoint.done.contains_key(&key(e, n)))
            .collect();
        let fresh: Vec<std::result::Result<Saved, Error>> = jobs
            .par_iter()
            .map(|&(eps, n)| {
                let r = ctx.max_separated(n, eps, PackingMode::Greedy)?;
                let s = Saved {
                    eps,
                    n,
                    count: r.count as u64,
                    method: r.method,
                };
                checkpoint
                    .record(&s)
                    .map_err(|e| Error::Validation(format!("checkpoint: {e}")))?;
                Ok(s)
            })
            .collect();
        let mut done = checkpoint.done.clone();
        for r in fresh {
            match r {
                Ok(s) => {
                    done.insert(key(s.eps, s.n), s);
                }
                Err(e @ Error::Resource { .. }) => {
                    summary.incomplete = true;
                    summary.notes.push(e.to_string());
                }
                Err(e) => return Err(e.into()),
            }
        }
        let mut rows = Vec::new();
        for &eps in &self.cfg.eps {
            let counts: Vec<(usize, usize, Method)> = self
                .ns
                .iter()
                .filter_map(|&n| done.get(&key(eps, n)))
                .map(|s| (s.n, s.count as usize, s.method))
                .collect();
            let curve = fit_counts(eps, &counts, self.space.len(), SATURATION_FRACTION);
            let sandwich = if counts.last().is_some_and(|c| c.2 == Method::Cylinder)
                || self.space.len() <= 4096
            {
                ctx.sandwich_check(n_max, eps)
                    .ok()
                    .map(|s| SandwichInterval {
                        n: n_max,
                        spanning: s.spanning,
                        separated: s.separated,
                        spanning_half: s.spanning_half,
                    })
            } else {
                None
            };
            if curve.coarse {
                summary.notes.push(format!(
                    "eps={eps}: mesh too coarse for the saturation rule, rate is biased low"
                ));
            }
            for r in &curve.rows {
                let mut row = self.row(eps, r.n, r.count as u64, r.log_count);
                row.rate_window = r.in_window.then_some(curve.rate);
                rows.push(row);
            }
            summary.per_eps.push(EpsSummary {
                eps,
                rate: curve.rate,
                terminal: curve.terminal,
                window: curve.window,
                disagree: curve.disagree,
                saturated: curve.saturated,
                coarse: curve.coarse,
                sandwich,
            });
        }
        finish(rows, summary)
    }

    fn partition_for(&self, eps: f64) -> Result<FinitePartition> {
        if self.metric.is_symbolic() {
            Ok(FinitePartition::cylinders(self.space, 1)?)
        } else {
            Ok(build_fine_partition(self.space, &self.metric, eps)?)
        }
    }

    fn cover(&self, mut summary: Summary) -> Result<Report> {
        let dynamics = GridDynamics::new(self.space, self.spec)?;
        let n_max = *self.ns.last().unwrap();
        let mut rows = Vec::new();
        for &eps in &self.cfg.eps {
            let p = self.partition_for(eps)?;
            let generator = Cover::from_labels(p.labels())?;
            let mut an = generator.clone();
            let mut counts = Vec::new();
            for n in 1..=n_max {
                if n > 1 {
                    an = prodent::covers::join(&generator, &an.preimage(&dynamics)?)?;
                }
                if self.ns.contains(&n) {
                    let b = min_subcover_cardinality(&an, None)?;
                    if !b.exact {
                        summary.notes.push(format!(
                            "eps={eps} n={n}: N(A^n) in [{}, {}]",
                            b.lower, b.upper
                        ));
                    }
                    let method = if b.exact {
                        Method::Cylinder
                    } else {
                        Method::Greedy
                    };
                    counts.push((n, b.upper, method));
                }
            }
            let curve = fit_counts(eps, &counts, self.space.len(), SATURATION_FRACTION);
            for r in &curve.rows {
                let mut row = self.row(eps, r.n, r.count as u64, r.log_count);
                row.rate_window = r.in_window.then_some(curve.rate);
                rows.push(row);
            }
            summary.per_eps.push(EpsSummary {
                eps,
                rate: curve.rate,
                terminal: curve.terminal,
                window: curve.window,
                disagree: curve.disagree,
                saturated: curve.saturated,
                coarse: curve.coarse,
                sandwich: None,
            });
        }
        finish(rows, summary)
    }

    fn measure(&self) -> Result<FiniteMeasure> {
        if let SystemSpec::FullShift { m, .. } = self.spec {
            let probs = match (self.cfg.bernoulli, m) {
                (Some(p), 2) => vec![1.0 - p, p],
                _ => vec![1.0 / *m as f64; *m as usize],
            };
            return Ok(product_measure(self.space, &probs)?);
        }
        Ok(FiniteMeasure::uniform(self.space.len())?)
    }

    fn ks(&self, mut summary: Summary) -> Result<Report> {
        let dynamics = GridDynamics::new(self.space, self.spec)?;
        let n_max = *self.ns.last().unwrap();
        let mu = self.measure()?;
        let mut rows = Vec::new();
        for &eps in &self.cfg.eps {
            let c = self.partition_for(eps)?;
            let report = ks_rate(&mu, &c, &dynamics, n_max)?;
            if !report.invariant {
                summary.notes.push(format!(
                    "eps={eps}: measure is not invariant (defect {:e})",
                    report.invariance_defect
                ));
            }
            for &n in self.ns {
                let cells = refine_partition(&c, &dynamics, n)?;
                let h = partition_entropy(&mu, &cells)?;
                let mut row = self.row(eps, n, cells.len() as u64, h);
                if n >= report.window.0 {
                    row.rate_window = Some(report.rate);
                }
                rows.push(row);
            }
            summary.per_eps.push(EpsSummary {
                eps,
                rate: report.rate,
                terminal: *report.per_n.last().unwrap(),
                window: Some(report.window),
                disagree: false,
                saturated: false,
                coarse: false,
                sandwich: None,
            });
        }
        finish(rows, summary)
    }
}

fn finish(rows: Vec<Row>, mut summary: Summary) -> Result<Report> {
    summary.rate = summary.per_eps.iter().map(|e| e.rate).fold(0.0, f64::max);
    summary.rate_bits = summary.rate / std::f64::consts::LN_2;
    Ok(Report { rows, summary })
}
