//! Orbit metrics `d_n(x, y) = max_{0 ≤ j < n} d(T^j x, T^j y)`.

use crate::error::{Error, Result};
use crate::spaces::Metric;
use crate::systems::SystemSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct IteratedMetric {
    pub base: Metric,
    pub system: SystemSpec,
    pub horizon: usize,
}

/// Result of a thresholded orbit-metric evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OrbitDistance {
    Exact(f64),
    /// The running maximum passed the threshold; the value is a lower bound.
    Exceeds(f64),
}

impl OrbitDistance {
    pub fn exceeds(self, threshold: f64) -> bool {
        match self {
            OrbitDistance::Exact(v) | OrbitDistance::Exceeds(v) => v > threshold,
        }
    }
}

impl IteratedMetric {
    pub fn new(base: Metric, system: SystemSpec, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Range("horizon must be at least 1".into()));
        }
        let dim = system.state_dim()?;
        if base.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: base.dim(),
            });
        }
        Ok(IteratedMetric {
            base,
            system,
            horizon,
        })
    }

    /// The system's canonical metric iterated `horizon` times.
    pub fn canonical(system: SystemSpec, horizon: usize) -> Result<Self> {
        let base = system.canonical_metric()?;
        Self::new(base, system, horizon)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Self::new(self.base.clone(), self.system.clone(), horizon)
    }
}

/// Exact `d_n(x, y)`.
pub fn iterated_metric_eval(x: &[f64], y: &[f64], im: &IteratedMetric) -> Result<f64> {
    match iterated_metric_eval_until(x, y, im, f64::INFINITY)? {
        OrbitDistance::Exact(v) | OrbitDistance::Exceeds(v) => Ok(v),
    }
}

/// `d_n(x, y)`, stopping as soon as the running maximum exceeds `threshold`.
pub fn iterated_metric_eval_until(
    x: &[f64],
    y: &[f64],
    im: &IteratedMetric,
    threshold: f64,
) -> Result<OrbitDistance> {
    let dim = im.base.dim();
    for v in [x, y] {
        if v.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let (mut a, mut b) = (x.to_vec(), y.to_vec());
    let (mut na, mut nb) = (vec![0.0; dim], vec![0.0; dim]);
    let mut best = 0.0f64;
    for j in 0..im.horizon {
        if j > 0 {
            im.system.step_into(&a, &mut na);
            im.system.step_into(&b, &mut nb);
            std::mem::swap(&mut a, &mut na);
            std::mem::swap(&mut b, &mut nb);
        }
        best = best.max(im.base.eval_unchecked(&a, &b));
        if best > threshold {
            return Ok(OrbitDistance::Exceeds(best));
        }
    }
    Ok(OrbitDistance::Exact(best))
}

/// The first `n` orbit points `x, T x, …, T^{n-1} x`, concatenated.
pub fn orbit(spec: &SystemSpec, x: &[f64], n: usize) -> Result<Vec<f64>> {
    let dim = spec.state_dim()?;
    if x.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: x.len(),
        });
    }
    let mut out = Vec::with_capacity(dim * n);
    orbit_into(spec, x, n, dim, &mut out);
    Ok(out)
}

pub(crate) fn orbit_into(spec: &SystemSpec, x: &[f64], n: usize, dim: usize, out: &mut Vec<f64>) {
    if n == 0 {
        return;
    }
    let start = out.len();
    out.extend_from_slice(x);
    for j in 1..n {
        let prev = start + (j - 1) * dim;
        out.resize(prev + 2 * dim, 0.0);
        let (head, tail) = out.split_at_mut(prev + dim);
        spec.step_into(&head[prev..], tail);
    }
}
