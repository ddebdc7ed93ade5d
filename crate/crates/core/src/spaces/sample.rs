//! Finite δ-dense lattices standing in for (locally) compact state spaces.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spaces::Metric;
use crate::systems::{LineMetric, SystemSpec};

/// Largest number of points [`sample_grid`] will materialize.
pub const DEFAULT_POINT_BUDGET: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisTransform {
    /// Lattice coordinate equals the state coordinate.
    Identity,
    /// Lattice coordinate is `atan(x) / π`.
    Arctan,
}

/// One lattice axis: values `start + i·step` for `i < count`, in lattice
/// coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub transform: AxisTransform,
    pub start: f64,
    pub step: f64,
    pub count: usize,
    pub periodic: bool,
}

impl Axis {
    fn value(&self, i: usize) -> f64 {
        let u = self.start + i as f64 * self.step;
        match self.transform {
            AxisTransform::Identity => u,
            AxisTransform::Arctan => (std::f64::consts::PI * u).tan(),
        }
    }

    fn nearest(&self, x: f64) -> usize {
        let u = match self.transform {
            AxisTransform::Identity => x,
            AxisTransform::Arctan => x.atan() / std::f64::consts::PI,
        };
        let r = ((u - self.start) / self.step).round();
        if self.periodic {
            (r as i64).rem_euclid(self.count as i64) as usize
        } else {
            r.clamp(0.0, (self.count - 1) as f64) as usize
        }
    }
}

/// Product lattice; axis 0 is the most significant digit of the index.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub axes: Vec<Axis>,
}

impl Lattice {
    pub fn len(&self) -> u128 {
        self.axes.iter().map(|a| a.count as u128).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nearest(&self, x: &[f64]) -> usize {
        self.axes
            .iter()
            .zip(x)
            .fold(0, |acc, (a, &v)| acc * a.count + a.nearest(v))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledSpace {
    dim: usize,
    points: Vec<f64>,
    mesh: f64,
    core: Vec<bool>,
    metric: Metric,
    lattice: Option<Lattice>,
}

impl SampledSpace {
    /// A space from explicit points (concatenated, `dim` coordinates each).
    pub fn from_points(
        dim: usize,
        points: Vec<f64>,
        metric: Metric,
        mesh: f64,
        core: Option<Vec<bool>>,
    ) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::Validation(
                "points must be a nonempty multiple of dim".into(),
            ));
        }
        if metric.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: metric.dim(),
            });
        }
        let n = points.len() / dim;
        let core = core.unwrap_or_else(|| vec![true; n]);
        if core.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: core.len(),
            });
        }
        Ok(SampledSpace {
            dim,
            points,
            mesh,
            core,
            metric,
            lattice: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn raw_points(&self) -> &[f64] {
        &self.points
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    /// Core flags per point.
    pub fn core(&self) -> &[bool] {
        &self.core
    }

    pub fn core_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.core[i]).collect()
    }

    /// True when every point lies in the compact core.
    pub fn is_compact(&self) -> bool {
        self.core.iter().all(|&c| c)
    }

    /// Same points under another metric of the same dimension.
    pub fn with_metric(&self, metric: Metric) -> Result<Self> {
        if metric.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: metric.dim(),
            });
        }
        Ok(SampledSpace {
            metric,
            ..self.clone()
        })
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.metric.eval_unchecked(self.point(i), self.point(j))
    }

    /// Index of the sample nearest to `x`.
    pub fn nearest(&self, x: &[f64]) -> usize {
        match &self.lattice {
            Some(l) => l.nearest(x),
            None => {
                let mut best = (f64::INFINITY, 0);
                for (i, p) in self.points().enumerate() {
                    let d = self.metric.eval_unchecked(p, x);
                    if d < best.0 {
                        best = (d, i);
                    }
                }
                best.1
            }
        }
    }

    /// Discretized dynamics: point `i` goes to the sample nearest `T(p_i)`.
    pub fn grid_map(&self, spec: &SystemSpec) -> Result<Vec<usize>> {
        let dim = spec.state_dim()?;
        if dim != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: dim,
            });
        }
        Ok((0..self.len())
            .into_par_iter()
            .map_init(
                || vec![0.0; dim],
                |buf, i| {
                    spec.step_into(self.point(i), buf);
                    self.nearest(buf)
                },
            )
            .collect())
    }
}

/// Deterministic δ-dense lattice for `spec`, with the canonical metric.
pub fn sample_grid(spec: &SystemSpec, delta: f64) -> Result<SampledSpace> {
    sample_grid_with_budget(spec, delta, DEFAULT_POINT_BUDGET)
}

pub fn sample_grid_with_budget(
    spec: &SystemSpec,
    delta: f64,
    budget: usize,
) -> Result<SampledSpace> {
    if !(delta > 0.0) {
        return Err(Error::Range(format!("mesh must be positive, got {delta}")));
    }
    spec.validate()?;
    let spec = resolve_for_mesh(spec, delta);
    let mut plan = Plan::default();
    plan.push(&spec, delta)?;
    let required = plan.axes.iter().map(|a| a.count as u128).product::<u128>();
    if required > budget as u128 {
        return Err(Error::Resource {
            what: "sample points".into(),
            required,
            budget: budget as u128,
        });
    }
    let n = required as usize;
    let dim = plan.axes.len();
    let mut points = vec![0.0; n * dim];
    let mut core = vec![true; n];
    let mut digits = vec![0usize; dim];
    for i in 0..n {
        let p = &mut points[i * dim..(i + 1) * dim];
        for (c, a) in plan.axes.iter().enumerate() {
            p[c] = a.value(digits[c]);
        }
        core[i] = plan.core_bounds.iter().all(|&(c, r)| p[c].abs() <= r);
        for c in (0..dim).rev() {
            digits[c] += 1;
            if digits[c] < plan.axes[c].count {
                break;
            }
            digits[c] = 0;
        }
    }
    Ok(SampledSpace {
        dim,
        points,
        mesh: delta,
        core,
        metric: spec.canonical_metric()?,
        lattice: Some(Lattice { axes: plan.axes }),
    })
}

/// Unresolved prefixes get the shortest length whose tail weight is ≤ δ.
fn resolve_for_mesh(spec: &SystemSpec, delta: f64) -> SystemSpec {
    let len = ((1.0 / delta).ceil() as usize).saturating_sub(1).max(1);
    match spec {
        SystemSpec::Product { factors } => SystemSpec::Product {
            factors: factors
                .iter()
                .enumerate()
                .map(|(j, f)| resolve_for_mesh(f, delta * (j + 1) as f64))
                .collect(),
        },
        SystemSpec::Iterate { base, k } => SystemSpec::Iterate {
            base: Box::new(resolve_for_mesh(base, delta)),
            k: *k,
        },
        SystemSpec::FullShift {
            truncation: None, ..
        }
        | SystemSpec::RealShift { truncation: None }
        | SystemSpec::FormalDerivative { truncation: None } => spec.with_truncation(len),
        other => other.clone(),
    }
}

#[derive(Default)]
struct Plan {
    axes: Vec<Axis>,
    // (coordinate, radius): the point is in the core when |x_c| ≤ radius
    core_bounds: Vec<(usize, f64)>,
}

impl Plan {
    fn push(&mut self, spec: &SystemSpec, delta: f64) -> Result<()> {
        match spec {
            SystemSpec::FullShift { m, truncation } => {
                for _ in 0..truncation.unwrap_or(1) {
                    self.axes.push(Axis {
                        transform: AxisTransform::Identity,
                        start: 0.0,
                        step: 1.0,
                        count: *m as usize,
                        periodic: false,
                    });
                }
            }
            SystemSpec::RealShift { truncation } | SystemSpec::FormalDerivative { truncation } => {
                // coordinate j carries weight 1/j, so it needs angular mesh j·δ
                for j in 1..=truncation.unwrap_or(1) {
                    self.axes.push(angle_axis(delta * j as f64));
                }
            }
            SystemSpec::Product { factors } => {
                for (j, f) in factors.iter().enumerate() {
                    self.push(f, delta * (j + 1) as f64)?;
                }
            }
            SystemSpec::LinearMap { matrix, metric } => match *metric {
                LineMetric::Arctan { core_radius } => {
                    for _ in 0..matrix.len() {
                        self.core_bounds.push((self.axes.len(), core_radius));
                        self.axes.push(angle_axis(delta));
                    }
                }
                LineMetric::Window { radius } => {
                    let count = (2.0 * radius / delta).ceil() as usize + 1;
                    for _ in 0..matrix.len() {
                        self.axes.push(Axis {
                            transform: AxisTransform::Identity,
                            start: -radius,
                            step: 2.0 * radius / (count - 1) as f64,
                            count,
                            periodic: false,
                        });
                    }
                }
            },
            SystemSpec::Torus { matrix } => {
                let count = (1.0 / delta).ceil().max(1.0) as usize;
                for _ in 0..matrix.len() {
                    self.axes.push(Axis {
                        transform: AxisTransform::Identity,
                        start: 0.0,
                        step: 1.0 / count as f64,
                        count,
                        periodic: true,
                    });
                }
            }
            SystemSpec::Iterate { base, .. } => self.push(base, delta)?,
            SystemSpec::Finite { map, .. } => self.axes.push(Axis {
                transform: AxisTransform::Identity,
                start: 0.0,
                step: 1.0,
                count: map.len(),
                periodic: false,
            }),
        }
        Ok(())
    }
}

/// Cell midpoints of a uniform partition of `u ∈ (-1/2, 1/2)` with spacing
/// at most `delta`, mapped back through `tan(π u)`.
fn angle_axis(delta: f64) -> Axis {
    let count = (1.0 / delta).ceil().max(1.0) as usize;
    let step = 1.0 / count as f64;
    Axis {
        transform: AxisTransform::Arctan,
        start: -0.5 + step / 2.0,
        step,
        count,
        periodic: false,
    }
}
