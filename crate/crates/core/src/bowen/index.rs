//! Orbit tables and a cell index for `d_n`-neighborhood queries.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::Result;
use crate::spaces::{orbit_into, CoordinateBound, CoordinateKind, Metric, Mode, SampledSpace};
use crate::systems::SystemSpec;

const MAX_KEYED_CONTINUOUS: usize = 3;

/// Largest orbit table, in stored coordinates (1 GiB of `f64`).
pub const TABLE_BUDGET: usize = 1 << 27;

/// Exact orbit segments `x, T x, …, T^{h-1} x` of every sample point.
pub struct OrbitTable {
    dim: usize,
    horizon: usize,
    data: Vec<f64>,
}

impl OrbitTable {
    pub fn build(space: &SampledSpace, spec: &SystemSpec, horizon: usize) -> Result<Self> {
        let dim = spec.state_dim()?;
        if dim != space.dim() {
            return Err(crate::Error::Dimension {
                expected: space.dim(),
                got: dim,
            });
        }
        let stride = dim * horizon;
        let required = (space.len() as u128) * stride as u128;
        if required > TABLE_BUDGET as u128 {
            return Err(crate::Error::Resource {
                what: "orbit table coordinates".into(),
                required,
                budget: TABLE_BUDGET as u128,
            });
        }
        let mut data = vec![0.0; space.len() * stride];
        if stride > 0 {
            data.par_chunks_mut(stride)
                .enumerate()
                .for_each(|(i, chunk)| {
                    let mut out = Vec::with_capacity(stride);
                    orbit_into(spec, space.point(i), horizon, dim, &mut out);
                    chunk.copy_from_slice(&out);
                });
        }
        Ok(OrbitTable { dim, horizon, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The stored orbit segment of point `i`, state after state.
    #[inline]
    pub fn orbit(&self, i: usize) -> &[f64] {
        let stride = self.dim * self.horizon;
        &self.data[i * stride..(i + 1) * stride]
    }

    pub fn len(&self) -> usize {
        self.data.len() / (self.dim * self.horizon).max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn state(&self, i: usize, j: usize) -> &[f64] {
        let at = (i * self.horizon + j) * self.dim;
        &self.data[at..at + self.dim]
    }

    /// `d_n(p_i, p_k)`, stopping once the running maximum exceeds `stop`.
    #[inline]
    pub fn distance(&self, metric: &Metric, i: usize, k: usize, n: usize, stop: f64) -> f64 {
        let mut best = 0.0f64;
        for j in 0..n {
            best = best.max(metric.eval_unchecked(self.state(i, j), self.state(k, j)));
            if best > stop {
                break;
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug)]
struct Keyed {
    time: usize,
    coordinate: usize,
    kind: CoordinateKind,
    width: f64,
    // number of cells around the circle, for wrap-around neighbors
    wrap: Option<i64>,
}

/// Buckets points by a key such that two points within `d_n`-distance `ε`
/// (`≤ ε` in separation mode, `< ε` in spanning mode) have keys that agree
/// on every discrete part and differ by at most one cell on every
/// continuous part.
pub struct CellIndex {
    discrete: Vec<(usize, usize)>,
    continuous: Vec<Keyed>,
    /// Key equality alone decides closeness.
    pub exact: bool,
    buckets: HashMap<Vec<i64>, Vec<u32>>,
}

impl CellIndex {
    /// Chooses the keyed coordinates. Without a `table` every binding
    /// linear coordinate is assumed to spread over many cells.
    pub fn plan(
        metric: &Metric,
        table: Option<&OrbitTable>,
        n: usize,
        eps: f64,
        mode: Mode,
    ) -> Self {
        let bounds = metric.coordinate_bounds();
        let mut discrete = Vec::new();
        let mut exact = true;
        let mut candidates: Vec<(f64, Keyed)> = Vec::new();
        let probe_times = {
            let mut t = vec![0, n - 1, (n - 1) / 2];
            t.sort_unstable();
            t.dedup();
            t
        };
        for b in &bounds {
            let CoordinateBound {
                coordinate,
                weight,
                kind,
            } = *b;
            let binding = match mode {
                Mode::Separation => weight * kind.diameter() > eps,
                Mode::Spanning => weight * kind.diameter() >= eps,
            };
            if !binding {
                continue;
            }
            match kind {
                CoordinateKind::Discrete => {
                    discrete.extend((0..n).map(|j| (j, coordinate)));
                }
                CoordinateKind::Opaque => exact = false,
                _ => {
                    exact = false;
                    let width = eps / weight;
                    for &time in &probe_times {
                        let spread = match (kind, table) {
                            (CoordinateKind::Linear, None) => f64::INFINITY,
                            (CoordinateKind::Linear, Some(table)) => {
                                let (lo, hi) = (0..table.len()).fold(
                                    (f64::INFINITY, f64::NEG_INFINITY),
                                    |(lo, hi), i| {
                                        let v = table.state(i, time)[coordinate];
                                        (lo.min(v), hi.max(v))
                                    },
                                );
                                (hi - lo).max(0.0)
                            }
                            _ => 1.0,
                        };
                        let wrap =
                            (kind == CoordinateKind::Circle).then(|| (1.0 / width).floor() as i64);
                        let cells = match wrap {
                            Some(c) => c as f64,
                            None => spread / width,
                        };
                        if cells >= 3.0 {
                            candidates.push((
                                cells,
                                Keyed {
                                    time,
                                    coordinate,
                                    kind,
                                    width: match wrap {
                                        Some(c) => 1.0 / c as f64,
                                        None => width,
                                    },
                                    wrap,
                                },
                            ));
                        }
                    }
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
        let continuous = candidates
            .into_iter()
            .take(MAX_KEYED_CONTINUOUS)
            .map(|(_, k)| k)
            .collect();
        CellIndex {
            discrete,
            continuous,
            exact,
            buckets: HashMap::new(),
        }
    }

    pub fn key(&self, table: &OrbitTable, i: usize) -> Vec<i64> {
        self.key_of(table.orbit(i), table.dim())
    }

    /// Key of an orbit segment laid out state after state.
    pub fn key_of(&self, orbit: &[f64], dim: usize) -> Vec<i64> {
        let at = |time: usize, c: usize| orbit[time * dim + c];
        let mut key = Vec::with_capacity(self.discrete.len() + self.continuous.len());
        for &(j, c) in &self.discrete {
            key.push(at(j, c).to_bits() as i64);
        }
        for k in &self.continuous {
            let v = at(k.time, k.coordinate);
            let u = match k.kind {
                CoordinateKind::Angle => v.atan() / std::f64::consts::PI,
                CoordinateKind::Circle => v.rem_euclid(1.0),
                _ => v,
            };
            let mut cell = (u / k.width).floor() as i64;
            if let Some(c) = k.wrap {
                cell = cell.rem_euclid(c);
            }
            key.push(cell);
        }
        key
    }

    /// Keys of every bucket that may hold a point close to `key`.
    pub fn neighbor_keys(&self, key: &[i64]) -> Vec<Vec<i64>> {
        let base = self.discrete.len();
        let mut out = vec![key.to_vec()];
        for (slot, k) in self.continuous.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * 3);
            for key in &out {
                for d in [-1i64, 0, 1] {
                    let mut nk = key.clone();
                    let mut cell = nk[base + slot] + d;
                    if let Some(c) = k.wrap {
                        cell = cell.rem_euclid(c);
                    }
                    nk[base + slot] = cell;
                    next.push(nk);
                }
            }
            out = next;
        }
        out
    }

    pub fn insert(&mut self, key: Vec<i64>, i: usize) {
        self.buckets.entry(key).or_default().push(i as u32);
    }

    pub fn bucket(&self, key: &[i64]) -> &[u32] {
        self.buckets.get(key).map_or(&[], |v| v.as_slice())
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }
}
