//! Separated and spanning sets under orbit metrics, and the Bowen entropy
//! estimator built on them.
//!
//! All counts are computed on a [`SampledSpace`] with exact orbits of the
//! sample points. When every coordinate that can matter at radius `ε` is
//! discrete (shifts and their products), closeness under `d_n` is decided
//! by comparing finite itineraries, so separated and spanning counts are
//! exact and equal to the number of distinct cylinders.

mod index;

pub use index::{CellIndex, OrbitTable, TABLE_BUDGET};

use std::collections::HashMap;
use std::sync::OnceLock;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covers::{min_subcover_cardinality, Cover};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::spaces::{orbit_into, Metric, Mode, SampledSpace};
use crate::systems::SystemSpec;

/// Largest instance for [`PackingMode::Exact`].
pub const EXACT_POINT_LIMIT: usize = 20;
/// Largest sample for which ball covers are materialized.
pub const SPANNING_POINT_LIMIT: usize = 16_384;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackingMode {
    Greedy,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Maximal set, scanning points in lattice order.
    Greedy,
    /// Maximum cardinality by exhaustive search.
    Exact,
    /// Itinerary classes of a symbolic metric: exact.
    Cylinder,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackingResult {
    pub n: usize,
    pub eps: f64,
    pub selected: Vec<usize>,
    /// `|selected|`; for spanning sets, the best cover size found.
    pub count: usize,
    /// Certified lower bound on the optimum (equals `count` when exact).
    pub lower: usize,
    pub method: Method,
}

impl PackingResult {
    pub fn is_exact(&self) -> bool {
        self.lower == self.count
    }
}

/// Shared inputs for many `(n, ε)` queries on one sample.
///
/// The orbit table is built on first use. Queries whose closeness is
/// decided by itineraries alone recompute orbits on the fly instead, so
/// they run on samples too large to tabulate.
pub struct OrbitContext<'a> {
    pub space: &'a SampledSpace,
    pub spec: &'a SystemSpec,
    pub metric: Metric,
    horizon: usize,
    table: OnceLock<OrbitTable>,
}

impl<'a> OrbitContext<'a> {
    /// Orbits up to `horizon` under the space's metric.
    pub fn new(space: &'a SampledSpace, spec: &'a SystemSpec, horizon: usize) -> Result<Self> {
        Self::with_metric(space, spec, space.metric().clone(), horizon)
    }

    pub fn with_metric(
        space: &'a SampledSpace,
        spec: &'a SystemSpec,
        metric: Metric,
        horizon: usize,
    ) -> Result<Self> {
        if metric.dim() != space.dim() {
            return Err(Error::Dimension {
                expected: space.dim(),
                got: metric.dim(),
            });
        }
        Ok(OrbitContext {
            space,
            spec,
            metric,
            horizon: horizon.max(1),
            table: OnceLock::new(),
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The orbit table, built on first call.
    pub fn table(&self) -> Result<&OrbitTable> {
        if let Some(t) = self.table.get() {
            return Ok(t);
        }
        let t = OrbitTable::build(self.space, self.spec, self.horizon)?;
        Ok(self.table.get_or_init(|| t))
    }

    fn check(&self, n: usize, eps: f64) -> Result<()> {
        if n == 0 || n > self.horizon {
            return Err(Error::Range(format!(
                "n = {n} outside 1..={}",
                self.horizon
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::Range(format!("eps must be positive, got {eps}")));
        }
        Ok(())
    }

    /// `d_n` between sample points `i` and `k`; needs the orbit table.
    pub fn distance(&self, i: usize, k: usize, n: usize) -> Result<f64> {
        Ok(self.table()?.distance(&self.metric, i, k, n, f64::INFINITY))
    }

    fn index(&self, n: usize, eps: f64, mode: Mode) -> Result<CellIndex> {
        let probe = CellIndex::plan(&self.metric, None, n, eps, mode);
        if probe.exact {
            return Ok(probe);
        }
        Ok(CellIndex::plan(
            &self.metric,
            Some(self.table()?),
            n,
            eps,
            mode,
        ))
    }

    /// Keys of every sample point over horizon `n`.
    fn keys(&self, index: &CellIndex, n: usize) -> Result<Vec<Vec<i64>>> {
        if self.table.get().is_none() && index.exact {
            let dim = self.space.dim();
            return Ok((0..self.space.len())
                .into_par_iter()
                .map_init(Vec::new, |buf, i| {
                    buf.clear();
                    orbit_into(self.spec, self.space.point(i), n, dim, buf);
                    index.key_of(buf, dim)
                })
                .collect());
        }
        let table = self.table()?;
        Ok((0..self.space.len())
            .into_par_iter()
            .map(|i| index.key(table, i))
            .collect())
    }

    /// An `(n, ε)`-separated set: pairwise `d_n > ε`.
    pub fn max_separated(&self, n: usize, eps: f64, mode: PackingMode) -> Result<PackingResult> {
        self.check(n, eps)?;
        let m = self.space.len();
        let mut index = self.index(n, eps, Mode::Separation)?;
        if mode == PackingMode::Exact {
            if m > EXACT_POINT_LIMIT {
                return Err(Error::Resource {
                    what: "exact separated set points".into(),
                    required: m as u128,
                    budget: EXACT_POINT_LIMIT as u128,
                });
            }
            let selected = self.maximum_separated(n, eps)?;
            return Ok(PackingResult {
                n,
                eps,
                count: selected.len(),
                lower: selected.len(),
                selected,
                method: Method::Exact,
            });
        }
        let keys = self.keys(&index, n)?;
        let mut selected = Vec::new();
        if index.exact {
            let mut seen = std::collections::HashSet::with_capacity(keys.len());
            for (i, key) in keys.iter().enumerate() {
                if seen.insert(key) {
                    selected.push(i);
                }
            }
        } else {
            let table = self.table()?;
            for (i, key) in keys.into_iter().enumerate() {
                let clash = index.neighbor_keys(&key).iter().any(|nk| {
                    index
                        .bucket(nk)
                        .iter()
                        .any(|&s| table.distance(&self.metric, i, s as usize, n, eps) <= eps)
                });
                if !clash {
                    index.insert(key, i);
                    selected.push(i);
                }
            }
        }
        let method = if index.exact {
            Method::Cylinder
        } else {
            Method::Greedy
        };
        Ok(PackingResult {
            n,
            eps,
            count: selected.len(),
            // any separated set is a lower bound on the maximum
            lower: selected.len(),
            selected,
            method,
        })
    }

    fn maximum_separated(&self, n: usize, eps: f64) -> Result<Vec<usize>> {
        let m = self.space.len();
        let mut compatible = vec![0u32; m];
        for (i, mask) in compatible.iter_mut().enumerate() {
            for k in 0..m {
                if i != k && self.distance(i, k, n)? > eps {
                    *mask |= 1 << k;
                }
            }
        }
        let mut best = 0u32;
        fn grow(cand: u32, chosen: u32, compatible: &[u32], best: &mut u32) {
            if cand == 0 {
                if chosen.count_ones() > best.count_ones() {
                    *best = chosen;
                }
                return;
            }
            if chosen.count_ones() + cand.count_ones() <= best.count_ones() {
                return;
            }
            let v = cand.trailing_zeros() as usize;
            grow(cand & compatible[v], chosen | 1 << v, compatible, best);
            grow(cand & !(1 << v), chosen, compatible, best);
        }
        let all = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
        grow(all, 0, &compatible, &mut best);
        Ok((0..m).filter(|&i| best >> i & 1 == 1).collect())
    }

    /// Open `d_n`-balls `{y : d_n(x, y) < ε}` around every sample point.
    pub fn ball_cover(&self, n: usize, eps: f64) -> Result<Cover> {
        self.check(n, eps)?;
        let m = self.space.len();
        if m > SPANNING_POINT_LIMIT {
            return Err(Error::Resource {
                what: "ball cover points".into(),
                required: m as u128,
                budget: SPANNING_POINT_LIMIT as u128,
            });
        }
        let mut index = self.index(n, eps, Mode::Spanning)?;
        let keys = self.keys(&index, n)?;
        for (i, k) in keys.iter().enumerate() {
            index.insert(k.clone(), i);
        }
        let table = if index.exact {
            None
        } else {
            Some(self.table()?)
        };
        let sets: Vec<FixedBitSet> = (0..m)
            .into_par_iter()
            .map(|x| {
                let mut b = FixedBitSet::with_capacity(m);
                for nk in index.neighbor_keys(&keys[x]) {
                    for &y in index.bucket(&nk) {
                        let y = y as usize;
                        if table.is_none_or(|t| t.distance(&self.metric, x, y, n, eps) < eps) {
                            b.insert(y);
                        }
                    }
                }
                b
            })
            .collect();
        Cover::from_sets(m, sets)
    }

    /// A small `(n, ε)`-spanning set: open balls of radius `ε` around the
    /// selected points cover the sample.
    pub fn min_spanning(&self, n: usize, eps: f64) -> Result<PackingResult> {
        self.check(n, eps)?;
        let index = self.index(n, eps, Mode::Spanning)?;
        if index.exact {
            let mut first: HashMap<Vec<i64>, usize> = HashMap::new();
            for (i, key) in self.keys(&index, n)?.into_iter().enumerate() {
                first.entry(key).or_insert(i);
            }
            let mut selected: Vec<usize> = first.into_values().collect();
            selected.sort_unstable();
            return Ok(PackingResult {
                n,
                eps,
                count: selected.len(),
                lower: selected.len(),
                selected,
                method: Method::Cylinder,
            });
        }
        let balls = self.ball_cover(n, eps)?;
        // ball_cover keeps one member per distinct ball, in first-seen order
        let table = self.table()?;
        let centers = distinct_centers(&balls, self.space.len(), |x, y| {
            table.distance(&self.metric, x, y, n, eps) < eps
        });
        let b = min_subcover_cardinality(&balls, None)?;
        let selected: Vec<usize> = b.witness.iter().map(|&w| centers[w]).collect();
        Ok(PackingResult {
            n,
            eps,
            count: b.upper,
            lower: b.lower,
            selected,
            method: if b.exact {
                Method::Exact
            } else {
                Method::Greedy
            },
        })
    }

    /// `N(balls ε) ≤ s(n, ε) ≤ N(balls ε/2)` with exact integers where
    /// the instance allows.
    pub fn sandwich_check(&self, n: usize, eps: f64) -> Result<SandwichReport> {
        self.check(n, eps)?;
        let mode = if self.space.len() <= EXACT_POINT_LIMIT {
            PackingMode::Exact
        } else {
            PackingMode::Greedy
        };
        let separated = self.max_separated(n, eps, mode)?;
        let outer = self.min_spanning(n, eps)?;
        let inner = self.min_spanning(n, eps / 2.0)?;
        let m = self.space.len();
        let tie = if m <= SPANNING_POINT_LIMIT / 4 {
            let table = self.table()?;
            (0..m).any(|i| (i + 1..m).any(|k| table.distance(&self.metric, i, k, n, eps) == eps))
        } else {
            false
        };
        Ok(SandwichReport {
            n,
            eps,
            lower_holds: outer.lower <= separated.count,
            upper_holds: separated.count <= inner.count,
            exact: outer.is_exact() && inner.is_exact(),
            spanning: outer.count,
            spanning_lower: outer.lower,
            separated: separated.count,
            spanning_half: inner.count,
            tie,
        })
    }
}

/// For each member of `balls`, the first sample point whose open ball it is.
fn distinct_centers(balls: &Cover, m: usize, close: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut lookup: HashMap<&FixedBitSet, usize> = HashMap::new();
    for (w, b) in balls.members().iter().enumerate() {
        lookup.insert(b, w);
    }
    let mut centers = vec![usize::MAX; balls.len()];
    for x in 0..m {
        let mut b = FixedBitSet::with_capacity(m);
        for y in 0..m {
            if close(x, y) {
                b.insert(y);
            }
        }
        if let Some(&w) = lookup.get(&b) {
            if centers[w] == usize::MAX {
                centers[w] = x;
            }
        }
    }
    centers
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub n: usize,
    pub eps: f64,
    /// Best spanning count at radius `ε` and its certified lower bound.
    pub spanning: usize,
    pub spanning_lower: usize,
    pub separated: usize,
    pub spanning_half: usize,
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// Both spanning counts are optimal.
    pub exact: bool,
    /// Some pair sits at distance exactly `ε`. Open balls then need not
    /// contain the points a maximal separated set leaves at distance `ε`,
    /// and the first inequality can fail.
    pub tie: bool,
}

impl SandwichReport {
    pub fn holds(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// Maximal `(n, ε)`-separated set on the sample.
pub fn max_separated(
    space: &SampledSpace,
    spec: &SystemSpec,
    n: usize,
    eps: f64,
    mode: PackingMode,
) -> Result<PackingResult> {
    OrbitContext::new(space, spec, n)?.max_separated(n, eps, mode)
}

/// Small `(n, ε)`-spanning set on the sample.
pub fn min_spanning(
    space: &SampledSpace,
    spec: &SystemSpec,
    n: usize,
    eps: f64,
) -> Result<PackingResult> {
    OrbitContext::new(space, spec, n)?.min_spanning(n, eps)
}

pub fn sandwich_check(
    space: &SampledSpace,
    spec: &SystemSpec,
    n: usize,
    eps: f64,
) -> Result<SandwichReport> {
    OrbitContext::new(space, spec, n)?.sandwich_check(n, eps)
}

/// Counts above this fraction of the sample size are treated as limited by
/// the sampling resolution and left out of fits on continuous spaces.
///
/// On a lattice of spacing `δ` a separated set whose finest gap is `g` can
/// only realize gaps that are multiples of `δ`, so counts carry a relative
/// error of about `δ / g`, which in one dimension is `count / M`.
pub const SATURATION_FRACTION: f64 = 0.125;

/// Fewest `n` values in a fit window, when that many are usable.
pub const MIN_WINDOW: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub n: usize,
    pub count: usize,
    pub log_count: f64,
    pub method: Method,
    /// Counted towards the fitted slope.
    pub in_window: bool,
    /// Excluded as resolution-limited.
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichInterval {
    pub n: usize,
    pub spanning: usize,
    pub separated: usize,
    pub spanning_half: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsCurve {
    pub eps: f64,
    pub rows: Vec<CountRow>,
    /// Least-squares slope of `log s(n, ε)` over the window, in nats.
    pub rate: f64,
    /// `(1/n) log s(n, ε)` at the largest unsaturated `n`.
    pub terminal: f64,
    /// `rate` and `terminal` differ by more than 10%.
    pub disagree: bool,
    pub window: Option<(usize, usize)>,
    pub residual: f64,
    /// No usable growth: every count is equal or resolution-limited.
    pub saturated: bool,
    /// The fit had to use counts above the saturation fraction, so the
    /// rate is biased low. A finer mesh helps.
    pub coarse: bool,
    pub sandwich: Option<SandwichInterval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub curves: Vec<EpsCurve>,
    /// Maximum of the per-ε rates.
    pub rate: f64,
    pub rate_bits: f64,
    /// `s(n, ε)` nondecreasing in `n` for every `ε`.
    pub monotone_in_n: bool,
    /// `s(n, ε)` nonincreasing in `ε` for every `n`.
    pub monotone_in_eps: bool,
    /// Per-ε rates nonincreasing in `ε`.
    pub rates_monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Compute the spanning sandwich at the last `n` when the sample is
    /// small enough.
    pub sandwich: bool,
    pub saturation_fraction: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            sandwich: true,
            saturation_fraction: SATURATION_FRACTION,
        }
    }
}

/// `sup_ε limsup (1/n) log s(n, ε)`, realized as the maximum over
/// `eps_grid` of the slope of `log s(n, ε)` over the trailing half of the
/// usable `n` values.
pub fn bowen_entropy_estimate(
    space: &SampledSpace,
    spec: &SystemSpec,
    eps_grid: &[f64],
    n_range: &[usize],
) -> Result<EntropyEstimate> {
    let n_max = n_range.iter().copied().max().unwrap_or(0);
    let ctx = OrbitContext::new(space, spec, n_max.max(1))?;
    estimate_with(&ctx, eps_grid, n_range, &EstimateOptions::default())
}

pub fn estimate_with(
    ctx: &OrbitContext<'_>,
    eps_grid: &[f64],
    n_range: &[usize],
    opts: &EstimateOptions,
) -> Result<EntropyEstimate> {
    if n_range.len() < 4 {
        return Err(Error::Validation("n range needs at least 4 values".into()));
    }
    if n_range.windows(2).any(|w| w[0] >= w[1]) || n_range[0] == 0 {
        return Err(Error::Validation(
            "n range must be positive and ascending".into(),
        ));
    }
    if eps_grid.is_empty() {
        return Err(Error::Validation("eps grid is empty".into()));
    }
    let diam = ctx.metric.diameter_bound();
    if let Some(&e) = eps_grid.iter().find(|&&e| !(e > 0.0 && e <= diam)) {
        return Err(Error::Range(format!("eps {e} outside (0, {diam}]")));
    }
    let jobs: Vec<(usize, usize)> = (0..eps_grid.len())
        .flat_map(|e| n_range.iter().map(move |&n| (e, n)))
        .collect();
    let counts: Vec<PackingResult> = jobs
        .par_iter()
        .map(|&(e, n)| ctx.max_separated(n, eps_grid[e], PackingMode::Greedy))
        .collect::<Result<_>>()?;
    let m = ctx.space.len();
    let mut curves = Vec::with_capacity(eps_grid.len());
    for (e, &eps) in eps_grid.iter().enumerate() {
        let results = &counts[e * n_range.len()..(e + 1) * n_range.len()];
        let counts: Vec<(usize, usize, Method)> =
            results.iter().map(|r| (r.n, r.count, r.method)).collect();
        let mut curve = fit_counts(eps, &counts, m, opts.saturation_fraction);
        if opts.sandwich {
            let n = *n_range.last().unwrap();
            let feasible =
                results.last().is_some_and(|r| r.method == Method::Cylinder) || m <= 4096;
            if feasible {
                if let Ok(s) = ctx.sandwich_check(n, eps) {
                    curve.sandwich = Some(SandwichInterval {
                        n,
                        spanning: s.spanning,
                        separated: s.separated,
                        spanning_half: s.spanning_half,
                    });
                }
            }
        }
        curves.push(curve);
    }
    let monotone_in_n = curves
        .iter()
        .all(|c| c.rows.windows(2).all(|w| w[0].count <= w[1].count));
    let mut order: Vec<usize> = (0..curves.len()).collect();
    order.sort_by(|&a, &b| curves[a].eps.total_cmp(&curves[b].eps));
    let monotone_in_eps = order.windows(2).all(|w| {
        let (a, b) = (&curves[w[0]], &curves[w[1]]);
        a.rows.iter().zip(&b.rows).all(|(x, y)| x.count >= y.count)
    });
    let rates_monotone = order
        .windows(2)
        .all(|w| curves[w[0]].rate + 1e-9 >= curves[w[1]].rate);
    let rate = curves.iter().map(|c| c.rate).fold(0.0, f64::max);
    Ok(EntropyEstimate {
        curves,
        rate,
        rate_bits: rate / std::f64::consts::LN_2,
        monotone_in_n,
        monotone_in_eps,
        rates_monotone,
    })
}

/// Fits one ε-curve from `(n, s(n, ε), method)` triples on a sample of
/// `m` points, `n` ascending.
pub fn fit_counts(
    eps: f64,
    counts: &[(usize, usize, Method)],
    m: usize,
    fraction: f64,
) -> EpsCurve {
    let limit = |count: usize, method: Method| match method {
        // itinerary counts are exact until every sample is its own class
        Method::Cylinder => count >= m,
        _ => count as f64 > fraction * m as f64,
    };
    let mut rows: Vec<CountRow> = counts
        .iter()
        .map(|&(n, count, method)| CountRow {
            n,
            count,
            log_count: (count as f64).ln(),
            method,
            in_window: false,
            saturated: limit(count, method),
        })
        .collect();
    let mut usable: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].saturated).collect();
    // Too coarse a mesh for the usual rule: keep everything below full resolution.
    let coarse = usable.len() < 2 && rows.iter().filter(|r| r.count < m).count() >= 2;
    if coarse {
        for r in &mut rows {
            r.saturated = r.count >= m;
        }
        usable = (0..rows.len()).filter(|&i| !rows[i].saturated).collect();
    }
    let take = usable.len().div_ceil(2).max(MIN_WINDOW.min(usable.len()));
    let window = &usable[usable.len() - take..];
    for &i in window {
        rows[i].in_window = true;
    }
    let xs: Vec<f64> = window.iter().map(|&i| rows[i].n as f64).collect();
    let ys: Vec<f64> = window.iter().map(|&i| rows[i].log_count).collect();
    let fit = linear_fit(&xs, &ys);
    let flat = window.len() < 2 || ys.iter().all(|&y| y == ys[0]);
    let rate = if flat { 0.0 } else { fit.slope.max(0.0) };
    let terminal = usable
        .last()
        .map_or(0.0, |&i| rows[i].log_count / rows[i].n as f64);
    let disagree = (rate - terminal).abs() > 0.1 * rate.max(terminal).max(1e-12);
    EpsCurve {
        eps,
        window: (window.len() >= 2).then(|| (rows[window[0]].n, rows[*window.last().unwrap()].n)),
        rows,
        rate,
        terminal,
        disagree,
        residual: fit.residual,
        saturated: flat,
        coarse,
        sandwich: None,
    }
}
