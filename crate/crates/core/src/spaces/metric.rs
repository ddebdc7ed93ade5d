//! Metrics on flat coordinate vectors.
//!
//! Every state in the toolkit is a `&[f64]`. A [`Metric`] knows how many
//! coordinates it consumes and how to compare two states. Product-type
//! metrics are built from factor metrics of diameter at most one, where the
//! factor at (1-based) position `j` is scaled by a weight `w_j` (by default
//! `1/j`) and the distance is the supremum over factors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strict or non-strict comparison against a radius.
///
/// Separated sets use `d_n > ε`; spanning sets use open balls `d_n < ε`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Separation,
    Spanning,
}

/// Factor weights of a product metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// `w_j = 1/j`
    #[default]
    Harmonic,
    /// `w_j = 2^{-j}`
    Geometric,
}

impl WeightRule {
    /// Weight of the factor at 1-based position `j`.
    pub fn weight(self, j: usize) -> f64 {
        match self {
            WeightRule::Harmonic => 1.0 / j as f64,
            WeightRule::Geometric => 0.5f64.powi(j as i32),
        }
    }

    /// Largest `j` whose weight exceeds (separation) or reaches (spanning)
    /// `eps`. Zero when no factor qualifies.
    pub fn depth(self, eps: f64, mode: Mode) -> usize {
        let mut j = 0;
        loop {
            let w = self.weight(j + 1);
            let hit = match mode {
                Mode::Separation => w > eps,
                Mode::Spanning => w >= eps,
            };
            if !hit {
                return j;
            }
            j += 1;
        }
    }
}

/// Number of leading coordinates of a harmonic product metric that can
/// influence an ε-decision.
///
/// Coordinates beyond this depth have weight `1/j` that can neither exceed
/// (separation) nor reach (spanning) `eps`, so separated and spanning counts
/// at radius `eps` ignore them exactly. Returns 0 in separation mode at
/// `eps = 1`, where no pair is ever separated.
pub fn truncation_depth(eps: f64, mode: Mode) -> Result<usize> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Range(format!("eps must lie in (0, 1], got {eps}")));
    }
    Ok(WeightRule::Harmonic.depth(eps, mode))
}

/// A metric on fixed-length coordinate vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    /// One coordinate, `d(a, b) = [a != b]`.
    Discrete,
    /// `max_i min(|a_i - b_i|, 1)`.
    Clamped {
        dim: usize,
    },
    /// `max_i |atan a_i - atan b_i| / π`: the restriction of a metric on the
    /// two-point compactification of each real line.
    Arctan {
        dim: usize,
    },
    /// `max_i min(|Δ_i|, 1 - |Δ_i|)` on `[0, 1)^dim`.
    TorusWrap {
        dim: usize,
    },
    /// Explicit distance table; a state is `[index]`.
    Table {
        size: usize,
        distances: Vec<f64>,
    },
    Product(ProductMetric),
}

/// `sup_j w_j · d_j(x_j, y_j)` over factor metrics with diameter ≤ 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProductMetricDoc", into = "ProductMetricDoc")]
pub struct ProductMetric {
    factors: Vec<Metric>,
    weights: WeightRule,
    offsets: Vec<usize>,
    // per factor: (weight, max over later factors of weight · diameter)
    caps: Vec<(f64, f64)>,
}

#[derive(Clone, Serialize, Deserialize)]
struct ProductMetricDoc {
    factors: Vec<Metric>,
    #[serde(default)]
    weights: WeightRule,
}

impl TryFrom<ProductMetricDoc> for ProductMetric {
    type Error = Error;
    fn try_from(doc: ProductMetricDoc) -> Result<Self> {
        ProductMetric::new(doc.factors, doc.weights)
    }
}

impl From<ProductMetric> for ProductMetricDoc {
    fn from(pm: ProductMetric) -> Self {
        ProductMetricDoc {
            factors: pm.factors,
            weights: pm.weights,
        }
    }
}

/// Product-metric distance with the certified bound on unstored factors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductDistance {
    pub value: f64,
    /// Any factor past the stored prefix contributes at most this much.
    pub tail_bound: f64,
}

/// Per-coordinate lower-bound data used by spatial indexes.
///
/// For every metric here, `d(x, y) ≥ weight · ρ(x_c, y_c)` where `ρ` is the
/// coordinate distance implied by `kind`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoordinateBound {
    pub coordinate: usize,
    pub weight: f64,
    pub kind: CoordinateKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordinateKind {
    /// `ρ = [a != b]`
    Discrete,
    /// `ρ = min(|a - b|, 1)`
    Linear,
    /// `ρ = |atan a - atan b| / π`
    Angle,
    /// `ρ = min(|Δ|, 1 - |Δ|)` on the unit circle
    Circle,
    /// No usable coordinate structure.
    Opaque,
}

impl CoordinateKind {
    pub fn diameter(self) -> f64 {
        match self {
            CoordinateKind::Circle => 0.5,
            _ => 1.0,
        }
    }
}

impl ProductMetric {
    pub fn new(factors: Vec<Metric>, weights: WeightRule) -> Result<Self> {
        for (j, f) in factors.iter().enumerate() {
            let diam = f.diameter_bound();
            if diam > 1.0 + 1e-12 {
                return Err(Error::Validation(format!(
                    "factor {} has diameter {diam} > 1",
                    j + 1
                )));
            }
        }
        let mut pm = ProductMetric {
            factors,
            weights,
            offsets: Vec::new(),
            caps: Vec::new(),
        };
        pm.rebuild_offsets();
        Ok(pm)
    }

    /// `len` copies of the same factor metric.
    pub fn uniform(factor: Metric, len: usize, weights: WeightRule) -> Result<Self> {
        Self::new(vec![factor; len], weights)
    }

    fn rebuild_offsets(&mut self) {
        self.offsets.clear();
        let mut at = 0;
        for f in &self.factors {
            self.offsets.push(at);
            at += f.dim();
        }
        self.offsets.push(at);
        let n = self.factors.len();
        self.caps = vec![(0.0, 0.0); n];
        let mut tail = 0.0f64;
        for j in (0..n).rev() {
            let w = self.weights.weight(j + 1);
            tail = tail.max(w * self.factors[j].diameter_bound());
            self.caps[j] = (w, tail);
        }
    }

    pub fn factors(&self) -> &[Metric] {
        &self.factors
    }

    pub fn weights(&self) -> WeightRule {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let offsets = &self.offsets;
        let mut best = 0.0f64;
        for (j, f) in self.factors.iter().enumerate() {
            let (w, tail) = self.caps[j];
            if tail <= best {
                break;
            }
            let (a, b) = (offsets[j], offsets[j + 1]);
            let d = w * f.eval_unchecked(&x[a..b], &y[a..b]);
            if d > best {
                best = d;
            }
        }
        best
    }
}

/// Distance between two stored prefixes under a product metric.
///
/// Fails with a dimension error when the tuples do not match the metric's
/// stored length.
pub fn eval_product_metric(x: &[f64], y: &[f64], pm: &ProductMetric) -> Result<ProductDistance> {
    let dim = pm.dim();
    for v in [x, y] {
        if v.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: v.len(),
            });
        }
    }
    Ok(ProductDistance {
        value: pm.eval_unchecked(x, y),
        tail_bound: pm.weights.weight(pm.len() + 1),
    })
}

impl Metric {
    /// Harmonic product of `len` discrete coordinates: the canonical metric
    /// on (a prefix of) a full shift.
    pub fn symbolic(len: usize) -> Metric {
        Metric::Product(
            ProductMetric::uniform(Metric::Discrete, len, WeightRule::Harmonic)
                .expect("discrete factors have diameter 1"),
        )
    }

    pub fn table(distances: &[Vec<f64>]) -> Result<Metric> {
        let size = distances.len();
        let mut flat = Vec::with_capacity(size * size);
        for row in distances {
            if row.len() != size {
                return Err(Error::Dimension {
                    expected: size,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        for i in 0..size {
            if flat[i * size + i] != 0.0 {
                return Err(Error::Validation(format!("d({i},{i}) != 0")));
            }
            for j in 0..size {
                let d = flat[i * size + j];
                if !(d >= 0.0) || d != flat[j * size + i] {
                    return Err(Error::Validation(format!(
                        "table entry ({i},{j}) is negative or asymmetric"
                    )));
                }
            }
        }
        Ok(Metric::Table {
            size,
            distances: flat,
        })
    }

    /// Number of coordinates consumed.
    pub fn dim(&self) -> usize {
        match self {
            Metric::Discrete | Metric::Table { .. } => 1,
            Metric::Clamped { dim } | Metric::Arctan { dim } | Metric::TorusWrap { dim } => *dim,
            Metric::Product(pm) => pm.dim(),
        }
    }

    pub fn diameter_bound(&self) -> f64 {
        match self {
            Metric::Discrete | Metric::Clamped { .. } | Metric::Arctan { .. } => 1.0,
            Metric::TorusWrap { .. } => 0.5,
            Metric::Table { distances, .. } => distances.iter().cloned().fold(0.0, f64::max),
            Metric::Product(pm) => pm
                .factors
                .iter()
                .enumerate()
                .map(|(j, f)| pm.weights.weight(j + 1) * f.diameter_bound())
                .fold(0.0, f64::max),
        }
    }

    /// Checked evaluation.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let dim = self.dim();
        for v in [x, y] {
            if v.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        if let Metric::Table { size, .. } = self {
            for v in [x, y] {
                let i = v[0];
                if !(i >= 0.0 && (i as usize) < *size && i.fract() == 0.0) {
                    return Err(Error::Validation(format!("{i} is not a table index")));
                }
            }
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluation without length checks; slices must have `dim()` entries.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::Discrete => {
                if x[0] == y[0] {
                    0.0
                } else {
                    1.0
                }
            }
            Metric::Clamped { .. } => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b).abs().min(1.0))
                .fold(0.0, f64::max),
            Metric::Arctan { .. } => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a.atan() - b.atan()).abs() / PI)
                .fold(0.0, f64::max),
            Metric::TorusWrap { .. } => x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let d = (a - b).abs().rem_euclid(1.0);
                    d.min(1.0 - d)
                })
                .fold(0.0, f64::max),
            Metric::Table { size, distances } => distances[x[0] as usize * size + y[0] as usize],
            Metric::Product(pm) => pm.eval_unchecked(x, y),
        }
    }

    /// Coordinate lower bounds, flattened through nested products.
    pub fn coordinate_bounds(&self) -> Vec<CoordinateBound> {
        let mut out = Vec::with_capacity(self.dim());
        self.push_bounds(0, 1.0, &mut out);
        out
    }

    fn push_bounds(&self, offset: usize, weight: f64, out: &mut Vec<CoordinateBound>) {
        let mut push = |c: usize, kind: CoordinateKind| {
            out.push(CoordinateBound {
                coordinate: offset + c,
                weight,
                kind,
            })
        };
        match self {
            Metric::Discrete => push(0, CoordinateKind::Discrete),
            Metric::Table { .. } => push(0, CoordinateKind::Opaque),
            Metric::Clamped { dim } => (0..*dim).for_each(|c| push(c, CoordinateKind::Linear)),
            Metric::Arctan { dim } => (0..*dim).for_each(|c| push(c, CoordinateKind::Angle)),
            Metric::TorusWrap { dim } => (0..*dim).for_each(|c| push(c, CoordinateKind::Circle)),
            Metric::Product(pm) => {
                let offsets = &pm.offsets;
                for (j, f) in pm.factors.iter().enumerate() {
                    f.push_bounds(offset + offsets[j], weight * pm.weights.weight(j + 1), out);
                }
            }
        }
    }

    /// True when every coordinate is discrete, so `d` only takes the values
    /// `w_c` and the iterated metric is an ultrametric.
    pub fn is_symbolic(&self) -> bool {
        self.coordinate_bounds()
            .iter()
            .all(|b| b.kind == CoordinateKind::Discrete)
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            Metric::Discrete => "discrete".into(),
            Metric::Clamped { .. } => "clamped".into(),
            Metric::Arctan { .. } => "arctan".into(),
            Metric::TorusWrap { .. } => "torus_wrap".into(),
            Metric::Table { .. } => "table".into(),
            Metric::Product(pm) => {
                let w = match pm.weights {
                    WeightRule::Harmonic => "harmonic",
                    WeightRule::Geometric => "geometric",
                };
                let inner: Vec<String> = dedup_labels(pm.factors.iter().map(|f| f.label()));
                format!("{w}({})", inner.join(","))
            }
        }
    }

    /// Same metric with every product's weight rule replaced.
    pub fn with_weights(&self, rule: WeightRule) -> Metric {
        match self {
            Metric::Product(pm) => Metric::Product(
                ProductMetric::new(
                    pm.factors.iter().map(|f| f.with_weights(rule)).collect(),
                    rule,
                )
                .expect("reweighting keeps factor diameters"),
            ),
            other => other.clone(),
        }
    }
}

fn dedup_labels(it: impl Iterator<Item = String>) -> Vec<String> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for l in it {
        match out.last_mut() {
            Some((last, n)) if *last == l => *n += 1,
            _ => out.push((l, 1)),
        }
    }
    out.into_iter()
        .map(|(l, n)| if n > 1 { format!("{l}x{n}") } else { l })
        .collect()
}
