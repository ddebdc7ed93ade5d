//! Finite partitions, measures on a sampled ground set, partition entropy
//! and Kolmogorov-Sinai rates.
//!
//! Entropies use natural logarithms and the convention `0 · log(1/0) = 0`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::covers::GridDynamics;
use crate::error::{Error, Result};
use crate::spaces::{Metric, SampledSpace};

const MASS_TOL: f64 = 1e-12;
const INVARIANCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Cylinder,
    BallDifference,
    Given,
}

/// A partition of `{0, …, M-1}` stored as a cell label per element.
/// Labels are `0..cells` and every label is used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitePartition {
    labels: Vec<usize>,
    cells: usize,
    /// Itinerary word of each cell for refined partitions.
    words: Option<Vec<Vec<usize>>>,
    provenance: Provenance,
}

impl FinitePartition {
    /// Relabels in order of first appearance.
    pub fn from_labels(labels: &[usize], provenance: Provenance) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Validation("partition of an empty set".into()));
        }
        let mut fresh = HashMap::new();
        let labels: Vec<usize> = labels
            .iter()
            .map(|&l| {
                let next = fresh.len();
                *fresh.entry(l).or_insert(next)
            })
            .collect();
        Ok(FinitePartition {
            cells: fresh.len(),
            labels,
            words: None,
            provenance,
        })
    }

    /// From explicit cells, which must be disjoint, nonempty and exhaustive.
    pub fn from_cells(ground: usize, cells: &[Vec<usize>], provenance: Provenance) -> Result<Self> {
        let mut labels = vec![usize::MAX; ground];
        for (c, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::Validation(format!("cell {c} is empty")));
            }
            for &e in cell {
                if e >= ground {
                    return Err(Error::Validation(format!("element {e} outside ground set")));
                }
                if labels[e] != usize::MAX {
                    return Err(Error::Validation(format!("element {e} lies in two cells")));
                }
                labels[e] = c;
            }
        }
        if let Some(element) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Coverage { element });
        }
        Self::from_labels(&labels, provenance)
    }

    /// Groups sample points by `key(point)`.
    pub fn by_key<K: std::hash::Hash + Eq>(
        space: &SampledSpace,
        provenance: Provenance,
        key: impl Fn(&[f64]) -> K,
    ) -> Result<Self> {
        let mut ids = HashMap::new();
        let labels: Vec<usize> = space
            .points()
            .map(|p| {
                let next = ids.len();
                *ids.entry(key(p)).or_insert(next)
            })
            .collect();
        Self::from_labels(&labels, provenance)
    }

    /// Cylinders of a symbolic sample: points with the same first `depth`
    /// coordinates share a cell.
    pub fn cylinders(space: &SampledSpace, depth: usize) -> Result<Self> {
        if depth == 0 || depth > space.dim() {
            return Err(Error::Range(format!(
                "cylinder depth {depth} outside 1..={}",
                space.dim()
            )));
        }
        Self::by_key(space, Provenance::Cylinder, |p| {
            p[..depth].iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        })
    }

    /// `k` equal half-open intervals `[i/k, (i+1)/k)` of the first
    /// coordinate, for samples of the circle or torus.
    pub fn arcs(space: &SampledSpace, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Range("need at least one arc".into()));
        }
        Self::by_key(space, Provenance::Cylinder, |p| {
            ((p[0].rem_euclid(1.0) * k as f64).floor() as usize).min(k - 1)
        })
    }

    pub fn ground_size(&self) -> usize {
        self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells == 0
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, x: usize) -> usize {
        self.labels[x]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn words(&self) -> Option<&[Vec<usize>]> {
        self.words.as_deref()
    }

    pub fn cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cells];
        for (x, &c) in self.labels.iter().enumerate() {
            out[c].push(x);
        }
        out
    }

    /// Every cell of `self` lies inside a cell of `coarser`.
    pub fn refines(&self, coarser: &FinitePartition) -> bool {
        if self.ground_size() != coarser.ground_size() {
            return false;
        }
        let mut image = vec![usize::MAX; self.cells];
        self.labels.iter().zip(&coarser.labels).all(|(&f, &c)| {
            if image[f] == usize::MAX {
                image[f] = c;
            }
            image[f] == c
        })
    }

    /// Largest distance between two points of a common cell, per cell.
    pub fn diameters(&self, space: &SampledSpace, metric: &Metric) -> Vec<f64> {
        self.cells()
            .iter()
            .map(|cell| {
                let mut d = 0.0f64;
                for (a, &x) in cell.iter().enumerate() {
                    for &y in &cell[a + 1..] {
                        d = d.max(metric.eval_unchecked(space.point(x), space.point(y)));
                    }
                }
                d
            })
            .collect()
    }
}

/// Nonnegative weights on the atoms of the ground set, or on the cells of a
/// partition, with total mass in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMeasure {
    weights: Vec<f64>,
    cells: Option<FinitePartition>,
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w >= 0.0) || !w.is_finite())
    {
        return Err(Error::Validation(format!("weight {i} is {w}")));
    }
    let mass: f64 = weights.iter().sum();
    if mass > 1.0 + MASS_TOL {
        return Err(Error::Range(format!("total mass {mass} exceeds 1")));
    }
    Ok(mass)
}

impl FiniteMeasure {
    pub fn atoms(weights: Vec<f64>) -> Result<Self> {
        check_weights(&weights)?;
        Ok(FiniteMeasure {
            weights,
            cells: None,
        })
    }

    /// Weights on the cells of `partition`.
    pub fn on_cells(partition: FinitePartition, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != partition.len() {
            return Err(Error::Dimension {
                expected: partition.len(),
                got: weights.len(),
            });
        }
        check_weights(&weights)?;
        Ok(FiniteMeasure {
            weights,
            cells: Some(partition),
        })
    }

    pub fn uniform(ground: usize) -> Result<Self> {
        Self::atoms(vec![1.0 / ground as f64; ground])
    }

    pub fn point_mass(ground: usize, x: usize) -> Result<Self> {
        let mut w = vec![0.0; ground];
        w[x] = 1.0;
        Self::atoms(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_atomic(&self) -> bool {
        self.cells.is_none()
    }

    pub fn ground_size(&self) -> usize {
        match &self.cells {
            Some(p) => p.ground_size(),
            None => self.weights.len(),
        }
    }

    /// `μ(A)` for every cell `A` of `c`.
    pub fn cell_weights(&self, c: &FinitePartition) -> Result<Vec<f64>> {
        if c.ground_size() != self.ground_size() {
            return Err(Error::GroundMismatch {
                left: self.ground_size(),
                right: c.ground_size(),
            });
        }
        let mut out = vec![0.0; c.len()];
        match &self.cells {
            None => {
                for (x, &w) in self.weights.iter().enumerate() {
                    out[c.label(x)] += w;
                }
            }
            Some(own) => {
                if !own.refines(c) {
                    return Err(Error::Precondition(
                        "measure is given on cells that do not refine the partition".into(),
                    ));
                }
                let mut seen = vec![false; own.len()];
                for x in 0..own.ground_size() {
                    let f = own.label(x);
                    if !seen[f] {
                        seen[f] = true;
                        out[c.label(x)] += self.weights[f];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `T_* μ`, for measures on atoms.
    pub fn push_forward(&self, dynamics: &GridDynamics) -> Result<FiniteMeasure> {
        if self.cells.is_some() {
            return Err(Error::Unsupported(
                "push-forward needs an atomic measure".into(),
            ));
        }
        if dynamics.len() != self.weights.len() {
            return Err(Error::GroundMismatch {
                left: self.weights.len(),
                right: dynamics.len(),
            });
        }
        let mut out = vec![0.0; self.weights.len()];
        for (x, &y) in dynamics.map().iter().enumerate() {
            out[y] += self.weights[x];
        }
        Ok(FiniteMeasure {
            weights: out,
            cells: None,
        })
    }

    /// Largest atom-wise difference between `μ` and `T_* μ`.
    pub fn invariance_defect(&self, dynamics: &GridDynamics) -> Result<f64> {
        let pushed = self.push_forward(dynamics)?;
        Ok(self
            .weights
            .iter()
            .zip(&pushed.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// JSON fixture `{cells: [[indices]], weights: [reals]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureFixture {
    pub cells: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

impl MeasureFixture {
    pub fn load(&self) -> Result<(FinitePartition, FiniteMeasure)> {
        let ground = self.cells.iter().map(|c| c.len()).sum();
        let p = FinitePartition::from_cells(ground, &self.cells, Provenance::Given)?;
        // cells keep their order, so weights line up with labels
        let m = FiniteMeasure::on_cells(p.clone(), self.weights.clone())?;
        Ok((p, m))
    }
}

fn eta(w: f64) -> f64 {
    if w > 0.0 {
        -w * w.ln()
    } else {
        0.0
    }
}

/// `H_μ(C) = Σ μ(A) log(1/μ(A))`.
pub fn partition_entropy(mu: &FiniteMeasure, c: &FinitePartition) -> Result<f64> {
    Ok(mu.cell_weights(c)?.into_iter().map(eta).sum())
}

/// `C ∨ T⁻¹C ∨ … ∨ T^{-(n-1)}C`, cells labeled by itinerary words.
pub fn refine_partition(
    c: &FinitePartition,
    dynamics: &GridDynamics,
    n: usize,
) -> Result<FinitePartition> {
    if n == 0 {
        return Err(Error::Range("refinement depth must be at least 1".into()));
    }
    if dynamics.len() != c.ground_size() {
        return Err(Error::GroundMismatch {
            left: c.ground_size(),
            right: dynamics.len(),
        });
    }
    let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut words = Vec::new();
    let mut labels = Vec::with_capacity(c.ground_size());
    for x in 0..c.ground_size() {
        let mut word = Vec::with_capacity(n);
        let mut y = x;
        for _ in 0..n {
            word.push(c.label(y));
            y = dynamics.map()[y];
        }
        let next = ids.len();
        let id = *ids.entry(word.clone()).or_insert_with(|| {
            words.push(word);
            next
        });
        labels.push(id);
    }
    Ok(FinitePartition {
        cells: words.len(),
        labels,
        words: Some(words),
        provenance: c.provenance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    /// `H_μ(C^n) / n` for `n = 1..=n_max`.
    pub per_n: Vec<f64>,
    /// `H_μ(C^n)` for `n = 1..=n_max`.
    pub entropies: Vec<f64>,
    /// Mean increment `H(C^{n+1}) - H(C^n)` over the trailing half.
    pub rate: f64,
    pub rate_bits: f64,
    pub window: (usize, usize),
    pub cells: usize,
    pub mass: f64,
    pub invariant: bool,
    pub invariance_defect: f64,
}

/// Per-step partition entropy of `μ` with respect to `c`.
///
/// Invariance of `μ` under the discretized dynamics is checked atom-wise at
/// `1e-9`; a non-invariant measure is flagged and the rate still computed.
pub fn ks_rate(
    mu: &FiniteMeasure,
    c: &FinitePartition,
    dynamics: &GridDynamics,
    n_max: usize,
) -> Result<KsReport> {
    if n_max == 0 {
        return Err(Error::Range("n_max must be at least 1".into()));
    }
    if !mu.is_atomic() {
        return Err(Error::Unsupported("rates need a measure on atoms".into()));
    }
    let defect = mu.invariance_defect(dynamics)?;
    let entropies: Vec<f64> = (1..=n_max)
        .map(|n| partition_entropy(mu, &refine_partition(c, dynamics, n)?))
        .collect::<Result<_>>()?;
    let per_n: Vec<f64> = entropies
        .iter()
        .enumerate()
        .map(|(i, h)| h / (i + 1) as f64)
        .collect();
    let lo = (n_max / 2).max(1);
    let rate = if lo < n_max {
        (entropies[n_max - 1] - entropies[lo - 1]) / (n_max - lo) as f64
    } else {
        per_n[n_max - 1]
    };
    Ok(KsReport {
        per_n,
        entropies,
        rate,
        rate_bits: rate / std::f64::consts::LN_2,
        window: (lo, n_max),
        cells: c.len(),
        mass: mu.mass(),
        invariant: defect <= INVARIANCE_TOL,
        invariance_defect: defect,
    })
}

/// `α μ`, restricted to `α ≥ 0` and `α · mass ≤ 1`.
pub fn scaled_measure(mu: &FiniteMeasure, alpha: f64) -> Result<FiniteMeasure> {
    if !(alpha >= 0.0) {
        return Err(Error::Range(format!(
            "alpha must be nonnegative, got {alpha}"
        )));
    }
    if alpha * mu.mass() > 1.0 + MASS_TOL {
        return Err(Error::Range(format!(
            "alpha · mass = {} exceeds 1",
            alpha * mu.mass()
        )));
    }
    Ok(FiniteMeasure {
        weights: mu.weights.iter().map(|w| w * alpha).collect(),
        cells: mu.cells.clone(),
    })
}

/// Product measure on a sample of words: the symbol `s` at every stored
/// coordinate has probability `probs[s]`.
pub fn product_measure(space: &SampledSpace, probs: &[f64]) -> Result<FiniteMeasure> {
    let total: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(
            "symbol probabilities must form a distribution".into(),
        ));
    }
    let weights = space
        .points()
        .map(|p| {
            p.iter()
                .map(|&s| {
                    probs
                        .get(s as usize)
                        .copied()
                        .ok_or_else(|| Error::Validation(format!("symbol {s} has no probability")))
                })
                .product::<Result<f64>>()
        })
        .collect::<Result<Vec<_>>>()?;
    FiniteMeasure::atoms(weights)
}

/// Bernoulli measure on binary words; `p` is the probability of symbol 1.
pub fn bernoulli_measure(space: &SampledSpace, p: f64) -> Result<FiniteMeasure> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Range(format!("p must lie in [0, 1], got {p}")));
    }
    product_measure(space, &[1.0 - p, p])
}

/// `σ_n` and `μ_n` from a separated set, as atomic measures and as cell
/// weights on the supplied partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasures {
    pub sigma: FiniteMeasure,
    pub mu: FiniteMeasure,
    pub sigma_cells: Vec<f64>,
    pub mu_cells: Vec<f64>,
}

/// `σ_n = (1/|E|) Σ_{x ∈ E} δ_x` and `μ_n = (1/n) Σ_{j<n} σ_n ∘ T^{-j}`.
pub fn empirical_measures(
    separated: &[usize],
    dynamics: &GridDynamics,
    n: usize,
    partition: &FinitePartition,
) -> Result<EmpiricalMeasures> {
    if separated.is_empty() {
        return Err(Error::Validation("empty separated set".into()));
    }
    if n == 0 {
        return Err(Error::Range("n must be at least 1".into()));
    }
    let m = dynamics.len();
    if let Some(&x) = separated.iter().find(|&&x| x >= m) {
        return Err(Error::Validation(format!("point {x} outside ground set")));
    }
    let mut sigma = vec![0.0; m];
    let mut mu = vec![0.0; m];
    let s = 1.0 / separated.len() as f64;
    let u = s / n as f64;
    for &x in separated {
        sigma[x] += s;
        let mut y = x;
        for _ in 0..n {
            mu[y] += u;
            y = dynamics.map()[y];
        }
    }
    let sigma = FiniteMeasure::atoms(sigma)?;
    let mu = FiniteMeasure::atoms(mu)?;
    Ok(EmpiricalMeasures {
        sigma_cells: sigma.cell_weights(partition)?,
        mu_cells: mu.cell_weights(partition)?,
        sigma,
        mu,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MisiurewiczReport {
    /// `(q/n) log |E|`
    pub lhs: f64,
    /// `H_{μ_n}(C^q) + (2q²/n) log k`
    pub rhs: f64,
    pub entropy: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Checks `(q/n) log |E_n| ≤ H_{μ_n}(C^q) + (2q²/n) log k` for an
/// `(n, ε)`-separated set `E_n` and a partition `c` into `k` cells, each of
/// diameter below `eps`.
#[allow(clippy::too_many_arguments)]
pub fn misiurewicz_bound_check(
    separated: &[usize],
    c: &FinitePartition,
    q: usize,
    n: usize,
    eps: f64,
    space: &SampledSpace,
    metric: &Metric,
    dynamics: &GridDynamics,
) -> Result<MisiurewiczReport> {
    if q == 0 || q > n {
        return Err(Error::Range(format!(
            "need 1 ≤ q ≤ n, got q = {q}, n = {n}"
        )));
    }
    for (cell, d) in c.diameters(space, metric).into_iter().enumerate() {
        if d >= eps {
            return Err(Error::Precondition(format!(
                "cell {cell} has diameter {d} ≥ ε = {eps}"
            )));
        }
    }
    let emp = empirical_measures(separated, dynamics, n, c)?;
    let entropy = partition_entropy(&emp.mu, &refine_partition(c, dynamics, q)?)?;
    let (qf, nf) = (q as f64, n as f64);
    let lhs = qf / nf * (separated.len() as f64).ln();
    let rhs = entropy + 2.0 * qf * qf / nf * (c.len() as f64).ln();
    Ok(MisiurewiczReport {
        lhs,
        rhs,
        entropy,
        slack: rhs - lhs,
        holds: lhs <= rhs + MASS_TOL,
    })
}

/// Ball-difference partition with cells of diameter at most `1.5 ε`.
///
/// Centers are chosen greedily in lattice order so that every point is
/// within `ε/2` of a center; balls of radius `3ε/4` around the centers are
/// pruned to a minimal cover, and cell `j` is ball `j` minus all earlier
/// balls.
pub fn build_fine_partition(
    space: &SampledSpace,
    metric: &Metric,
    eps: f64,
) -> Result<FinitePartition> {
    if !(eps > 0.0) {
        return Err(Error::Range(format!("eps must be positive, got {eps}")));
    }
    let m = space.len();
    if eps >= metric.diameter_bound() {
        return FinitePartition::from_labels(&vec![0; m], Provenance::BallDifference);
    }
    let d = |x: usize, y: usize| metric.eval_unchecked(space.point(x), space.point(y));
    let mut centers: Vec<usize> = Vec::new();
    for x in 0..m {
        if centers.iter().all(|&c| d(c, x) >= eps / 2.0) {
            centers.push(x);
        }
    }
    let radius = 0.75 * eps;
    let balls: Vec<Vec<usize>> = centers
        .iter()
        .map(|&c| (0..m).filter(|&y| d(c, y) < radius).collect())
        .collect();
    let mut coverage = vec![0usize; m];
    for b in &balls {
        for &y in b {
            coverage[y] += 1;
        }
    }
    let mut keep = vec![true; balls.len()];
    for j in (0..balls.len()).rev() {
        if balls[j].iter().all(|&y| coverage[y] >= 2) {
            keep[j] = false;
            for &y in &balls[j] {
                coverage[y] -= 1;
            }
        }
    }
    let mut labels = vec![usize::MAX; m];
    for (j, b) in balls.iter().enumerate().filter(|(j, _)| keep[*j]) {
        for &y in b {
            if labels[y] == usize::MAX {
                labels[y] = j;
            }
        }
    }
    FinitePartition::from_labels(&labels, Provenance::BallDifference)
}
