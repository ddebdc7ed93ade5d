//! Finite covers of a sampled ground set.

mod setcover;

pub use setcover::{min_subcover_cardinality, SubcoverBound, EXACT_MEMBER_LIMIT, NODE_BUDGET};

use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::least_squares_slope;
use crate::spaces::{Metric, SampledSpace};
use crate::systems::SystemSpec;

/// A family of subsets of `{0, …, ground_size - 1}` whose union is the whole
/// ground set. Members are distinct and nonempty, kept in first-seen order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CoverDoc", into = "CoverDoc")]
pub struct Cover {
    ground: usize,
    members: Vec<FixedBitSet>,
    // the cover this one was iterated from
    generator: Option<Box<Cover>>,
}

/// JSON form `{ground_size, members: [[indices]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverDoc {
    pub ground_size: usize,
    pub members: Vec<Vec<usize>>,
}

impl TryFrom<CoverDoc> for Cover {
    type Error = Error;
    fn try_from(doc: CoverDoc) -> Result<Self> {
        Cover::new(doc.ground_size, &doc.members)
    }
}

impl From<Cover> for CoverDoc {
    fn from(c: Cover) -> Self {
        CoverDoc {
            ground_size: c.ground,
            members: c.member_lists(),
        }
    }
}

impl Cover {
    pub fn new(ground: usize, members: &[Vec<usize>]) -> Result<Self> {
        let mut sets = Vec::with_capacity(members.len());
        for m in members {
            let mut b = FixedBitSet::with_capacity(ground);
            for &e in m {
                if e >= ground {
                    return Err(Error::Validation(format!(
                        "element {e} outside ground set of size {ground}"
                    )));
                }
                b.insert(e);
            }
            sets.push(b);
        }
        Self::from_sets(ground, sets)
    }

    pub fn from_sets(ground: usize, sets: Vec<FixedBitSet>) -> Result<Self> {
        if ground == 0 {
            return Err(Error::Validation("ground set is empty".into()));
        }
        let mut union = FixedBitSet::with_capacity(ground);
        let mut seen = HashSet::new();
        let mut members = Vec::new();
        for mut s in sets {
            if s.len() != ground {
                if s.len() > ground && s.ones().any(|e| e >= ground) {
                    return Err(Error::GroundMismatch {
                        left: ground,
                        right: s.len(),
                    });
                }
                s.grow(ground);
                s = FixedBitSet::from_iter(s.ones());
                s.grow(ground);
            }
            if s.is_clear() || !seen.insert(s.clone()) {
                continue;
            }
            union.union_with(&s);
            members.push(s);
        }
        if let Some(element) = union.zeroes().next() {
            return Err(Error::Coverage { element });
        }
        Ok(Cover {
            ground,
            members,
            generator: None,
        })
    }

    /// `{X}`.
    pub fn trivial(ground: usize) -> Result<Self> {
        Self::new(ground, &[(0..ground).collect()])
    }

    pub fn singletons(ground: usize) -> Result<Self> {
        Self::new(ground, &(0..ground).map(|e| vec![e]).collect::<Vec<_>>())
    }

    /// The partition with cells `{x : labels[x] = c}`.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        let mut sets = vec![FixedBitSet::with_capacity(labels.len()); k];
        for (x, &c) in labels.iter().enumerate() {
            sets[c].insert(x);
        }
        Self::from_sets(labels.len(), sets)
    }

    pub fn ground_size(&self) -> usize {
        self.ground
    }

    pub fn members(&self) -> &[FixedBitSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member_lists(&self) -> Vec<Vec<usize>> {
        self.members.iter().map(|m| m.ones().collect()).collect()
    }

    /// The cover this one was iterated from, if any.
    pub fn generator(&self) -> Option<&Cover> {
        self.generator.as_deref()
    }

    /// Record `p` as the cover this one is an iterate of.
    pub fn with_generator(mut self, p: Cover) -> Self {
        self.generator = Some(Box::new(p.without_generator()));
        self
    }

    fn without_generator(mut self) -> Self {
        self.generator = None;
        self
    }

    /// Same members up to order.
    pub fn same_members(&self, other: &Cover) -> bool {
        if self.ground != other.ground || self.len() != other.len() {
            return false;
        }
        let a: HashSet<&FixedBitSet> = self.members.iter().collect();
        other.members.iter().all(|m| a.contains(m))
    }

    /// `{T⁻¹ A : A ∈ self}` under a discretized map.
    pub fn preimage(&self, dynamics: &GridDynamics) -> Result<Cover> {
        check_ground(self.ground, dynamics.len())?;
        let sets = self
            .members
            .iter()
            .map(|m| {
                let mut p = FixedBitSet::with_capacity(self.ground);
                for (x, &y) in dynamics.map.iter().enumerate() {
                    if m.contains(y) {
                        p.insert(x);
                    }
                }
                p
            })
            .collect();
        Cover::from_sets(self.ground, sets)
    }
}

fn check_ground(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::GroundMismatch { left, right });
    }
    Ok(())
}

/// A self-map of a finite ground set: the discretized dynamics
/// `x ↦ nearest sample to T(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridDynamics {
    map: Vec<usize>,
}

impl GridDynamics {
    pub fn new(space: &SampledSpace, spec: &SystemSpec) -> Result<Self> {
        Ok(GridDynamics {
            map: space.grid_map(spec)?,
        })
    }

    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = map.iter().find(|&&y| y >= map.len()) {
            return Err(Error::Validation(format!("map target {bad} out of range")));
        }
        Ok(GridDynamics { map })
    }

    pub fn identity(ground: usize) -> Self {
        GridDynamics {
            map: (0..ground).collect(),
        }
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// The `k`-fold composite.
    pub fn power(&self, k: usize) -> Self {
        let map = (0..self.len())
            .map(|mut x| {
                for _ in 0..k {
                    x = self.map[x];
                }
                x
            })
            .collect();
        GridDynamics { map }
    }
}

/// `A ∨ B`: all nonempty pairwise intersections.
pub fn join(a: &Cover, b: &Cover) -> Result<Cover> {
    check_ground(a.ground, b.ground)?;
    let mut sets = Vec::with_capacity(a.len() * b.len());
    for x in &a.members {
        for y in &b.members {
            let mut m = x.clone();
            m.intersect_with(y);
            sets.push(m);
        }
    }
    Cover::from_sets(a.ground, sets)
}

/// True when `a` refines `b`: every member of `a` lies inside some member
/// of `b`.
pub fn refines(a: &Cover, b: &Cover) -> bool {
    a.ground == b.ground
        && a.members
            .iter()
            .all(|m| b.members.iter().any(|big| m.is_subset(big)))
}

/// `A ∨ T⁻¹A ∨ … ∨ T^{-(n-1)}A`, with `A` recorded as the generator.
pub fn iterate_cover(a: &Cover, dynamics: &GridDynamics, n: usize) -> Result<Cover> {
    if n == 0 {
        return Err(Error::Range("iterate count must be at least 1".into()));
    }
    check_ground(a.ground, dynamics.len())?;
    // B_1 = A, B_{k+1} = A ∨ T⁻¹ B_k
    let mut b = a.clone().without_generator();
    for _ in 1..n {
        b = join(a, &b.preimage(dynamics)?)?;
    }
    Ok(b.with_generator(a.clone()))
}

/// Complement of `member` lies inside the core.
fn has_compact_complement(member: &FixedBitSet, core: &[bool]) -> bool {
    (0..member.len()).all(|x| member.contains(x) || core[x])
}

/// `a` has a member with compact complement, or is an iterate of a cover
/// that does.
pub fn is_admissible(a: &Cover, core: &[bool]) -> Result<bool> {
    check_ground(a.ground, core.len())?;
    let direct = |c: &Cover| c.members.iter().any(|m| has_compact_complement(m, core));
    Ok(direct(a) || a.generator().is_some_and(direct))
}

/// Open balls `{y : d(x, y) < ε}` around every sample `x`.
pub fn ball_cover(space: &SampledSpace, metric: &Metric, eps: f64) -> Result<Cover> {
    if metric.dim() != space.dim() {
        return Err(Error::Dimension {
            expected: space.dim(),
            got: metric.dim(),
        });
    }
    let m = space.len();
    let sets = (0..m)
        .into_par_iter()
        .map(|x| {
            let mut b = FixedBitSet::with_capacity(m);
            for y in 0..m {
                if metric.eval_unchecked(space.point(x), space.point(y)) < eps {
                    b.insert(y);
                }
            }
            b
        })
        .collect();
    Cover::from_sets(m, sets)
}

/// Largest `ε = diam · 2^{-k}` such that every sampled open `ε`-ball lies
/// inside some member of `a`.
///
/// Returns the metric's diameter bound when a member is the whole space.
/// Fails with a resolution error when the admissible radius is below half
/// the sampling mesh.
pub fn lebesgue_number(a: &Cover, space: &SampledSpace, metric: &Metric) -> Result<f64> {
    check_ground(a.ground, space.len())?;
    let diam = metric.diameter_bound();
    let m = space.len();
    let radius = (0..m)
        .into_par_iter()
        .map(|x| {
            let px = space.point(x);
            let dist: Vec<f64> = (0..m)
                .map(|y| metric.eval_unchecked(px, space.point(y)))
                .collect();
            a.members
                .iter()
                .filter(|mem| mem.contains(x))
                .map(|mem| mem.zeroes().map(|y| dist[y]).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        })
        .reduce(|| f64::INFINITY, f64::min);
    if radius.is_infinite() {
        return Ok(diam);
    }
    let mut eps = diam;
    while eps > radius {
        eps /= 2.0;
        if eps < space.mesh() / 2.0 || eps == 0.0 {
            return Err(Error::Resolution { mesh: space.mesh() });
        }
    }
    Ok(eps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub n: usize,
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
    /// `(1/n) · log N(A^n)`, from the upper bound when inexact.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverEntropyReport {
    pub points: Vec<CoverPoint>,
    /// Slope of `log N(A^n)` against `n` over the window, in nats.
    pub rate: f64,
    pub rate_bits: f64,
    pub window: (usize, usize),
    pub exact: bool,
}

/// Growth rate of `N(A^n)` for `n ≤ n_max`, fitted over the top half.
pub fn cover_entropy_rate(
    a: &Cover,
    dynamics: &GridDynamics,
    n_max: usize,
) -> Result<CoverEntropyReport> {
    if n_max == 0 {
        return Err(Error::Range("n_max must be at least 1".into()));
    }
    let mut points = Vec::with_capacity(n_max);
    let mut an = a.clone();
    for n in 1..=n_max {
        if n > 1 {
            an = join(a, &an.preimage(dynamics)?)?;
        }
        let b = min_subcover_cardinality(&an, None)?;
        points.push(CoverPoint {
            n,
            lower: b.lower,
            upper: b.upper,
            exact: b.exact,
            rate: (b.upper as f64).ln() / n as f64,
        });
    }
    let lo = (n_max / 2).max(1);
    let window: Vec<&CoverPoint> = points.iter().filter(|p| p.n >= lo).collect();
    let rate = if window.len() >= 2 {
        let xs: Vec<f64> = window.iter().map(|p| p.n as f64).collect();
        let ys: Vec<f64> = window.iter().map(|p| (p.upper as f64).ln()).collect();
        least_squares_slope(&xs, &ys).max(0.0)
    } else {
        points.last().map_or(0.0, |p| p.rate)
    };
    Ok(CoverEntropyReport {
        exact: points.iter().all(|p| p.exact),
        rate,
        rate_bits: rate / std::f64::consts::LN_2,
        window: (lo, n_max),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::sample_grid;

    fn cover(ground: usize, members: &[&[usize]]) -> Cover {
        Cover::new(
            ground,
            &members.iter().map(|m| m.to_vec()).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    // oracle: minimum over all subfamilies by brute force
    fn brute_n(c: &Cover) -> usize {
        let k = c.len();
        let mut best = usize::MAX;
        for mask in 1u32..(1 << k) {
            let mut u = FixedBitSet::with_capacity(c.ground_size());
            for i in 0..k {
                if mask >> i & 1 == 1 {
                    u.union_with(&c.members()[i]);
                }
            }
            if u.count_ones(..) == c.ground_size() {
                best = best.min(mask.count_ones() as usize);
            }
        }
        best
    }

    #[test]
    fn join_enumerates_intersections() {
        let a = cover(3, &[&[0, 1], &[1, 2]]);
        let b = cover(3, &[&[0], &[1, 2]]);
        let j = join(&a, &b).unwrap();
        // oracle: every nonempty A∩B
        let mut oracle = HashSet::new();
        for x in a.member_lists() {
            for y in b.member_lists() {
                let i: Vec<usize> = x.iter().copied().filter(|e| y.contains(e)).collect();
                if !i.is_empty() {
                    oracle.insert(i);
                }
            }
        }
        let got: HashSet<Vec<usize>> = j.member_lists().into_iter().collect();
        assert_eq!(got, oracle);
        assert_eq!(got.len(), 3);
        assert!(refines(&j, &a) && refines(&j, &b));
        // idempotent on partitions; on general covers only up to refinement
        let p = Cover::from_labels(&[0, 1, 1]).unwrap();
        assert!(join(&p, &p).unwrap().same_members(&p));
        let aa = join(&a, &a).unwrap();
        assert!(refines(&aa, &a) && refines(&a, &aa));
        assert!(join(&Cover::trivial(3).unwrap(), &b)
            .unwrap()
            .same_members(&b));
    }

    #[test]
    fn refinement_basics() {
        let a = cover(3, &[&[0, 1], &[2]]);
        assert!(refines(&Cover::singletons(3).unwrap(), &a));
        assert!(!refines(&Cover::trivial(3).unwrap(), &a));
        assert!(refines(
            &Cover::trivial(3).unwrap(),
            &cover(3, &[&[0, 1, 2], &[0]])
        ));
    }

    #[test]
    fn subcover_examples() {
        let c = cover(3, &[&[0, 1], &[1, 2], &[2], &[0]]);
        assert_eq!(brute_n(&c), 2);
        assert_eq!(min_subcover_cardinality(&c, None).unwrap().value(), Some(2));
        let full = cover(3, &[&[0], &[0, 1, 2]]);
        assert_eq!(
            min_subcover_cardinality(&full, None).unwrap().value(),
            Some(1)
        );
        let part = Cover::from_labels(&[0, 1, 2, 0, 3]).unwrap();
        assert_eq!(
            min_subcover_cardinality(&part, None).unwrap().value(),
            Some(4)
        );
    }

    #[test]
    fn coverage_error_names_element() {
        let c = cover(3, &[&[0, 1], &[1, 2]]);
        let mut y = FixedBitSet::with_capacity(3);
        y.insert(0);
        assert_eq!(
            min_subcover_cardinality(&c, Some(&y)).unwrap().value(),
            Some(1)
        );
        assert_eq!(
            Cover::new(3, &[vec![0], vec![2]]).unwrap_err(),
            Error::Coverage { element: 1 }
        );
    }

    #[test]
    fn random_subcovers_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let ground = rng.gen_range(1..14);
            let k = rng.gen_range(1..12);
            let mut members: Vec<Vec<usize>> = (0..k)
                .map(|_| (0..ground).filter(|_| rng.gen_bool(0.3)).collect())
                .collect();
            members.push((0..ground).filter(|_| rng.gen_bool(0.5)).collect());
            for e in 0..ground {
                if !members.iter().any(|m| m.contains(&e)) {
                    members.push(vec![e]);
                }
            }
            let c = Cover::new(ground, &members).unwrap();
            let b = min_subcover_cardinality(&c, None).unwrap();
            assert_eq!(b.value(), Some(brute_n(&c)));
            let mut u = FixedBitSet::with_capacity(ground);
            for &w in &b.witness {
                u.union_with(&c.members()[w]);
            }
            assert_eq!(u.count_ones(..), ground);
        }
    }

    #[test]
    fn large_instances_report_certified_intervals() {
        // 40 members, each a random half of 120 elements: too large to
        // finish, so the answer must bracket the greedy witness
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let members: Vec<Vec<usize>> = (0..40)
            .map(|_| (0..120).filter(|_| rng.gen_bool(0.1)).collect())
            .chain((0..120).map(|e| vec![e]))
            .collect();
        let c = Cover::new(120, &members).unwrap();
        let b = min_subcover_cardinality(&c, None).unwrap();
        assert!(b.lower >= 1 && b.lower <= b.upper);
        assert_eq!(b.witness.len(), b.upper);
    }

    fn halves(m: usize) -> Cover {
        Cover::from_labels(&(0..m).map(|i| 2 * i / m).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn doubling_quarter_arcs() {
        let spec = SystemSpec::circle_map(2);
        let space = sample_grid(&spec, 1.0 / 64.0).unwrap();
        let dynamics = GridDynamics::new(&space, &spec).unwrap();
        let a2 = iterate_cover(&halves(64), &dynamics, 2).unwrap();
        // oracle: x ∈ [j/4, (j+1)/4) iff (⌊2x⌋, ⌊4x⌋ mod 2) = binary digits of j
        let oracle: Vec<Vec<usize>> = (0..4)
            .map(|j| (0..64).filter(|&i| i / 16 == j).collect())
            .collect();
        assert!(a2.same_members(&Cover::new(64, &oracle).unwrap()));
        assert!(iterate_cover(&halves(64), &dynamics, 1)
            .unwrap()
            .same_members(&halves(64)));
        assert!(iterate_cover(&halves(64), &dynamics, 0).is_err());
    }

    #[test]
    fn identity_iteration_is_stable() {
        let id = GridDynamics::identity(4);
        let p = Cover::from_labels(&[0, 0, 1, 2]).unwrap();
        assert!(iterate_cover(&p, &id, 5).unwrap().same_members(&p));
        let a = cover(4, &[&[0, 1], &[1, 2, 3]]);
        let a2 = join(&a, &a).unwrap();
        assert!(iterate_cover(&a, &id, 5).unwrap().same_members(&a2));
        let r = cover_entropy_rate(&a, &id, 6).unwrap();
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn doubling_cover_rate() {
        let spec = SystemSpec::circle_map(2);
        let space = sample_grid(&spec, 1.0 / 1024.0).unwrap();
        let dynamics = GridDynamics::new(&space, &spec).unwrap();
        let r = cover_entropy_rate(&halves(1024), &dynamics, 10).unwrap();
        assert!(r.exact);
        assert!((r.rate - 2f64.ln()).abs() < 0.05 * 2f64.ln());
        assert!((r.rate_bits - 1.0).abs() < 0.05);
    }

    #[test]
    fn admissibility() {
        let space = sample_grid(&SystemSpec::circle_map(1), 0.25).unwrap();
        let any = Cover::singletons(space.len()).unwrap();
        assert!(is_admissible(&any, space.core()).unwrap());
        let core = [true, true, false, false];
        let far = cover(4, &[&[0, 1], &[1, 2, 3]]);
        assert!(is_admissible(&far, &core).unwrap());
        let near = cover(4, &[&[0, 2], &[1, 3]]);
        assert!(!is_admissible(&near, &core).unwrap());
    }

    #[test]
    fn lebesgue_on_arcs() {
        let spec = SystemSpec::circle_map(1);
        let space = sample_grid(&spec, 1.0 / 64.0).unwrap();
        let metric = space.metric().clone();
        assert_eq!(
            lebesgue_number(&Cover::trivial(64).unwrap(), &space, &metric).unwrap(),
            0.5
        );
        // arcs [0, 40) and [32, 64) ∪ [0, 8): overlap width 8/64 on each side
        let a = Cover::new(64, &[(0..40).collect(), (32..64).chain(0..8).collect()]).unwrap();
        let eps = lebesgue_number(&a, &space, &metric).unwrap();
        assert!(eps <= 8.0 / 64.0 && eps > 0.0);
        assert!(refines(&ball_cover(&space, &metric, eps).unwrap(), &a));
        let s = lebesgue_number(&Cover::singletons(64).unwrap(), &space, &metric).unwrap();
        assert!((1.0 / 128.0..=1.0 / 64.0).contains(&s));
    }
}
