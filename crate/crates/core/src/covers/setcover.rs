//! Minimal subcover cardinality.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::covers::Cover;
use crate::error::{Error, Result};

/// Kernels with at most this many members are always solved exactly.
pub const EXACT_MEMBER_LIMIT: usize = 24;
/// Search nodes allowed on larger kernels before falling back to bounds.
pub const NODE_BUDGET: u64 = 200_000;
const DOMINANCE_LIMIT: usize = 1500;

/// `N_Y(A)` or a certified interval around it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubcoverBound {
    pub lower: usize,
    pub upper: usize,
    pub exact: bool,
    /// Member indices (into the input cover) of a subcover of size `upper`.
    pub witness: Vec<usize>,
}

impl SubcoverBound {
    pub fn value(&self) -> Option<usize> {
        self.exact.then_some(self.upper)
    }
}

/// Least number of members of `a` whose union contains `restrict_to`
/// (default: the whole ground set).
///
/// After removing dominated members and members forced by an element with a
/// single covering member, the remaining kernel is solved by branch and
/// bound: exhaustively when it has at most [`EXACT_MEMBER_LIMIT`] members,
/// otherwise within [`NODE_BUDGET`] nodes. When the budget runs out the
/// result is the interval between an element-packing lower bound and the
/// greedy upper bound (ties to the lowest member index).
pub fn min_subcover_cardinality(
    a: &Cover,
    restrict_to: Option<&FixedBitSet>,
) -> Result<SubcoverBound> {
    let ground = a.ground_size();
    let target = match restrict_to {
        Some(y) => {
            if y.len() != ground {
                return Err(Error::GroundMismatch {
                    left: ground,
                    right: y.len(),
                });
            }
            y.clone()
        }
        None => {
            let mut all = FixedBitSet::with_capacity(ground);
            all.insert_range(..);
            all
        }
    };
    let mut union = FixedBitSet::with_capacity(ground);
    for m in a.members() {
        union.union_with(m);
    }
    if let Some(element) = target.difference(&union).next() {
        return Err(Error::Coverage { element });
    }
    if target.is_clear() {
        return Ok(SubcoverBound {
            lower: 0,
            upper: 0,
            exact: true,
            witness: vec![],
        });
    }
    let mut inst = Instance::new(a, &target);
    inst.reduce();
    let forced = inst.forced.clone();
    if inst.uncovered.is_clear() {
        return Ok(SubcoverBound {
            lower: forced.len(),
            upper: forced.len(),
            exact: true,
            witness: sorted(forced),
        });
    }
    let greedy = inst.greedy();
    let budget = if inst.sets.len() <= EXACT_MEMBER_LIMIT {
        u64::MAX
    } else {
        NODE_BUDGET
    };
    let mut search = Search::new(&inst, greedy.clone(), budget);
    let complete = search.run();
    let best = search.best;
    let witness = sorted(
        forced
            .iter()
            .copied()
            .chain(best.iter().map(|&s| inst.origin[s]))
            .collect(),
    );
    if complete {
        return Ok(SubcoverBound {
            lower: witness.len(),
            upper: witness.len(),
            exact: true,
            witness,
        });
    }
    let lower = forced.len() + inst.lower_bound();
    Ok(SubcoverBound {
        lower: lower.min(witness.len()),
        upper: witness.len(),
        exact: lower >= witness.len(),
        witness,
    })
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

struct Instance {
    // kernel members restricted to the uncovered elements
    sets: Vec<FixedBitSet>,
    // original member index of each kernel member
    origin: Vec<usize>,
    uncovered: FixedBitSet,
    forced: Vec<usize>,
}

impl Instance {
    fn new(a: &Cover, target: &FixedBitSet) -> Self {
        let mut seen: HashMap<FixedBitSet, usize> = HashMap::new();
        let mut sets = Vec::new();
        let mut origin = Vec::new();
        for (i, m) in a.members().iter().enumerate() {
            let mut r = m.clone();
            r.intersect_with(target);
            if r.is_clear() || seen.contains_key(&r) {
                continue;
            }
            seen.insert(r.clone(), i);
            sets.push(r);
            origin.push(i);
        }
        Instance {
            sets,
            origin,
            uncovered: target.clone(),
            forced: Vec::new(),
        }
    }

    fn reduce(&mut self) {
        loop {
            let mut changed = false;
            if self.sets.len() <= DOMINANCE_LIMIT {
                changed |= self.drop_dominated();
            }
            changed |= self.take_forced();
            if !changed || self.uncovered.is_clear() {
                break;
            }
        }
    }

    fn drop_dominated(&mut self) -> bool {
        let k = self.sets.len();
        let counts: Vec<usize> = self.sets.iter().map(|s| s.count_ones(..)).collect();
        let mut keep = vec![true; k];
        for i in 0..k {
            for j in 0..k {
                if i == j || !keep[j] || counts[i] > counts[j] {
                    continue;
                }
                // equal sets were merged, so ⊆ with equal counts cannot occur
                if self.sets[i].is_subset(&self.sets[j]) && (counts[i] < counts[j] || j < i) {
                    keep[i] = false;
                    break;
                }
            }
        }
        let before = self.sets.len();
        self.retain(&keep);
        self.sets.len() != before
    }

    fn take_forced(&mut self) -> bool {
        let mut cover_count: HashMap<usize, (usize, usize)> = HashMap::new();
        for (s, set) in self.sets.iter().enumerate() {
            for e in set.ones() {
                let entry = cover_count.entry(e).or_insert((0, s));
                entry.0 += 1;
            }
        }
        let mut chosen: Vec<usize> = cover_count
            .values()
            .filter(|(c, _)| *c == 1)
            .map(|&(_, s)| s)
            .collect();
        chosen.sort_unstable();
        chosen.dedup();
        if chosen.is_empty() {
            return false;
        }
        for &s in &chosen {
            self.forced.push(self.origin[s]);
            self.uncovered.difference_with(&self.sets[s]);
        }
        let mut keep = vec![true; self.sets.len()];
        for &s in &chosen {
            keep[s] = false;
        }
        for (s, set) in self.sets.iter_mut().enumerate() {
            set.intersect_with(&self.uncovered);
            if set.is_clear() {
                keep[s] = false;
            }
        }
        self.retain(&keep);
        self.merge_duplicates();
        true
    }

    fn merge_duplicates(&mut self) {
        let mut seen: HashMap<FixedBitSet, ()> = HashMap::new();
        let keep: Vec<bool> = self
            .sets
            .iter()
            .map(|s| seen.insert(s.clone(), ()).is_none())
            .collect();
        self.retain(&keep);
    }

    fn retain(&mut self, keep: &[bool]) {
        let mut i = 0;
        self.sets.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        let mut i = 0;
        self.origin.retain(|_| {
            i += 1;
            keep[i - 1]
        });
    }

    /// Lazy greedy; among equal gains the lowest original index wins.
    fn greedy(&self) -> Vec<usize> {
        let mut left = self.uncovered.clone();
        let mut heap: BinaryHeap<(usize, Reverse<usize>, usize)> = self
            .sets
            .iter()
            .enumerate()
            .map(|(s, set)| (set.count_ones(..), Reverse(self.origin[s]), s))
            .collect();
        let mut chosen = Vec::new();
        while !left.is_clear() {
            let (gain, tie, s) = heap.pop().expect("kernel covers the target");
            let fresh = self.sets[s].intersection_count(&left);
            if fresh < gain {
                if fresh > 0 {
                    heap.push((fresh, tie, s));
                }
                continue;
            }
            chosen.push(s);
            left.difference_with(&self.sets[s]);
        }
        chosen
    }

    /// `max(⌈|Y| / max|m|⌉, size of a greedy set of elements no two of
    /// which share a member)`.
    fn lower_bound(&self) -> usize {
        let total = self.uncovered.count_ones(..);
        let widest = self
            .sets
            .iter()
            .map(|s| s.count_ones(..))
            .max()
            .unwrap_or(1);
        let volume = total.div_ceil(widest.max(1));
        let mut owners: HashMap<usize, Vec<usize>> = HashMap::new();
        for (s, set) in self.sets.iter().enumerate() {
            for e in set.ones() {
                owners.entry(e).or_default().push(s);
            }
        }
        let mut order: Vec<(usize, usize)> = owners.iter().map(|(&e, o)| (o.len(), e)).collect();
        order.sort_unstable();
        let mut used = vec![false; self.sets.len()];
        let mut packed = 0;
        for (_, e) in order {
            let o = &owners[&e];
            if o.iter().all(|&s| !used[s]) {
                o.iter().for_each(|&s| used[s] = true);
                packed += 1;
            }
        }
        volume.max(packed)
    }
}

struct Search<'a> {
    inst: &'a Instance,
    owners: Vec<Vec<usize>>,
    widest: usize,
    best: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl<'a> Search<'a> {
    fn new(inst: &'a Instance, best: Vec<usize>, budget: u64) -> Self {
        let ground = inst.uncovered.len();
        let mut owners = vec![Vec::new(); ground];
        for (s, set) in inst.sets.iter().enumerate() {
            for e in set.ones() {
                owners[e].push(s);
            }
        }
        for o in &mut owners {
            o.sort_by_key(|&s| Reverse(inst.sets[s].count_ones(..)));
        }
        let widest = inst
            .sets
            .iter()
            .map(|s| s.count_ones(..))
            .max()
            .unwrap_or(1);
        Search {
            inst,
            owners,
            widest,
            best,
            nodes: 0,
            budget,
        }
    }

    /// True when the search finished, so `best` is optimal.
    fn run(&mut self) -> bool {
        let mut chosen = Vec::new();
        let left = self.inst.uncovered.clone();
        self.descend(&left, &mut chosen)
    }

    fn descend(&mut self, left: &FixedBitSet, chosen: &mut Vec<usize>) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let remaining = left.count_ones(..);
        if remaining == 0 {
            if chosen.len() < self.best.len() {
                self.best = chosen.clone();
            }
            return true;
        }
        if chosen.len() + remaining.div_ceil(self.widest) >= self.best.len() {
            return true;
        }
        let pivot = left
            .ones()
            .min_by_key(|&e| self.owners[e].len())
            .expect("nonempty");
        let branches = self.owners[pivot].clone();
        for s in branches {
            let mut next = left.clone();
            next.difference_with(&self.inst.sets[s]);
            chosen.push(s);
            let done = self.descend(&next, chosen);
            chosen.pop();
            if !done {
                return false;
            }
            if chosen.len() + 1 >= self.best.len() {
                break;
            }
        }
        true
    }
}
