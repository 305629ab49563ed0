use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::OutOfGround;
use crate::ground::GroundSet;
use crate::rational::Rational;

use super::ambient::{Ambient, ElementSet};

/// A sequence whose finite sums all lie in some host set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IPrWitness {
    pub sequence: Vec<Rational>,
}

impl IPrWitness {
    pub fn rank(&self) -> usize {
        self.sequence.len()
    }
}

/// All sums over nonempty subsequences of `sequence`, as a set of values.
pub fn fs_set(
    sequence: &[Rational],
    ground: &GroundSet,
) -> Result<BTreeSet<Rational>, OutOfGround> {
    let mut sums: BTreeSet<Rational> = BTreeSet::new();
    for a in sequence {
        let a = ground
            .embed(a)
            .filter(|v| ground.contains(v))
            .ok_or(OutOfGround)?;
        let mut next = sums.clone();
        for s in &sums {
            next.insert(ground.add_in(s, &a)?);
        }
        next.insert(a);
        sums = next;
    }
    Ok(sums)
}

/// [`fs_set`] on ambient indices; `None` if a sum leaves the ambient.
pub(crate) fn fs_indices(amb: &Ambient, sequence: &[usize]) -> Option<ElementSet> {
    let mut sums = amb.empty_set();
    for &a in sequence {
        let mut next = sums.clone();
        for s in sums.ones() {
            next.insert(amb.add(s, a)?);
        }
        next.insert(a);
        sums = next;
    }
    Some(sums)
}

/// Lexicographically least sequence of length `r` drawn from `space` whose
/// finite sums all lie in `set`. Entries may repeat; coinciding sums are
/// fine. Both sets are ambient index sets.
pub(crate) fn ipr_witness_indices(
    set: &ElementSet,
    r: usize,
    space: &ElementSet,
    amb: &Ambient,
) -> Option<Vec<usize>> {
    if r == 0 {
        return Some(Vec::new());
    }
    // Only elements of the host can appear, and only with a sum-closed prefix.
    let mut candidates = space.clone();
    candidates.intersect_with(set);
    let candidates: Vec<usize> = candidates.ones().collect();
    let mut seq = Vec::with_capacity(r);
    let mut sums = amb.empty_set();
    extend(amb, set, r, &candidates, 0, &mut seq, &mut sums).then_some(seq)
}

fn extend(
    amb: &Ambient,
    set: &ElementSet,
    r: usize,
    candidates: &[usize],
    from: usize,
    seq: &mut Vec<usize>,
    sums: &mut ElementSet,
) -> bool {
    if seq.len() == r {
        return true;
    }
    // Sorting a valid sequence keeps it valid and makes it lexicographically
    // smaller, so non-decreasing sequences suffice.
    for ci in from..candidates.len() {
        let a = candidates[ci];
        let mut next = sums.clone();
        let fits = sums.ones().all(|s| match amb.add(s, a) {
            Some(t) if set.contains(t) => {
                next.insert(t);
                true
            }
            _ => false,
        });
        if !fits {
            continue;
        }
        next.insert(a);
        seq.push(a);
        let saved = std::mem::replace(sums, next);
        if extend(amb, set, r, candidates, ci, seq, sums) {
            return true;
        }
        *sums = saved;
        seq.pop();
    }
    false
}

/// Backtracking search for an IP_r witness inside `set` using entries from
/// `search_space`, both given as ambient element sets. Returns the
/// lexicographically first witness in enumeration order.
pub fn find_ipr_witness(
    set: &ElementSet,
    r: usize,
    search_space: &ElementSet,
    amb: &Ambient,
) -> Option<IPrWitness> {
    ipr_witness_indices(set, r, search_space, amb).map(|seq| IPrWitness {
        sequence: seq.iter().map(|&i| amb.value(i).clone()).collect(),
    })
}

/// Whether `set` meets every IP_r subset of the ambient. When it does not,
/// the returned witness has all its finite sums outside `set`.
pub fn is_ipr_star(set: &ElementSet, r: usize, amb: &Ambient) -> (bool, Option<IPrWitness>) {
    let mut complement = amb.full_set();
    complement.difference_with(set);
    match find_ipr_witness(&complement, r, &complement, amb) {
        Some(w) => (false, Some(w)),
        None => (true, None),
    }
}
