use serde::{Deserialize, Serialize};

use crate::error::OutOfGround;
use crate::ground::GroundSet;
use crate::rational::Rational;

use super::ambient::{primitive_root, Ambient, ElementSet};
use super::StructureError;

/// A finite `F` with `F * S` covering the ambient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndeticWitness {
    pub f: Vec<Rational>,
}

/// Smallest `F` (then lexicographically least) with `|F| <= width` and
/// `F * set` covering the ambient, as ambient indices.
pub(crate) fn syndetic_indices(
    set: &ElementSet,
    width: usize,
    amb: &Ambient,
) -> Option<Vec<usize>> {
    let n = amb.len();
    if set.is_clear() {
        return None;
    }
    let images: Vec<ElementSet> = (0..n).map(|a| amb.scale(a, set)).collect();
    let max_gain = images.iter().map(|s| s.count_ones(..)).max().unwrap_or(0);
    for size in 1..=width.min(n) {
        if max_gain * size < n {
            continue;
        }
        let mut chosen = Vec::with_capacity(size);
        let covered = amb.empty_set();
        if cover_search(&images, n, size, 0, &covered, max_gain, &mut chosen) {
            return Some(chosen);
        }
    }
    None
}

fn cover_search(
    images: &[ElementSet],
    n: usize,
    size: usize,
    from: usize,
    covered: &ElementSet,
    max_gain: usize,
    chosen: &mut Vec<usize>,
) -> bool {
    let have = covered.count_ones(..);
    if chosen.len() == size {
        return have == n;
    }
    let left = size - chosen.len();
    if have + left * max_gain < n {
        return false;
    }
    for a in from..=images.len() - left {
        let mut next = covered.clone();
        next.union_with(&images[a]);
        chosen.push(a);
        if cover_search(images, n, size, a + 1, &next, max_gain, chosen) {
            return true;
        }
        chosen.pop();
    }
    false
}

/// Multiplicative syndeticity with bounded width; see [`SyndeticWitness`].
pub fn is_syndetic(set: &ElementSet, width: usize, amb: &Ambient) -> Option<SyndeticWitness> {
    syndetic_indices(set, width, amb).map(|f| SyndeticWitness {
        f: f.iter().map(|&i| amb.value(i).clone()).collect(),
    })
}

/// The finite sets a thick set must contain a multiplicative shift of.
///
/// Sets are stored as sorted ambient indices of the ambient the family was
/// built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThickTestFamily {
    sets: Vec<Vec<u32>>,
}

/// Configuration for [`ThickTestFamily::from_spec`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ThickFamilySpec {
    /// All subsets of the generators with at most this many elements.
    pub max_size: usize,
    /// Defaults to the whole ambient.
    #[serde(default)]
    pub generators: Option<Vec<Rational>>,
    /// Geometric progressions `{1, g, .., g^(m-1)}` of the least primitive
    /// root, for `m` up to this bound (prime fields only).
    #[serde(default)]
    pub progression_len: usize,
    #[serde(default)]
    pub extra: Vec<Vec<Rational>>,
}

impl ThickFamilySpec {
    pub fn subsets(max_size: usize) -> Self {
        ThickFamilySpec {
            max_size,
            generators: None,
            progression_len: max_size,
            extra: Vec::new(),
        }
    }
}

impl ThickTestFamily {
    pub fn new(amb: &Ambient, sets: &[Vec<Rational>]) -> Result<Self, StructureError> {
        let mut out = Vec::with_capacity(sets.len());
        for s in sets {
            let mut idx: Vec<u32> = s
                .iter()
                .map(|v| amb.index_of(v).map(|i| i as u32).ok_or(OutOfGround))
                .collect::<Result<_, _>>()?;
            idx.sort_unstable();
            idx.dedup();
            out.push(idx);
        }
        Self::from_indices(out)
    }

    fn from_indices(mut sets: Vec<Vec<u32>>) -> Result<Self, StructureError> {
        if sets.is_empty() || sets.iter().any(|s| s.is_empty()) {
            return Err(StructureError::EmptyFamily);
        }
        let mut seen = std::collections::HashSet::new();
        sets.retain(|s| seen.insert(s.clone()));
        Ok(ThickTestFamily { sets })
    }

    /// All nonempty subsets of the generators of size at most `max_size`,
    /// plus the configured progressions and extra sets.
    pub fn from_spec(amb: &Ambient, spec: &ThickFamilySpec) -> Result<Self, StructureError> {
        let gens: Vec<u32> = match &spec.generators {
            Some(g) => {
                let mut v: Vec<u32> = g
                    .iter()
                    .map(|x| amb.index_of(x).map(|i| i as u32).ok_or(OutOfGround))
                    .collect::<Result<_, _>>()?;
                v.sort_unstable();
                v.dedup();
                v
            }
            None => (0..amb.len() as u32).collect(),
        };
        let mut sets = Vec::new();
        let mut cur = Vec::new();
        subsets(&gens, spec.max_size, 0, &mut cur, &mut sets);
        if let GroundSet::PrimeField { p } = amb.ground() {
            let g = Rational::from(primitive_root(p) as i64);
            let mut term = Rational::one();
            let mut prog = Vec::new();
            for _ in 0..spec.progression_len.min(amb.len()) {
                prog.push(term.clone());
                let mut idx: Vec<u32> = prog
                    .iter()
                    .map(|v| amb.index_of(v).map(|i| i as u32).ok_or(OutOfGround))
                    .collect::<Result<_, _>>()?;
                idx.sort_unstable();
                sets.push(idx);
                term = amb.ground().mul(&term, &g);
            }
        }
        for extra in &spec.extra {
            sets.extend(Self::new(amb, std::slice::from_ref(extra))?.sets);
        }
        Self::from_indices(sets)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[Vec<u32>] {
        &self.sets
    }

    pub fn sets_as_values(&self, amb: &Ambient) -> Vec<Vec<Rational>> {
        self.sets
            .iter()
            .map(|s| s.iter().map(|&i| amb.value(i as usize).clone()).collect())
            .collect()
    }
}

fn subsets(gens: &[u32], max: usize, from: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if cur.len() == max {
        return;
    }
    for i in from..gens.len() {
        cur.push(gens[i]);
        out.push(cur.clone());
        subsets(gens, max, i + 1, cur, out);
        cur.pop();
    }
}

/// For every family set `F`, the least `a` with `a * F` inside `set`, as
/// ambient indices; `None` if some `F` has no shift.
pub(crate) fn thick_shift_indices(
    set: &ElementSet,
    family: &ThickTestFamily,
    amb: &Ambient,
) -> Option<Vec<u32>> {
    // pre[f] = {a : a * f in set}
    let pre: Vec<ElementSet> = (0..amb.len()).map(|f| amb.preimage(f, set)).collect();
    let words = pre.first().map_or(0, |s| s.as_slice().len());
    let mut out = Vec::with_capacity(family.len());
    for fset in family.sets() {
        let mut found = None;
        for w in 0..words {
            let acc = fset
                .iter()
                .fold(!0, |acc, &f| acc & pre[f as usize].as_slice()[w]);
            if acc != 0 {
                found = Some((w * usize::BITS as usize) as u32 + acc.trailing_zeros());
                break;
            }
        }
        out.push(found?);
    }
    Some(out)
}

/// Checks thickness against a test family and returns the least shift for
/// each family set, in family order.
pub fn is_thick(
    set: &ElementSet,
    family: &ThickTestFamily,
    amb: &Ambient,
) -> Option<Vec<Rational>> {
    thick_shift_indices(set, family, amb)
        .map(|v| v.iter().map(|&i| amb.value(i as usize).clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: i64) -> Rational {
        Rational::from(v)
    }

    fn field(p: u64) -> Ambient {
        Ambient::nonzero(GroundSet::prime_field(p).unwrap()).unwrap()
    }

    fn combos(n: usize, k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in from..n {
            cur.push(i);
            combos(n, k, i + 1, cur, out);
            cur.pop();
        }
    }

    /// Tries all subsets of size <= f, smallest size first and in
    /// lexicographic order within a size.
    fn oracle_syndetic(amb: &Ambient, set: &[i64], f: usize) -> Option<Vec<i64>> {
        let g = amb.ground();
        let vals: Vec<i64> = amb.values().iter().map(|v| v.to_i64().unwrap()).collect();
        for size in 1..=f {
            let mut all = Vec::new();
            combos(vals.len(), size, 0, &mut Vec::new(), &mut all);
            for combo in all {
                let fs: Vec<i64> = combo.iter().map(|&i| vals[i]).collect();
                let covered = vals.iter().all(|&x| {
                    fs.iter()
                        .any(|&a| set.iter().any(|&s| g.mul(&r(a), &r(s)) == r(x)))
                });
                if covered {
                    return Some(fs);
                }
            }
        }
        None
    }

    #[test]
    fn syndetic_examples() {
        let f5 = field(5);
        let w = is_syndetic(&f5.full_set(), 3, &f5).unwrap();
        assert_eq!(w.f, [r(1)]);
        let w = is_syndetic(&f5.set_of(&[r(1)]).unwrap(), 4, &f5).unwrap();
        assert_eq!(w.f, [1, 2, 3, 4].map(r));
        assert!(is_syndetic(&f5.set_of(&[r(1)]).unwrap(), 3, &f5).is_none());

        let f7 = field(7);
        let qr = f7.set_of(&[1, 2, 4].map(r)).unwrap();
        let w = is_syndetic(&qr, 2, &f7).unwrap();
        assert_eq!(w.f, [r(1), r(3)]);
        assert_eq!(oracle_syndetic(&f7, &[1, 2, 4], 2), Some(vec![1, 3]));
        assert!(is_syndetic(&f7.empty_set(), 6, &f7).is_none());
    }

    #[test]
    fn syndetic_matches_oracle_on_f11() {
        let f11 = field(11);
        for set in [vec![1, 3], vec![2, 5, 7], vec![1, 10], vec![3, 4, 5, 9]] {
            let s = f11
                .set_of(&set.iter().map(|&v| r(v)).collect::<Vec<_>>())
                .unwrap();
            for f in 1..=4 {
                let got = is_syndetic(&s, f, &f11)
                    .map(|w| w.f.iter().map(|v| v.to_i64().unwrap()).collect());
                assert_eq!(got, oracle_syndetic(&f11, &set, f), "{set:?} f={f}");
            }
        }
    }

    #[test]
    fn thick_examples() {
        let f5 = field(5);
        let fam = ThickTestFamily::new(&f5, &[vec![r(1), r(2)], vec![r(3)]]).unwrap();
        assert_eq!(is_thick(&f5.full_set(), &fam, &f5).unwrap(), [r(1), r(1)]);
        let fam12 = ThickTestFamily::new(&f5, &[vec![r(1), r(2)]]).unwrap();
        assert!(is_thick(&f5.set_of(&[r(1)]).unwrap(), &fam12, &f5).is_none());

        // F_7 minus {1}; shifts found by scanning a = 1..6 directly.
        let f7 = field(7);
        let t: Vec<i64> = (2..7).collect();
        let tset = f7
            .set_of(&t.iter().map(|&v| r(v)).collect::<Vec<_>>())
            .unwrap();
        let fam = ThickTestFamily::new(&f7, &[vec![r(1), r(2)], vec![r(1), r(2), r(3)]]).unwrap();
        let shifts = is_thick(&tset, &fam, &f7).unwrap();
        for (fs, a) in [vec![1, 2], vec![1, 2, 3]].iter().zip(&shifts) {
            let least = (1..7i64)
                .find(|&a| fs.iter().all(|&f| t.contains(&(a * f % 7))))
                .unwrap();
            assert_eq!(a, &r(least));
        }
    }

    #[test]
    fn family_from_spec() {
        let f7 = field(7);
        let fam = ThickTestFamily::from_spec(&f7, &ThickFamilySpec::subsets(2)).unwrap();
        // 6 singletons + 15 pairs; progressions {1} and {1,3} are repeats
        assert_eq!(fam.len(), 21);
        let spec = ThickFamilySpec {
            max_size: 1,
            generators: Some(vec![r(2)]),
            progression_len: 3,
            extra: vec![vec![r(5), r(6)]],
        };
        let fam = ThickTestFamily::from_spec(&f7, &spec).unwrap();
        assert_eq!(
            fam.sets_as_values(&f7),
            vec![
                vec![r(2)],
                vec![r(1)],
                vec![r(1), r(3)],
                vec![r(1), r(2), r(3)],
                vec![r(5), r(6)]
            ]
        );
        assert!(ThickTestFamily::new(&f7, &[]).is_err());
        assert!(ThickTestFamily::new(&f7, &[vec![]]).is_err());
    }

    #[test]
    fn unbounded_width_trivializes() {
        let f7 = field(7);
        for mask in 1u32..64 {
            let set: Vec<Rational> = (0..6)
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| r(b + 1))
                .collect();
            let s = f7.set_of(&set).unwrap();
            assert!(is_syndetic(&s, f7.len(), &f7).is_some());
        }
    }
}
