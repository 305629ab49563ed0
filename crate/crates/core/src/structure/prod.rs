use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::rational::Rational;

use super::ambient::{Ambient, ElementSet};
use super::ipr::{fs_indices, fs_set, ipr_witness_indices, IPrWitness};
use super::shifts::{thick_shift_indices, ThickTestFamily};
use super::StructureError;

/// Sets `S[l][j]` (label `l < k`, column `j < columns`) each of the form
/// FS(witness), such that any product `S[l_i][i] * S[l_{i+1}][i+1] * ...`
/// over consecutive columns lies in `T_{l_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProdFamily {
    pub k: usize,
    pub columns: usize,
    pub r: usize,
    pub sets: Vec<Vec<Vec<Rational>>>,
    pub witnesses: Vec<Vec<IPrWitness>>,
}

impl ProdFamily {
    pub fn set(&self, l: usize, j: usize) -> &[Rational] {
        &self.sets[l][j]
    }
}

/// Builds the columns from last to first. Column `j` of label `l` is the
/// FS set of the least IP_r witness inside `{t in T_l : t * g in T_l for
/// every product g of a chain starting at column j + 1}`.
pub fn lemma_prod_construct(
    thick: &[ElementSet],
    r: usize,
    columns: usize,
    amb: &Ambient,
    family: &ThickTestFamily,
) -> Result<ProdFamily, StructureError> {
    if thick.is_empty() || columns == 0 || r == 0 {
        return Err(StructureError::InvalidParameter(
            "need at least one thick set, one column and r >= 1".into(),
        ));
    }
    for (l, t) in thick.iter().enumerate() {
        if thick_shift_indices(t, family, amb).is_none() {
            return Err(StructureError::NotThick(l));
        }
    }
    let k = thick.len();
    let mut sets = vec![vec![amb.empty_set(); columns]; k];
    let mut witnesses = vec![vec![Vec::new(); columns]; k];
    let mut chains = amb.empty_set();
    for j in (0..columns).rev() {
        let mut column_union = amb.empty_set();
        for (l, t) in thick.iter().enumerate() {
            let mut cand = amb.empty_set();
            for x in t.ones() {
                if chains
                    .ones()
                    .all(|g| amb.mul(x, g).is_some_and(|y| t.contains(y)))
                {
                    cand.insert(x);
                }
            }
            let w = ipr_witness_indices(&cand, r, &cand, amb).ok_or(
                StructureError::ConstructionFailure {
                    column: j,
                    label: l,
                    candidates: cand.count_ones(..),
                },
            )?;
            let s = fs_indices(amb, &w).expect("witness sums stay in the candidates");
            column_union.union_with(&s);
            sets[l][j] = s;
            witnesses[l][j] = w;
        }
        let mut next = column_union.clone();
        for a in column_union.ones() {
            for g in chains.ones() {
                next.insert(amb.mul(a, g).expect("checked above"));
            }
        }
        chains = next;
    }
    let out = ProdFamily {
        k,
        columns,
        r,
        sets: sets
            .iter()
            .map(|row| row.iter().map(|s| amb.values_of(s)).collect())
            .collect(),
        witnesses: witnesses
            .iter()
            .map(|row| {
                row.iter()
                    .map(|w| IPrWitness {
                        sequence: w.iter().map(|&i| amb.value(i).clone()).collect(),
                    })
                    .collect()
            })
            .collect(),
    };
    verify_prod(&out, thick, amb).map_err(StructureError::VerificationFailed)?;
    Ok(out)
}

/// Checks the witnesses and the chain containment with the ground's own
/// arithmetic. Chains starting at column `i` are handled through the union
/// of each later column, which covers every choice of labels at once.
pub fn verify_prod(family: &ProdFamily, thick: &[ElementSet], amb: &Ambient) -> Result<(), String> {
    let ground = amb.ground();
    if family.sets.len() != family.k || thick.len() != family.k {
        return Err("label count mismatch".into());
    }
    let targets: Vec<BTreeSet<Rational>> = thick
        .iter()
        .map(|t| amb.values_of(t).into_iter().collect())
        .collect();
    for l in 0..family.k {
        if family.sets[l].len() != family.columns || family.witnesses[l].len() != family.columns {
            return Err(format!("label {l}: wrong column count"));
        }
        for j in 0..family.columns {
            let w = &family.witnesses[l][j];
            if w.rank() != family.r {
                return Err(format!("S[{l}][{j}]: witness has length {}", w.rank()));
            }
            let fs = fs_set(&w.sequence, &ground)
                .map_err(|_| format!("S[{l}][{j}]: sums leave the ground"))?;
            let s: BTreeSet<Rational> = family.sets[l][j].iter().cloned().collect();
            if fs != s {
                return Err(format!("S[{l}][{j}] is not FS of its witness"));
            }
        }
    }
    let unions: Vec<BTreeSet<Rational>> = (0..family.columns)
        .map(|j| {
            (0..family.k)
                .flat_map(|l| family.sets[l][j].iter().cloned())
                .collect()
        })
        .collect();
    for i in 0..family.columns {
        for l in 0..family.k {
            let mut prods: BTreeSet<Rational> = family.sets[l][i].iter().cloned().collect();
            for j in i..family.columns {
                if j > i {
                    prods = prods
                        .iter()
                        .flat_map(|a| unions[j].iter().map(move |b| ground.mul(a, b)))
                        .collect();
                }
                if let Some(bad) = prods.iter().find(|v| !targets[l].contains(*v)) {
                    return Err(format!(
                        "chain from column {i} label {l} to column {j} reaches {bad} outside T_{l}"
                    ));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::GroundSet;
    use crate::structure::ThickFamilySpec;

    fn field(p: u64) -> (Ambient, ThickTestFamily) {
        let amb = Ambient::nonzero(GroundSet::prime_field(p).unwrap()).unwrap();
        let fam = ThickTestFamily::from_spec(&amb, &ThickFamilySpec::subsets(1)).unwrap();
        (amb, fam)
    }

    #[test]
    fn single_column_full_ambient() {
        let (amb, fam) = field(7);
        let pf = lemma_prod_construct(&[amb.full_set()], 1, 1, &amb, &fam).unwrap();
        assert_eq!(pf.sets, [[vec![Rational::one()]]]);
    }

    #[test]
    fn two_columns_in_a_group() {
        let (amb, fam) = field(11);
        let pf = lemma_prod_construct(&[amb.full_set()], 1, 2, &amb, &fam).unwrap();
        assert_eq!(pf.sets[0].len(), 2);
        verify_prod(&pf, &[amb.full_set()], &amb).unwrap();
    }

    /// Explicit enumeration over every label sequence and element choice.
    fn oracle(pf: &ProdFamily, thick: &[ElementSet], amb: &Ambient) -> bool {
        let g = amb.ground();
        let k = pf.k;
        for i in 0..pf.columns {
            for j in i..pf.columns {
                let len = j - i + 1;
                for code in 0..k.pow(len as u32) {
                    let labels: Vec<usize> = (0..len).map(|d| code / k.pow(d as u32) % k).collect();
                    let mut prods = vec![Rational::one()];
                    for (d, &l) in labels.iter().enumerate() {
                        prods = prods
                            .iter()
                            .flat_map(|a| pf.sets[l][i + d].iter().map(move |b| g.mul(a, b)))
                            .collect();
                    }
                    let t = &thick[labels[0]];
                    if !prods
                        .iter()
                        .all(|v| amb.index_of(v).is_some_and(|x| t.contains(x)))
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    #[test]
    fn overlapping_sets_in_f13() {
        let (amb, fam) = field(13);
        let t1 = amb
            .set_of(&(1..=9).map(Rational::from).collect::<Vec<_>>())
            .unwrap();
        let t2 = amb
            .set_of(&(4..=12).chain([1]).map(Rational::from).collect::<Vec<_>>())
            .unwrap();
        let pf = lemma_prod_construct(&[t1.clone(), t2.clone()], 1, 2, &amb, &fam).unwrap();
        assert!(oracle(&pf, &[t1, t2], &amb));
    }

    #[test]
    fn failure_names_the_column() {
        // {2,3} in F_7: no element of it maps the set into itself.
        let (amb, fam) = field(7);
        let t = amb.set_of(&[Rational::from(2), Rational::from(3)]).unwrap();
        match lemma_prod_construct(&[t], 1, 3, &amb, &fam) {
            Err(StructureError::ConstructionFailure { column, .. }) => assert_eq!(column, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn verifier_rejects_tampering() {
        let (amb, fam) = field(11);
        let pf = lemma_prod_construct(&[amb.full_set()], 2, 2, &amb, &fam).unwrap();
        let mut bad = pf.clone();
        bad.sets[0][0].pop();
        assert!(verify_prod(&bad, &[amb.full_set()], &amb).is_err());
        let half = amb
            .set_of(&(6..=10).map(Rational::from).collect::<Vec<_>>())
            .unwrap();
        assert!(verify_prod(&pf, &[half], &amb).is_err());
    }
}
