use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;
use crate::search::Coloring;
use crate::structure::{Ambient, CoverDecomposition};

/// A derived color: group index `l` and one shift per base color. Shifts of
/// colors outside `Y_l` are unconstrained and set to the least element of F.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tuple {
    pub l: usize,
    /// Indices into the cover's `F`.
    pub f: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DerivedError {
    #[error("{0} fits no group of the cover")]
    UncoveredElement(Rational),
    #[error("the cover has an empty shift set")]
    EmptyShiftSet,
}

/// Each nonzero element mapped to the least tuple `(l, f_1..f_n)` with
/// `x in f_m * C_m` for every `m` in `Y_l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedColoring {
    /// Occupied tuples in increasing order.
    pub tuples: Vec<Tuple>,
    /// Per ambient element (enumeration order), index into `tuples`.
    pub tuple_of: Vec<usize>,
    pub cover_ys: Vec<Vec<usize>>,
    pub f: Vec<Rational>,
}

impl DerivedColoring {
    /// Number of occupied tuples.
    pub fn k(&self) -> usize {
        self.tuples.len()
    }

    pub fn tuple_at(&self, ambient_index: usize) -> &Tuple {
        &self.tuples[self.tuple_of[ambient_index]]
    }

    /// Members of each occupied tuple, as ambient indices.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.tuples.len()];
        for (x, &t) in self.tuple_of.iter().enumerate() {
            out[t].push(x);
        }
        out
    }
}

pub fn build_derived_coloring(
    coloring: &Coloring,
    cover: &CoverDecomposition,
    amb: &Ambient,
) -> Result<DerivedColoring, DerivedError> {
    if cover.f.is_empty() {
        return Err(DerivedError::EmptyShiftSet);
    }
    let ground = amb.ground();
    let n = coloring.num_colors();
    let inverses: Vec<Option<Rational>> = cover.f.iter().map(|f| ground.inverse(f)).collect();
    // color of x / f, for every shift
    let shifted_color = |x: &Rational, fi: usize| -> Option<usize> {
        let c = ground.mul(x, inverses[fi].as_ref()?);
        amb.index_of(&c)?;
        coloring.color_of(&c)
    };
    let mut seen: BTreeMap<Tuple, ()> = BTreeMap::new();
    let mut raw = Vec::with_capacity(amb.len());
    for x in 0..amb.len() {
        let xv = amb.value(x);
        let colors: Vec<Option<usize>> =
            (0..cover.f.len()).map(|fi| shifted_color(xv, fi)).collect();
        let tuple = cover.ys.iter().enumerate().find_map(|(l, y)| {
            let mut f = vec![0; n];
            for &m in y {
                f[m] = colors.iter().position(|&c| c == Some(m))?;
            }
            Some(Tuple { l, f })
        });
        let tuple = tuple.ok_or_else(|| DerivedError::UncoveredElement(xv.clone()))?;
        seen.insert(tuple.clone(), ());
        raw.push(tuple);
    }
    let tuples: Vec<Tuple> = seen.into_keys().collect();
    let tuple_of = raw
        .iter()
        .map(|t| tuples.binary_search(t).expect("recorded"))
        .collect();
    Ok(DerivedColoring {
        tuples,
        tuple_of,
        cover_ys: cover.ys.clone(),
        f: cover.f.clone(),
    })
}

/// Definition-level membership: `x in f_m * C_m` for each `m` in `Y_l`.
pub(crate) fn in_derived_class(
    x: &Rational,
    tuple: &Tuple,
    ys: &[Vec<usize>],
    f: &[Rational],
    coloring: &Coloring,
) -> bool {
    let ground = coloring.ground();
    let Some(y) = ys.get(tuple.l) else {
        return false;
    };
    y.iter().all(|&m| {
        let Some(fv) = tuple.f.get(m).and_then(|&i| f.get(i)) else {
            return false;
        };
        match ground.inverse(fv) {
            Some(inv) => {
                let c = ground.mul(x, &inv);
                ground.is_nonzero(&c) && coloring.color_of(&c) == Some(m)
            }
            None => false,
        }
    })
}
