use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::search::{verify_monochromatic, Coloring};
use crate::structure::{classes, find_ipr_witness, is_thick, Ambient, ElementSet, ThickTestFamily};
use crate::template::{builtin_template, Builtin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimBranch {
    /// `y = y_1` already works inside the majority class.
    FirstShift,
    /// `y = y_1 y_2` inside the majority class.
    ProductShift,
    /// `y = y_2` with `x = y_1 x''` in the other class.
    SecondColor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimStage {
    Precondition,
    ProdConstruct,
    FirstSearch,
    SecondSearch,
    FinalVerification,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{stage:?}: {detail}")]
pub struct ClaimFailure {
    pub stage: ClaimStage,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClaimTrace {
    pub p: u64,
    /// Color playing `C_1`.
    pub majority: usize,
    pub w1: Vec<Rational>,
    pub w2: Vec<Rational>,
    pub s1: Vec<Rational>,
    pub s2: Vec<Rational>,
    pub y1: Option<Rational>,
    pub alpha1: Option<Rational>,
    pub c1_prime: Vec<Rational>,
    pub y2: Option<Rational>,
    pub alpha2: Option<Rational>,
    pub c1_second: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSuccess {
    /// `{x, y, xy, x+y}`.
    pub quadruple: Vec<Rational>,
    pub color: usize,
    pub branch: ClaimBranch,
    pub trace: ClaimTrace,
}

fn failure(stage: ClaimStage, detail: impl Into<String>) -> ClaimFailure {
    ClaimFailure {
        stage,
        detail: detail.into(),
    }
}

/// Densest admissible `y` among `cands` with `A' = {x in A : x + q y in A}`.
fn shift_search(
    amb: &Ambient,
    a: &ElementSet,
    qs: &[usize],
    cands: &[usize],
) -> Option<(usize, ElementSet)> {
    let keep = |y: usize| {
        let shifts: Vec<usize> = qs.iter().map(|&q| amb.mul(q, y).expect("group")).collect();
        let mut out = amb.empty_set();
        for x in a.ones() {
            if shifts
                .iter()
                .all(|&s| amb.add(x, s).is_some_and(|t| a.contains(t)))
            {
                out.insert(x);
            }
        }
        out
    };
    let mut best: Option<(usize, ElementSet)> = None;
    for &y in cands {
        let k = keep(y);
        if k.count_ones(..) > best.as_ref().map_or(0, |(_, b)| b.count_ones(..)) {
            best = Some((y, k));
        }
    }
    best
}

/// Two-color walk for colorings whose classes are both multiplicatively
/// thick against `family`.
pub fn walk_claim_thick(
    coloring: &Coloring,
    r: usize,
    family: &ThickTestFamily,
) -> Result<ClaimSuccess, ClaimFailure> {
    let ground = coloring.ground();
    let GroundSet::PrimeField { p } = ground else {
        return Err(failure(
            ClaimStage::Precondition,
            "ground must be a prime field",
        ));
    };
    if coloring.num_colors() != 2 || r == 0 {
        return Err(failure(
            ClaimStage::Precondition,
            "needs two colors and r >= 1",
        ));
    }
    let amb = Ambient::nonzero(ground).expect("field elements");
    let cls =
        classes(coloring, &amb).map_err(|e| failure(ClaimStage::Precondition, e.to_string()))?;
    for (c, set) in cls.iter().enumerate() {
        if is_thick(set, family, &amb).is_none() {
            return Err(failure(
                ClaimStage::Precondition,
                format!("color {c} is not thick"),
            ));
        }
    }
    let a = usize::from(cls[1].count_ones(..) > cls[0].count_ones(..));
    let (c1, c2) = (&cls[a], &cls[1 - a]);
    let mut trace = ClaimTrace {
        p,
        majority: a,
        ..ClaimTrace::default()
    };
    let vals = |s: &ElementSet| amb.values_of(s);
    let fs = |seq: &[Rational]| -> Result<ElementSet, ClaimFailure> {
        let set = crate::structure::fs_set(seq, &ground)
            .map_err(|_| failure(ClaimStage::ProdConstruct, "sums leave the field"))?;
        amb.set_of(&set.into_iter().collect::<Vec<_>>())
            .map_err(|_| failure(ClaimStage::ProdConstruct, "FS set contains zero"))
    };

    let w2 = find_ipr_witness(c2, r, c2, &amb).ok_or_else(|| {
        failure(
            ClaimStage::ProdConstruct,
            "minority class has no IP_r witness",
        )
    })?;
    let s2 = fs(&w2.sequence)?;
    let mut space1 = amb.empty_set();
    for t in c1.ones() {
        if s2
            .ones()
            .all(|s| amb.mul(t, s).is_some_and(|v| c1.contains(v)))
        {
            space1.insert(t);
        }
    }
    let w1 = find_ipr_witness(&space1, r, &space1, &amb).ok_or_else(|| {
        failure(
            ClaimStage::ProdConstruct,
            "no IP_r witness maps S_2 into C_1",
        )
    })?;
    let s1 = fs(&w1.sequence)?;
    trace.w1 = w1.sequence;
    trace.w2 = w2.sequence;
    trace.s1 = vals(&s1);
    trace.s2 = vals(&s2);

    let one = amb.one().expect("1");
    let half = Rational::new(1, 2 * p as i64).expect("p > 0");
    let dens = |s: &ElementSet| Rational::new(s.count_ones(..) as i64, p as i64).expect("p > 0");
    let quad = builtin_template(Builtin::Quad, None).expect("builtin");

    let s1_list: Vec<usize> = s1.ones().collect();
    let (y1, c1p) = shift_search(&amb, c1, &[one], &s1_list).ok_or_else(|| {
        failure(
            ClaimStage::FirstSearch,
            "no shift in S_1 keeps a nonempty part of C_1",
        )
    })?;
    trace.y1 = Some(amb.value(y1).clone());
    trace.alpha1 = Some(&dens(&c1p) - &half);
    trace.c1_prime = vals(&c1p);

    let finish = |x: usize, y: usize, branch: ClaimBranch, trace: ClaimTrace| {
        let xv = amb.value(x).clone();
        let yv = amb.value(y).clone();
        match verify_monochromatic(coloring, &quad, &[xv.clone(), yv.clone()]) {
            Some(color) => Ok(ClaimSuccess {
                quadruple: vec![
                    xv.clone(),
                    yv.clone(),
                    ground.mul(&xv, &yv),
                    ground.add(&xv, &yv),
                ],
                color,
                branch,
                trace,
            }),
            None => Err(failure(
                ClaimStage::FinalVerification,
                format!("x = {xv}, y = {yv} is not monochromatic"),
            )),
        }
    };

    if let Some(x) = c1p
        .ones()
        .find(|&x| amb.mul(x, y1).is_some_and(|v| c1.contains(v)))
    {
        return finish(x, y1, ClaimBranch::FirstShift, trace);
    }

    let inv_y1 = amb
        .index_of(&ground.inverse(amb.value(y1)).expect("nonzero"))
        .expect("ambient");
    let s2_list: Vec<usize> = s2.ones().collect();
    let (y2, c1pp) = shift_search(&amb, &c1p, &[y1, inv_y1], &s2_list).ok_or_else(|| {
        failure(
            ClaimStage::SecondSearch,
            "no shift in S_2 keeps a nonempty part of C_1'",
        )
    })?;
    trace.y2 = Some(amb.value(y2).clone());
    trace.alpha2 = Some(&dens(&c1pp) - &half);
    trace.c1_second = vals(&c1pp);

    let y12 = amb.mul(y1, y2).expect("group");
    if let Some(x) = c1pp
        .ones()
        .find(|&x| amb.mul(x, y12).is_some_and(|v| c1.contains(v)))
    {
        return finish(x, y12, ClaimBranch::ProductShift, trace);
    }
    let x2 = c1pp.ones().next().expect("nonempty");
    let x = amb.mul(y1, x2).expect("group");
    finish(x, y2, ClaimBranch::SecondColor, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::ThickFamilySpec;

    fn fam(p: u64) -> ThickTestFamily {
        let amb = Ambient::nonzero(GroundSet::prime_field(p).unwrap()).unwrap();
        ThickTestFamily::from_spec(&amb, &ThickFamilySpec::subsets(1)).unwrap()
    }

    #[test]
    fn residue_coloring_is_not_thick() {
        let g = GroundSet::prime_field(7).unwrap();
        let c = Coloring::from_fn(g, 2, |v| {
            usize::from(![1, 2, 4].contains(&v.to_i64().unwrap()))
        })
        .unwrap();
        let amb = Ambient::nonzero(g).unwrap();
        let fam = ThickTestFamily::from_spec(&amb, &ThickFamilySpec::subsets(2)).unwrap();
        let err = walk_claim_thick(&c, 1, &fam).unwrap_err();
        assert_eq!(err.stage, ClaimStage::Precondition);
    }

    #[test]
    fn random_thick_colorings_give_verified_quadruples() {
        use rand::SeedableRng;
        let g = GroundSet::prime_field(31).unwrap();
        let family = fam(31);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut wins = 0;
        for _ in 0..20 {
            let c = Coloring::random(g, 2, &mut rng).unwrap();
            if let Ok(s) = walk_claim_thick(&c, 1, &family) {
                let x = &s.quadruple[0];
                let y = &s.quadruple[1];
                for v in [x.clone(), y.clone(), g.mul(x, y), g.add(x, y)] {
                    assert!(g.is_nonzero(&v));
                    assert_eq!(c.color_of(&v), Some(s.color));
                }
                wins += 1;
            }
        }
        assert!(wins > 0);
    }

    #[test]
    fn almost_monochrome_succeeds() {
        let g = GroundSet::prime_field(31).unwrap();
        for missing in [1i64, 5, 30] {
            let c = Coloring::from_fn(g, 2, |v| usize::from(v.to_i64() == Some(missing))).unwrap();
            let s = walk_claim_thick(&c, 1, &fam(31)).unwrap();
            assert_eq!(s.color, 0);
            assert!(verify_monochromatic(
                &c,
                &builtin_template(Builtin::Quad, None).unwrap(),
                &s.quadruple[..2]
            )
            .is_some());
        }
    }
}
