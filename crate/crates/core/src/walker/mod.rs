//! Step-by-step execution of the density-and-shift argument that produces
//! monochromatic `{x, y, xy, x+y}` over a prime field, with traces that an
//! independent checker can replay.

mod check;
mod claim;
mod derived;
mod theorem;

pub use check::check_trace;
pub use claim::{
    walk_claim_thick, ClaimBranch, ClaimFailure, ClaimStage, ClaimSuccess, ClaimTrace,
};
pub use derived::{build_derived_coloring, DerivedColoring, DerivedError, Tuple};
pub use theorem::{
    walk_theorem_m2, FinalStep, WalkError, WalkFailure, WalkParams, WalkStep, WalkSuccess,
    WalkTrace,
};

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::ground::GroundSet;
use crate::rational::Rational;

/// Uniform counting density on a finite ground, the stand-in for an
/// invariant mean.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityMean {
    pub ground: GroundSet,
    pub mode: DensityMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensityMode {
    /// Exact and shift invariant on a prime field.
    ExactUniform,
    /// On an integer interval shifts lose mass at the ends; searches accept
    /// densities within `eps` of the requested threshold.
    IntervalApprox { eps: Rational },
}

impl DensityMean {
    pub fn uniform(p: u64) -> Option<Self> {
        GroundSet::prime_field(p).ok().map(|ground| DensityMean {
            ground,
            mode: DensityMode::ExactUniform,
        })
    }

    /// Picks the mode from the ground: exact for prime fields, approximate
    /// with the given slack for intervals. Rational grids are not supported.
    pub fn for_ground(ground: GroundSet, eps: Rational) -> Option<Self> {
        match ground {
            GroundSet::PrimeField { .. } => Some(DensityMean {
                ground,
                mode: DensityMode::ExactUniform,
            }),
            GroundSet::IntegerInterval { .. } => Some(DensityMean {
                ground,
                mode: DensityMode::IntervalApprox { eps },
            }),
            GroundSet::RationalGrid { .. } => None,
        }
    }

    fn slack(&self) -> Rational {
        match &self.mode {
            DensityMode::ExactUniform => Rational::zero(),
            DensityMode::IntervalApprox { eps } => eps.clone(),
        }
    }

    fn of_count(&self, count: usize) -> Rational {
        Rational::new(count as i64, self.ground.len() as i64).expect("nonempty ground")
    }
}

/// `|A| / |ground|`; elements outside the ground are ignored.
pub fn density(a: &[Rational], mean: &DensityMean) -> Rational {
    let mut seen: Vec<&Rational> = a.iter().filter(|v| mean.ground.contains(v)).collect();
    seen.sort();
    seen.dedup();
    mean.of_count(seen.len())
}

/// First `y` in `candidates` (enumeration order) for which
/// `A' = {x in A : x + q*y in A for every q}` has density above
/// `alpha_prime`; returns `y` and `A'`.
pub fn bergelson_search(
    a: &[Rational],
    qs: &[Rational],
    candidates: &[Rational],
    alpha_prime: &Rational,
    mean: &DensityMean,
) -> Option<(Rational, Vec<Rational>)> {
    let ground = mean.ground;
    let index = ground.index();
    let mut a_set = FixedBitSet::with_capacity(index.len());
    for v in a {
        if let Some(p) = index.position(v) {
            a_set.insert(p);
        }
    }
    let mut cands: Vec<&Rational> = candidates.iter().collect();
    cands.sort_by_key(|v| index.position(v).unwrap_or(usize::MAX));
    cands.dedup();
    let threshold = alpha_prime - &mean.slack();
    for y in cands {
        let shifts: Vec<Rational> = qs.iter().map(|q| ground.mul(q, y)).collect();
        let kept: Vec<usize> = a_set
            .ones()
            .filter(|&x| {
                let xv = index.element(x);
                shifts.iter().all(|s| {
                    let t = match ground {
                        GroundSet::PrimeField { .. } => ground.add(xv, s),
                        _ => xv + s,
                    };
                    index.position(&t).is_some_and(|p| a_set.contains(p))
                })
            })
            .collect();
        if mean.of_count(kept.len()) > threshold {
            return Some((
                y.clone(),
                kept.iter().map(|&i| index.element(i).clone()).collect(),
            ));
        }
    }
    None
}

/// `{ y_i ... y_{j-1} / (f * y_1 ... y_{i-1}) : f in F, 1 <= i <= j }` with
/// empty products equal to 1, deduplicated and sorted. Needs `j - 1`
/// entries of `ys`.
pub fn compute_qj(
    j: usize,
    f: &[Rational],
    ys: &[Rational],
    ground: &GroundSet,
) -> Option<Vec<Rational>> {
    if j == 0 || ys.len() + 1 < j {
        return None;
    }
    let prod = |from: usize, to: usize| {
        ys[from..to].iter().fold(
            ground.embed(&Rational::one()).expect("1 embeds"),
            |acc, y| ground.mul(&acc, y),
        )
    };
    let mut out = Vec::new();
    for fv in f {
        for i in 1..=j {
            // y_i..y_{j-1} is ys[i-1..j-1]; y_1..y_{i-1} is ys[0..i-1]
            let num = prod(i - 1, j - 1);
            let den = ground.mul(fv, &prod(0, i - 1));
            out.push(ground.mul(&num, &ground.inverse(&den)?));
        }
    }
    out.sort();
    out.dedup();
    Some(out)
}
