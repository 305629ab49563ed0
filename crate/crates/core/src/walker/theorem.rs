use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::search::{verify_monochromatic, Coloring};
use crate::structure::{
    classes, cover_decomposition, lemma_prod_construct, Ambient, ElementSet, ThickTestFamily,
};
use crate::template::{builtin_template, Builtin};

use super::compute_qj;
use super::derived::{build_derived_coloring, DerivedColoring, Tuple};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct WalkParams {
    /// Number of derived-color steps; at least 2.
    pub n: usize,
    /// Bound on `|Q_j|`; computed from `n` and `|F|` when absent.
    pub s: Option<usize>,
    /// IP rank of the product family sets.
    pub r: usize,
    pub alpha_floor: Rational,
    pub seed: u64,
    /// Extra attempts from a randomly chosen starting color.
    pub restarts: usize,
}

impl Default for WalkParams {
    fn default() -> Self {
        WalkParams {
            n: 6,
            s: None,
            r: 1,
            alpha_floor: Rational::new(1, 1000).expect("nonzero denominator"),
            seed: 0,
            restarts: 0,
        }
    }
}

/// How `A_{j+1}` was obtained from `A_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub q: Vec<Rational>,
    pub s_label: usize,
    pub s_column: usize,
    pub s_set: Vec<Rational>,
    pub alpha_prime: Rational,
    pub y: Rational,
    pub a_prime: Vec<Rational>,
    /// `y_1 * ... * y_j`.
    pub product: Rational,
    /// Self-checked properties (1), (2), (3) of the step.
    pub properties: [bool; 3],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStep {
    pub j: usize,
    pub a: Vec<Rational>,
    pub density: Rational,
    pub tuple: Tuple,
    pub transition: Option<Transition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalStep {
    pub i: usize,
    pub j: usize,
    pub y: Rational,
    pub l: usize,
    pub m: usize,
    pub f_m: Rational,
    /// `{x, y, xy, x+y}` for the first `x`.
    pub quadruple: Vec<Rational>,
    /// Every `x` obtained from an element of `A_j`.
    pub xs: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkTrace {
    pub p: u64,
    pub colors: usize,
    pub params: WalkParams,
    pub width: usize,
    pub cover_ys: Vec<Vec<usize>>,
    pub f: Vec<Rational>,
    /// Number of occupied derived colors.
    pub k: usize,
    pub s_bound: usize,
    /// Set when the product family could not be built and the thick unions
    /// were used instead.
    pub prod_degraded: Option<String>,
    pub attempt: usize,
    pub steps: Vec<WalkStep>,
    pub final_step: Option<FinalStep>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkSuccess {
    pub quadruple: Vec<Rational>,
    pub color: usize,
    pub xs: Vec<Rational>,
    pub trace: WalkTrace,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "stage", content = "detail", rename_all = "snake_case")]
pub enum WalkFailure {
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("cover decomposition: {0}")]
    CoverFailure(String),
    #[error("derived coloring: {0}")]
    DerivedFailure(String),
    #[error("y = y_i..y_(j-1) missed the thick union of its group: {0}")]
    ProdFailure(String),
    #[error("density fell below the floor at step {0}")]
    DensityFailure(usize),
    #[error("no derived color repeats among the steps")]
    NoRepeatedTuple,
    #[error("final verification failed: {0}")]
    FinalVerificationFailure(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{failure}")]
pub struct WalkError {
    pub failure: WalkFailure,
    pub trace: Option<WalkTrace>,
}

impl WalkError {
    fn bare(failure: WalkFailure) -> Self {
        WalkError {
            failure,
            trace: None,
        }
    }
}

struct Setup<'a> {
    coloring: &'a Coloring,
    amb: Ambient,
    derived: DerivedColoring,
    classes: Vec<ElementSet>,
    /// `s_sets[l][col]`, ambient indices in increasing order.
    s_sets: Vec<Vec<Vec<usize>>>,
    f_inv: Vec<Rational>,
    base: WalkTrace,
}

/// Runs the derived-color induction over a prime field coloring and returns
/// a monochromatic `{x, y, xy, x+y}` that has passed the search module's
/// verifier, together with the full trace.
pub fn walk_theorem_m2(
    coloring: &Coloring,
    params: &WalkParams,
    width: usize,
    family: &ThickTestFamily,
) -> Result<WalkSuccess, WalkError> {
    let ground = coloring.ground();
    let GroundSet::PrimeField { p } = ground else {
        return Err(WalkError::bare(WalkFailure::Precondition(
            "ground must be a prime field".into(),
        )));
    };
    if params.n < 2 {
        return Err(WalkError::bare(WalkFailure::Precondition(
            "n must be at least 2".into(),
        )));
    }
    if params.alpha_floor.is_negative() || params.alpha_floor.is_zero() || params.r == 0 {
        return Err(WalkError::bare(WalkFailure::Precondition(
            "alpha floor must be positive and r at least 1".into(),
        )));
    }
    let amb = Ambient::nonzero(ground).expect("field elements");
    let cover = cover_decomposition(coloring, width, &amb, family)
        .map_err(|e| WalkError::bare(WalkFailure::CoverFailure(e.to_string())))?;
    let derived = build_derived_coloring(coloring, &cover, &amb)
        .map_err(|e| WalkError::bare(WalkFailure::DerivedFailure(e.to_string())))?;
    let classes = classes(coloring, &amb)
        .map_err(|e| WalkError::bare(WalkFailure::Precondition(e.to_string())))?;

    let s_bound_needed = (params.n - 1) * cover.f.len();
    let s_bound = match params.s {
        Some(s) if s < s_bound_needed => {
            return Err(WalkError::bare(WalkFailure::Precondition(format!(
                "s = {s} is below the {s_bound_needed} shifts needed"
            ))))
        }
        Some(s) => s,
        None => s_bound_needed,
    };

    let thick: Vec<ElementSet> = cover
        .ys
        .iter()
        .map(|y| {
            let mut u = amb.empty_set();
            for &m in y {
                u.union_with(&classes[m]);
            }
            u
        })
        .collect();
    let columns = params.n - 1;
    let (s_sets, prod_degraded) =
        match lemma_prod_construct(&thick, params.r, columns, &amb, family) {
            Ok(pf) => (
                (0..cover.k)
                    .map(|l| {
                        (0..columns)
                            .map(|j| {
                                pf.set(l, j)
                                    .iter()
                                    .map(|v| amb.index_of(v).expect("ambient value"))
                                    .collect()
                            })
                            .collect()
                    })
                    .collect(),
                None,
            ),
            Err(e) => (
                thick
                    .iter()
                    .map(|t| vec![t.ones().collect(); columns])
                    .collect(),
                Some(e.to_string()),
            ),
        };

    let f_inv = cover
        .f
        .iter()
        .map(|f| ground.inverse(f).expect("nonzero shift"))
        .collect();
    let base = WalkTrace {
        p,
        colors: coloring.num_colors(),
        params: params.clone(),
        width,
        cover_ys: cover.ys.clone(),
        f: cover.f.clone(),
        k: derived.k(),
        s_bound,
        prod_degraded,
        attempt: 0,
        steps: Vec::new(),
        final_step: None,
    };
    let setup = Setup {
        coloring,
        amb,
        derived,
        classes,
        s_sets,
        f_inv,
        base,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut last = None;
    for attempt in 0..=params.restarts {
        match run_once(&setup, attempt, &mut rng) {
            Ok(s) => return Ok(s),
            Err(e) if matches!(e.failure, WalkFailure::FinalVerificationFailure(_)) => {
                return Err(e)
            }
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn density_of(count: usize, p: u64) -> Rational {
    Rational::new(count as i64, p as i64).expect("p > 0")
}

fn run_once(
    setup: &Setup<'_>,
    attempt: usize,
    rng: &mut ChaCha8Rng,
) -> Result<WalkSuccess, WalkError> {
    let amb = &setup.amb;
    let ground = amb.ground();
    let derived = &setup.derived;
    let params = &setup.base.params;
    let p = setup.base.p;
    let mut trace = setup.base.clone();
    trace.attempt = attempt;
    let fail = |failure: WalkFailure, trace: WalkTrace| WalkError {
        failure,
        trace: Some(trace),
    };
    let above_floor = |count: usize| count > 0 && density_of(count, p) >= params.alpha_floor;

    let members = derived.classes();
    let start = if attempt == 0 {
        // densest derived color, least tuple on ties
        (0..members.len())
            .max_by(|&a, &b| members[a].len().cmp(&members[b].len()).then(b.cmp(&a)))
            .expect("at least one derived color")
    } else {
        let ok: Vec<usize> = (0..members.len())
            .filter(|&t| above_floor(members[t].len()))
            .collect();
        *ok.choose(rng).unwrap_or(&0)
    };
    let mut a_cur: Vec<usize> = members[start].clone();
    let mut tuples = vec![start];
    let mut a_sets = vec![a_cur.clone()];
    let mut ys: Vec<usize> = Vec::new();
    let mut product = amb.one().expect("1 is in the multiplicative ambient");
    let values = |set: &[usize]| {
        set.iter()
            .map(|&i| amb.value(i).clone())
            .collect::<Vec<_>>()
    };

    trace.steps.push(WalkStep {
        j: 1,
        a: values(&a_cur),
        density: density_of(a_cur.len(), p),
        tuple: derived.tuples[start].clone(),
        transition: None,
    });
    if !above_floor(a_cur.len()) {
        return Err(fail(WalkFailure::DensityFailure(1), trace));
    }

    for j in 1..params.n {
        let y_vals: Vec<Rational> = ys.iter().map(|&i| amb.value(i).clone()).collect();
        let q_vals = compute_qj(j, &setup.f_inv, &y_vals, &ground).expect("nonzero products");
        if q_vals.len() > trace.s_bound {
            return Err(fail(
                WalkFailure::Precondition(format!("|Q_{j}| = {} exceeds s", q_vals.len())),
                trace,
            ));
        }
        let qs: Vec<usize> = q_vals
            .iter()
            .map(|q| amb.index_of(q).expect("nonzero"))
            .collect();
        let label = derived.tuples[tuples[j - 1]].l;
        let column = j - 1;
        let cands = &setup.s_sets[label][column];

        let mut in_a = amb.empty_set();
        a_cur.iter().for_each(|&x| in_a.insert(x));
        let keep = |y: usize| -> Vec<usize> {
            let shifts: Vec<usize> = qs.iter().map(|&q| amb.mul(q, y).expect("group")).collect();
            a_cur
                .iter()
                .copied()
                .filter(|&x| {
                    shifts
                        .iter()
                        .all(|&s| amb.add(x, s).is_some_and(|t| in_a.contains(t)))
                })
                .collect()
        };
        let best = cands.iter().map(|&y| keep(y).len()).max().unwrap_or(0);
        if !above_floor(best) {
            return Err(fail(WalkFailure::DensityFailure(j), trace));
        }
        let half = Rational::new(1, 2 * p as i64).expect("p > 0");
        let alpha_prime = &density_of(best, p) - &half;
        let (y, a_prime) = cands
            .iter()
            .find_map(|&y| {
                let k = keep(y);
                (density_of(k.len(), p) > alpha_prime).then_some((y, k))
            })
            .expect("the best candidate passes");
        ys.push(y);
        product = amb.mul(product, y).expect("group");

        // pigeonhole over derived colors of x * y_1..y_j
        let mut counts = vec![0usize; derived.k()];
        for &x in &a_prime {
            counts[derived.tuple_of[amb.mul(x, product).expect("group")]] += 1;
        }
        let next = (0..counts.len())
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .expect("nonempty");
        let a_next: Vec<usize> = a_prime
            .iter()
            .copied()
            .filter(|&x| derived.tuple_of[amb.mul(x, product).expect("group")] == next)
            .collect();

        let prop1 = a_next.iter().all(|x| a_cur.contains(x))
            && a_next.iter().all(|&x| {
                qs.iter().all(|&q| {
                    amb.add(x, amb.mul(q, y).expect("group"))
                        .is_some_and(|t| in_a.contains(t))
                })
            });
        let prop2 = a_next
            .iter()
            .all(|&x| derived.tuple_of[amb.mul(x, product).expect("group")] == next);
        let prop3 = cands.contains(&y);
        trace.steps.last_mut().expect("current step").transition = Some(Transition {
            q: q_vals,
            s_label: label,
            s_column: column,
            s_set: values(cands),
            alpha_prime,
            y: amb.value(y).clone(),
            a_prime: values(&a_prime),
            product: amb.value(product).clone(),
            properties: [prop1, prop2, prop3],
        });
        if !(prop1 && prop2 && prop3) {
            return Err(fail(
                WalkFailure::FinalVerificationFailure(format!(
                    "step {j} violates its own properties"
                )),
                trace,
            ));
        }
        trace.steps.push(WalkStep {
            j: j + 1,
            a: values(&a_next),
            density: density_of(a_next.len(), p),
            tuple: derived.tuples[next].clone(),
            transition: None,
        });
        if !above_floor(a_next.len()) {
            return Err(fail(WalkFailure::DensityFailure(j + 1), trace));
        }
        let repeated = tuples.contains(&next);
        tuples.push(next);
        a_sets.push(a_next.clone());
        a_cur = a_next;
        if repeated {
            break;
        }
    }

    let Some((i, j)) = (1..=tuples.len())
        .flat_map(|i| (i + 1..=tuples.len()).map(move |j| (i, j)))
        .find(|&(i, j)| tuples[i - 1] == tuples[j - 1])
    else {
        return Err(fail(WalkFailure::NoRepeatedTuple, trace));
    };
    let tuple = &derived.tuples[tuples[i - 1]];
    let prod_range = |from: usize, to: usize| {
        ys[from..to].iter().fold(amb.one().expect("1"), |acc, &y| {
            amb.mul(acc, y).expect("group")
        })
    };
    let y = prod_range(i - 1, j - 1);
    let group = &derived.cover_ys[tuple.l];
    let Some(m) = group
        .iter()
        .copied()
        .find(|&m| setup.classes[m].contains(y))
    else {
        let msg = format!("y = {} has no color in group {:?}", amb.value(y), group);
        let failure = if trace.prod_degraded.is_some() {
            WalkFailure::ProdFailure(msg)
        } else {
            WalkFailure::FinalVerificationFailure(msg)
        };
        return Err(fail(failure, trace));
    };
    let f_m = &derived.f[tuple.f[m]];
    let f_m_inv = amb
        .index_of(&ground.inverse(f_m).expect("nonzero"))
        .expect("ambient");
    let head = prod_range(0, i - 1);
    let quad = builtin_template(Builtin::Quad, None).expect("builtin");
    let mut xs = Vec::new();
    for &x_prime in &a_sets[j - 1] {
        let x = amb
            .mul(amb.mul(x_prime, head).expect("group"), f_m_inv)
            .expect("group");
        let xy = amb.mul(x, y).expect("group");
        let direct = [Some(x), Some(xy), amb.add(x, y)]
            .iter()
            .all(|v| v.is_some_and(|v| setup.classes[m].contains(v)));
        let xv = amb.value(x).clone();
        let yv = amb.value(y).clone();
        let verified =
            verify_monochromatic(setup.coloring, &quad, &[xv.clone(), yv.clone()]) == Some(m);
        if !(direct && verified) {
            return Err(fail(
                WalkFailure::FinalVerificationFailure(format!(
                    "x = {xv}, y = {yv} is not monochromatic"
                )),
                trace,
            ));
        }
        xs.push(xv);
    }
    let x0 = xs[0].clone();
    let yv = amb.value(y).clone();
    let quadruple = vec![
        x0.clone(),
        yv.clone(),
        ground.mul(&x0, &yv),
        ground.add(&x0, &yv),
    ];
    trace.final_step = Some(FinalStep {
        i,
        j,
        y: yv,
        l: tuple.l,
        m,
        f_m: f_m.clone(),
        quadruple: quadruple.clone(),
        xs: xs.clone(),
    });
    Ok(WalkSuccess {
        quadruple,
        color: m,
        xs,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::find_instances;
    use crate::structure::ThickFamilySpec;
    use crate::walker::check_trace;
    use rand::SeedableRng;

    fn family(p: u64, width: usize) -> ThickTestFamily {
        let amb = Ambient::nonzero(GroundSet::prime_field(p).unwrap()).unwrap();
        ThickTestFamily::from_spec(&amb, &ThickFamilySpec::subsets(width)).unwrap()
    }

    #[test]
    fn monochrome_succeeds() {
        let g = GroundSet::prime_field(13).unwrap();
        let c = Coloring::monochrome(g);
        let s = walk_theorem_m2(&c, &WalkParams::default(), 1, &family(13, 1)).unwrap();
        assert_eq!(s.color, 0);
        // A_2 loses the one x with x + y = 0
        assert_eq!(s.xs.len(), 11);
        check_trace(&s.trace, &c).unwrap();
    }

    #[test]
    fn short_induction_is_rejected() {
        let g = GroundSet::prime_field(13).unwrap();
        let c = Coloring::monochrome(g);
        let params = WalkParams {
            n: 1,
            ..WalkParams::default()
        };
        let err = walk_theorem_m2(&c, &params, 1, &family(13, 1)).unwrap_err();
        assert!(matches!(err.failure, WalkFailure::Precondition(_)));
        let params = WalkParams {
            s: Some(0),
            ..WalkParams::default()
        };
        let err = walk_theorem_m2(&c, &params, 1, &family(13, 1)).unwrap_err();
        assert!(matches!(err.failure, WalkFailure::Precondition(_)));
    }

    #[test]
    fn interval_is_rejected() {
        let c = Coloring::monochrome(GroundSet::interval(1, 10).unwrap());
        let err = walk_theorem_m2(&c, &WalkParams::default(), 1, &family(13, 1)).unwrap_err();
        assert!(matches!(err.failure, WalkFailure::Precondition(_)));
    }

    #[test]
    fn random_three_colorings_are_sound() {
        let g = GroundSet::prime_field(53).unwrap();
        let fam = family(53, 1);
        let quad = builtin_template(Builtin::Quad, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut wins = 0;
        for _ in 0..20 {
            let c = Coloring::random(g, 3, &mut rng).unwrap();
            match walk_theorem_m2(&c, &WalkParams::default(), 1, &fam) {
                Ok(s) => {
                    check_trace(&s.trace, &c).unwrap();
                    let found = find_instances(&c, &quad, None);
                    for x in &s.xs {
                        let want = vec![x.clone(), s.quadruple[1].clone()];
                        assert!(found
                            .iter()
                            .any(|(i, m)| i.assignment == want && *m == s.color));
                    }
                    wins += 1;
                }
                Err(e) => assert!(
                    !matches!(e.failure, WalkFailure::FinalVerificationFailure(_)),
                    "{e}"
                ),
            }
        }
        assert!(wins > 0);
    }

    #[test]
    fn deterministic_and_tamper_evident() {
        let g = GroundSet::prime_field(53).unwrap();
        let fam = family(53, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (c, s) = loop {
            let c = Coloring::random(g, 3, &mut rng).unwrap();
            if let Ok(s) = walk_theorem_m2(&c, &WalkParams::default(), 1, &fam) {
                break (c, s);
            }
        };
        assert_eq!(
            walk_theorem_m2(&c, &WalkParams::default(), 1, &fam).unwrap(),
            s
        );

        let mut bad = s.trace.clone();
        bad.steps[0].density = Rational::one();
        assert!(check_trace(&bad, &c).is_err());
        let mut bad = s.trace.clone();
        let tr = bad.steps[0].transition.as_mut().unwrap();
        tr.y = g.add(&tr.y, &Rational::one());
        assert!(check_trace(&bad, &c).is_err());
        let mut bad = s.trace.clone();
        bad.final_step.as_mut().unwrap().m = (s.color + 1) % 3;
        assert!(check_trace(&bad, &c).is_err());
    }
}
