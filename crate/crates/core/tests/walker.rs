use monopat::search::{verify_monochromatic, Coloring};
use monopat::structure::{Ambient, ThickFamilySpec, ThickTestFamily};
use monopat::walker::{check_trace, walk_claim_thick, walk_theorem_m2, WalkFailure, WalkParams};
use monopat::{builtin_template, Builtin, GroundSet, Rational};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family(p: u64, width: usize) -> ThickTestFamily {
    let amb = Ambient::nonzero(GroundSet::prime_field(p).unwrap()).unwrap();
    ThickTestFamily::from_spec(&amb, &ThickFamilySpec::subsets(width)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn walks_are_sound_and_deterministic(p in prop::sample::select(vec![31u64, 53]), n in 2usize..4, seed in any::<u64>()) {
        let g = GroundSet::prime_field(p).unwrap();
        let c = Coloring::random(g, n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let fam = family(p, 2);
        let params = WalkParams::default();
        let first = walk_theorem_m2(&c, &params, 2, &fam);
        let second = walk_theorem_m2(&c, &params, 2, &fam);
        prop_assert_eq!(&first, &second);
        let quad = builtin_template(Builtin::Quad, None).unwrap();
        match first {
            Ok(s) => {
                prop_assert_eq!(check_trace(&s.trace, &c), Ok(()));
                for x in &s.xs {
                    prop_assert_eq!(verify_monochromatic(&c, &quad, &[x.clone(), s.quadruple[1].clone()]), Some(s.color));
                }
            }
            Err(e) => prop_assert!(!matches!(e.failure, WalkFailure::FinalVerificationFailure(_)), "{:?}", e.failure),
        }
    }

    #[test]
    fn claim_successes_verify(seed in any::<u64>()) {
        let g = GroundSet::prime_field(31).unwrap();
        let c = Coloring::random(g, 2, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        if let Ok(s) = walk_claim_thick(&c, 1, &family(31, 2)) {
            let quad = builtin_template(Builtin::Quad, None).unwrap();
            prop_assert_eq!(verify_monochromatic(&c, &quad, &s.quadruple[..2]), Some(s.color));
        }
    }
}

#[test]
fn tampered_traces_are_rejected() {
    let g = GroundSet::prime_field(53).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fam = family(53, 2);
    let (c, s) = (0..50)
        .find_map(|_| {
            let c = Coloring::random(g, 3, &mut rng).unwrap();
            walk_theorem_m2(&c, &WalkParams::default(), 2, &fam)
                .ok()
                .map(|s| (c, s))
        })
        .expect("some walk succeeds");
    assert_eq!(check_trace(&s.trace, &c), Ok(()));

    let mut t = s.trace.clone();
    t.steps[0].density = &t.steps[0].density + &Rational::new(1, 53).unwrap();
    assert!(check_trace(&t, &c).is_err());

    let mut t = s.trace.clone();
    let fin = t.final_step.as_mut().unwrap();
    fin.y = &fin.y + &Rational::one();
    assert!(check_trace(&t, &c).is_err());
}

#[test]
fn monochrome_field_walk_reports_every_x() {
    let g = GroundSet::prime_field(13).unwrap();
    let c = Coloring::monochrome(g);
    let s = walk_theorem_m2(&c, &WalkParams::default(), 2, &family(13, 2)).unwrap();
    assert_eq!(check_trace(&s.trace, &c), Ok(()));
    let densities: Vec<Rational> = s.trace.steps.iter().map(|st| st.density.clone()).collect();
    assert!(densities.iter().all(|d| !d.is_zero()));
}
