//! One line per headline criterion; exits nonzero if any fails.

use std::collections::BTreeSet;
use std::time::Instant;

use monopat::search::{
    avoidance_search, count_monochromatic, encode_cnf_with_threads, find_instances, Coloring,
    Method, SearchOptions,
};
use monopat::structure::{
    cover_decomposition, find_ipr_witness, fs_set, is_thick, lemma_prod_construct, Ambient,
    ThickFamilySpec, ThickTestFamily,
};
use monopat::walker::{check_trace, walk_theorem_m2, WalkFailure, WalkParams};
use monopat::{builtin_template, Builtin, GroundSet, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn r(v: i64) -> Rational {
    Rational::from(v)
}

#[derive(Clone, Copy)]
enum Pat {
    Schur,
    Moreira,
    Quad,
}

/// Term values of the pattern at `(x, y)` on `[1..n]`, if all lie inside.
fn terms(pat: Pat, x: i64, y: i64, n: i64) -> Option<Vec<i64>> {
    let t = match pat {
        Pat::Schur => vec![x, y, x + y],
        Pat::Moreira => vec![x, x * y, x + y],
        Pat::Quad => vec![x, y, x * y, x + y],
    };
    t.iter().all(|&v| (1..=n).contains(&v)).then_some(t)
}

/// Whether the 2-coloring `mask` of `[1..n]` (bit v-1 is the color of v)
/// has a monochromatic instance.
fn has_mono(pat: Pat, n: i64, mask: u32) -> bool {
    let color = |v: i64| mask >> (v - 1) & 1;
    (1..=n).any(|x| {
        (1..=n).any(|y| {
            terms(pat, x, y, n).is_some_and(|t| t.iter().all(|&v| color(v) == color(t[0])))
        })
    })
}

fn brute_force_avoidable(pat: Pat, n: i64) -> bool {
    (0..1u32 << n).any(|m| !has_mono(pat, n, m))
}

fn builtin(pat: Pat) -> Builtin {
    match pat {
        Pat::Schur => Builtin::Schur,
        Pat::Moreira => Builtin::Moreira,
        Pat::Quad => Builtin::Quad,
    }
}

fn coloring_mask(c: &Coloring) -> u32 {
    c.colors()
        .iter()
        .enumerate()
        .fold(0, |m, (i, &col)| m | (u32::from(col) << i))
}

fn forced_bound(lo: i64, hi: i64, limit_s: f64) -> Outcome {
    let g = GroundSet::interval(lo, hi).unwrap();
    let q = builtin_template(Builtin::Quad, None).unwrap();
    let t = Instant::now();
    match avoidance_search(g, 2, &q, Method::Sat, &SearchOptions::default()) {
        Ok(res) => {
            let s = t.elapsed().as_secs_f64();
            outcome(
                res.is_forced() && s < limit_s,
                format!(
                    "[{lo}..{hi}] {} in {s:.2} s (limit {limit_s} s)",
                    res.verdict().name()
                ),
            )
        }
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn small_range() -> Outcome {
    let q = builtin_template(Builtin::Quad, None).unwrap();
    let mut largest = 0;
    for n in 1..=12 {
        let want = brute_force_avoidable(Pat::Quad, n);
        if want {
            largest = n;
        }
        for method in [Method::Exhaustive, Method::Sat] {
            let g = GroundSet::interval(1, n).unwrap();
            let res = avoidance_search(g, 2, &q, method, &SearchOptions::default()).unwrap();
            if res.is_forced() == want {
                return outcome(
                    false,
                    format!("N = {n}, {}: disagrees with brute force", method.name()),
                );
            }
            if let Some(c) = res.coloring() {
                if has_mono(Pat::Quad, n, coloring_mask(c)) {
                    return outcome(false, format!("N = {n}: returned coloring is not avoiding"));
                }
            }
        }
    }
    outcome(
        true,
        format!("largest N <= 12 with an avoiding 2-coloring: {largest}; both methods agree"),
    )
}

fn monochrome_counts() -> Outcome {
    let q = builtin_template(Builtin::Quad, None).unwrap();
    for p in [5u64, 7, 11, 101] {
        let c = Coloring::monochrome(GroundSet::prime_field(p).unwrap());
        let got = count_monochromatic(&c, &q).total;
        if got != (p - 1) * (p - 1) {
            return outcome(false, format!("p = {p}: {got} != {}", (p - 1) * (p - 1)));
        }
    }
    outcome(true, "(p-1)^2 for p in {5, 7, 11, 101}")
}

fn random_field_counts() -> Outcome {
    let p = 101u64;
    let g = GroundSet::prime_field(p).unwrap();
    let q = builtin_template(Builtin::Quad, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut min = u64::MAX;
    for trial in 0..100 {
        let c = Coloring::random(g, 2, &mut rng).unwrap();
        let col = |v: u64| c.colors()[v as usize];
        let mut want = [0u64; 2];
        for x in 1..p {
            for y in 1..p {
                let t = [x, y, x * y % p, (x + y) % p];
                if t.iter().all(|&v| col(v) == col(x)) {
                    want[col(x) as usize] += 1;
                }
            }
        }
        let got = count_monochromatic(&c, &q);
        if got.per_color != want {
            return outcome(
                false,
                format!("trial {trial}: {:?} != {want:?}", got.per_color),
            );
        }
        min = min.min(got.total);
    }
    outcome(
        min > 0,
        format!("100 colorings of F_101 match a direct recount; min count {min}"),
    )
}

fn field_ambient(p: u64) -> Ambient {
    Ambient::nonzero(GroundSet::prime_field(p).unwrap()).unwrap()
}

fn random_subset(amb: &Ambient, rng: &mut ChaCha8Rng, density: f64) -> Vec<Rational> {
    amb.values()
        .into_iter()
        .filter(|_| rng.gen_bool(density))
        .collect()
}

fn structure_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);

    // FS roundtrip on an interval ambient, where sums never wrap.
    let ig = GroundSet::interval(1, 200).unwrap();
    let iamb = Ambient::nonzero(ig).unwrap();
    let mut roundtrip = 0;
    for _ in 0..200 {
        let pool: Vec<i64> = (1..=30).filter(|_| rng.gen_bool(0.3)).collect();
        let pool = if pool.is_empty() { vec![1] } else { pool };
        let len = rng.gen_range(1..=3);
        let seq: Vec<Rational> = (0..len)
            .map(|_| r(pool[rng.gen_range(0..pool.len())]))
            .collect();
        let fs = fs_set(&seq, &ig).unwrap();
        let mut space: BTreeSet<Rational> = fs.clone();
        space.extend(seq.iter().cloned());
        let s = iamb
            .set_of(&fs.iter().cloned().collect::<Vec<_>>())
            .unwrap();
        let sp = iamb.set_of(&space.into_iter().collect::<Vec<_>>()).unwrap();
        if let Some(w) = find_ipr_witness(&s, len, &sp, &iamb) {
            if fs_set(&w.sequence, &ig).unwrap().is_subset(&fs) && w.rank() == len {
                roundtrip += 1;
            }
        }
    }

    // Translation closure in F_31.
    let p = 31u64;
    let fg = GroundSet::prime_field(p).unwrap();
    let famb = field_ambient(p);
    let mut translation = 0;
    let mut with_witness = 0;
    for _ in 0..200 {
        let s_vals = random_subset(&famb, &mut rng, 0.5);
        let rank = rng.gen_range(1..=3);
        let t = r(rng.gen_range(1..p as i64));
        let s = famb.set_of(&s_vals).unwrap();
        let ts_vals: Vec<Rational> = s_vals.iter().map(|v| fg.mul(v, &t)).collect();
        let ts: BTreeSet<Rational> = ts_vals.iter().cloned().collect();
        let tset = famb.set_of(&ts_vals).unwrap();
        match find_ipr_witness(&s, rank, &s, &famb) {
            Some(w) => {
                with_witness += 1;
                let tw: Vec<Rational> = w.sequence.iter().map(|v| fg.mul(v, &t)).collect();
                let ok = fs_set(&tw, &fg).unwrap().is_subset(&ts)
                    && find_ipr_witness(&tset, rank, &tset, &famb).is_some();
                translation += usize::from(ok);
            }
            None => {
                translation += usize::from(find_ipr_witness(&tset, rank, &tset, &famb).is_none())
            }
        }
    }

    // Cover postconditions, checked with modular arithmetic.
    let mut covers = 0;
    let mut cover_runs = 0;
    let mut cover_errors = Vec::new();
    for p in [7u64, 11, 13] {
        let g = GroundSet::prime_field(p).unwrap();
        let amb = field_ambient(p);
        let width = 2;
        let fam = ThickTestFamily::from_spec(&amb, &ThickFamilySpec::subsets(width)).unwrap();
        let fam_sets = fam.sets_as_values(&amb);
        for _ in 0..50 {
            cover_runs += 1;
            let n = rng.gen_range(2..=3);
            let c = Coloring::random(g, n, &mut rng).unwrap();
            let col = |v: u64| c.colors()[(v % p) as usize] as usize;
            let cover = match cover_decomposition(&c, width, &amb, &fam) {
                Ok(cv) => cv,
                Err(e) => {
                    cover_errors.push(e.to_string());
                    continue;
                }
            };
            let fvals: Vec<u64> = cover.f.iter().map(|f| f.to_i64().unwrap() as u64).collect();
            let inv = |a: u64| (1..p).find(|b| a * b % p == 1).unwrap();
            let thick_ok = cover.ys.iter().enumerate().all(|(l, ys)| {
                fam_sets
                    .iter()
                    .zip(&cover.thickness_certificates[l])
                    .all(|(set, a)| {
                        let a = a.to_i64().unwrap() as u64;
                        set.iter()
                            .all(|v| ys.contains(&col(a * v.to_i64().unwrap() as u64 % p)))
                    })
            });
            let covered = (1..p).all(|x| {
                cover.ys.iter().any(|ys| {
                    ys.iter()
                        .all(|&m| fvals.iter().any(|&f| col(x * inv(f) % p) == m))
                })
            });
            covers += usize::from(thick_ok && covered && fvals.len() <= (1 << n) * width);
        }
    }

    // Product families against an explicit chain enumeration.
    let p = 13u64;
    let g = GroundSet::prime_field(p).unwrap();
    let amb = field_ambient(p);
    let fam = ThickTestFamily::from_spec(&amb, &ThickFamilySpec::subsets(2)).unwrap();
    let (mut prods, mut prod_built, mut prod_failed) = (0, 0, 0);
    let mut families = 0;
    while families < 20 {
        let k: usize = rng.gen_range(1..=2);
        let ts: Vec<Vec<Rational>> = (0..k)
            .map(|_| random_subset(&amb, &mut rng, 0.85))
            .collect();
        let sets: Vec<_> = ts.iter().map(|t| amb.set_of(t).unwrap()).collect();
        if !sets.iter().all(|s| is_thick(s, &fam, &amb).is_some()) {
            continue;
        }
        families += 1;
        let columns = rng.gen_range(1..=3);
        let Ok(pf) = lemma_prod_construct(&sets, 1, columns, &amb, &fam) else {
            prod_failed += 1;
            continue;
        };
        prod_built += 1;
        let mut ok = true;
        for i in 0..columns {
            for j in i..columns {
                let len = j - i + 1;
                for code in 0..k.pow(len as u32) {
                    let labels: Vec<usize> = (0..len).map(|d| code / k.pow(d as u32) % k).collect();
                    let mut vals = vec![r(1)];
                    for (d, &l) in labels.iter().enumerate() {
                        vals = vals
                            .iter()
                            .flat_map(|a| pf.set(l, i + d).iter().map(move |b| g.mul(a, b)))
                            .collect();
                    }
                    ok &= vals.iter().all(|v| ts[labels[0]].contains(v));
                }
            }
        }
        prods += usize::from(ok);
    }

    let pass =
        roundtrip == 200 && translation == 200 && covers == cover_runs && prods == prod_built;
    let mut detail = format!(
        "roundtrip {roundtrip}/200, translation {translation}/200 ({with_witness} with witness), \
         cover {covers}/{cover_runs}, prod {prods}/{prod_built} built of 20 thick families ({prod_failed} construction failures)"
    );
    if !cover_errors.is_empty() {
        detail.push_str(&format!("; cover errors: {}", cover_errors.join("; ")));
    }
    outcome(pass, detail)
}

fn walker_soundness() -> Outcome {
    let quad = builtin_template(Builtin::Quad, None).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for p in [53u64, 101] {
        let g = GroundSet::prime_field(p).unwrap();
        let amb = field_ambient(p);
        let width = 2;
        let fam = ThickTestFamily::from_spec(&amb, &ThickFamilySpec::subsets(width)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(p);
        let (mut wins, mut density, mut other) = (0, 0, 0);
        for _ in 0..100 {
            let c = Coloring::random(g, 3, &mut rng).unwrap();
            match walk_theorem_m2(&c, &WalkParams::default(), width, &fam) {
                Ok(s) => {
                    let found = find_instances(&c, &quad, None);
                    let all_found = s.xs.iter().all(|x| {
                        found.iter().any(|(i, m)| {
                            *m == s.color && i.assignment == [x.clone(), s.quadruple[1].clone()]
                        })
                    });
                    pass &= check_trace(&s.trace, &c).is_ok() && all_found;
                    wins += 1;
                }
                Err(e) => match e.failure {
                    WalkFailure::FinalVerificationFailure(_) => pass = false,
                    WalkFailure::DensityFailure(_) => density += 1,
                    _ => other += 1,
                },
            }
        }
        parts.push(format!(
            "p = {p}: {wins}/100 succeeded, {density} density failures, {other} other"
        ));
    }
    outcome(
        pass,
        format!("{} (rate reported, not required)", parts.join("; ")),
    )
}

fn encoder_determinism() -> Outcome {
    let q = builtin_template(Builtin::Quad, None).unwrap();
    for g in [
        GroundSet::interval(1, 252).unwrap(),
        GroundSet::prime_field(101).unwrap(),
    ] {
        let a = encode_cnf_with_threads(g, 2, &q, 1).to_dimacs();
        let b = encode_cnf_with_threads(g, 2, &q, 1).to_dimacs();
        let c = encode_cnf_with_threads(g, 2, &q, 8).to_dimacs();
        if a != b || a != c {
            return outcome(false, format!("{g}: DIMACS differs"));
        }
    }
    outcome(
        true,
        "identical DIMACS across runs and 1 vs 8 threads on int:1..252 and fp:101",
    )
}

fn oracle_equivalence() -> Outcome {
    let mut checked = 0;
    for pat in [Pat::Schur, Pat::Moreira, Pat::Quad] {
        let t = builtin_template(builtin(pat), None).unwrap();
        for n in 1..=10 {
            let want = brute_force_avoidable(pat, n);
            for method in [Method::Exhaustive, Method::Sat] {
                let g = GroundSet::interval(1, n).unwrap();
                let res = avoidance_search(g, 2, &t, method, &SearchOptions::default()).unwrap();
                let ok = res.is_forced() != want
                    && res
                        .coloring()
                        .is_none_or(|c| !has_mono(pat, n, coloring_mask(c)));
                if !ok {
                    return outcome(
                        false,
                        format!("{} on [1..{n}] with {}", builtin(pat).name(), method.name()),
                    );
                }
                checked += 1;
            }
        }
    }
    outcome(
        true,
        format!("{checked} (template, N, method) cases agree with brute force"),
    )
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("graham-bound", || forced_bound(1, 252, 60.0)),
        ("hindman-bound", || forced_bound(2, 990, 600.0)),
        ("small-range-avoidance", small_range),
        ("monochrome-count", monochrome_counts),
        ("random-field-counts", random_field_counts),
        ("structure-suite", structure_suite),
        ("walker-soundness", walker_soundness),
        ("encoder-determinism", encoder_determinism),
        ("oracle-equivalence", oracle_equivalence),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
