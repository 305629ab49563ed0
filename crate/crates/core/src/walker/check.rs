use std::collections::BTreeSet;

use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::search::Coloring;

use super::derived::in_derived_class;
use super::theorem::WalkTrace;

/// Replays a walk trace with plain field arithmetic: every recorded set,
/// density, shift and final color claim is recomputed from the coloring.
pub fn check_trace(trace: &WalkTrace, coloring: &Coloring) -> Result<(), String> {
    let ground = coloring.ground();
    if ground != (GroundSet::PrimeField { p: trace.p }) {
        return Err("trace belongs to another field".into());
    }
    let p = trace.p as i64;
    let g = ground;
    let one = Rational::one();
    let nonzero = |v: &Rational| g.contains(v) && g.is_nonzero(v);
    let color_in = |v: &Rational, m: usize| nonzero(v) && coloring.color_of(v) == Some(m);
    let in_d = |x: &Rational, t| in_derived_class(x, t, &trace.cover_ys, &trace.f, coloring);
    let set = |v: &[Rational]| v.iter().cloned().collect::<BTreeSet<Rational>>();
    let inv = |v: &Rational| g.inverse(v).ok_or_else(|| format!("{v} has no inverse"));

    if trace.steps.is_empty() {
        return Err("trace has no steps".into());
    }
    let mut ys: Vec<Rational> = Vec::new();
    for (idx, step) in trace.steps.iter().enumerate() {
        let j = idx + 1;
        if step.j != j {
            return Err(format!("step {idx} is labelled {}", step.j));
        }
        if step.density != Rational::new(step.a.len() as i64, p).expect("p > 0") {
            return Err(format!("step {j}: density does not match |A|"));
        }
        if set(&step.a).len() != step.a.len() || !step.a.iter().all(nonzero) {
            return Err(format!("step {j}: A has repeats or zero"));
        }
        let prod = ys.iter().fold(one.clone(), |acc, y| g.mul(&acc, y));
        if let Some(bad) = step.a.iter().find(|x| !in_d(&g.mul(x, &prod), &step.tuple)) {
            return Err(format!(
                "step {j}: {bad} * y_1..y_(j-1) is outside its derived color"
            ));
        }
        let Some(tr) = &step.transition else {
            if idx + 1 != trace.steps.len() {
                return Err(format!("step {j} has no transition"));
            }
            continue;
        };
        let next = trace
            .steps
            .get(idx + 1)
            .ok_or(format!("step {j} leads nowhere"))?;

        // Q_j over the inverted shifts, since D places x in f_m * C_m
        let mut q = BTreeSet::new();
        for f in &trace.f {
            for i in 1..=j {
                let num = ys[i - 1..j - 1]
                    .iter()
                    .fold(f.clone(), |acc, y| g.mul(&acc, y));
                let den = ys[..i - 1]
                    .iter()
                    .fold(one.clone(), |acc, y| g.mul(&acc, y));
                q.insert(g.mul(&num, &inv(&den)?));
            }
        }
        if q != set(&tr.q) || tr.q.len() > trace.s_bound {
            return Err(format!(
                "step {j}: Q_j differs from its definition or exceeds s"
            ));
        }
        if !tr.s_set.contains(&tr.y) {
            return Err(format!("step {j}: y_j is not in the recorded S set"));
        }
        let group = trace.cover_ys.get(tr.s_label).ok_or("bad group label")?;
        if tr.s_label != step.tuple.l || !group.iter().any(|&m| color_in(&tr.y, m)) {
            return Err(format!(
                "step {j}: y_j is outside the thick union of its group"
            ));
        }
        let a = set(&step.a);
        let a_prime = set(&tr.a_prime);
        let expected: BTreeSet<Rational> = a
            .iter()
            .filter(|x| q.iter().all(|q| a.contains(&g.add(x, &g.mul(q, &tr.y)))))
            .cloned()
            .collect();
        if expected != a_prime {
            return Err(format!("step {j}: A' is not the shift intersection"));
        }
        let half = Rational::new(1, 2 * p).expect("p > 0");
        let d_prime = Rational::new(a_prime.len() as i64, p).expect("p > 0");
        if d_prime <= tr.alpha_prime || &d_prime - &half != tr.alpha_prime {
            return Err(format!("step {j}: alpha' is inconsistent with |A'|"));
        }
        ys.push(tr.y.clone());
        if tr.product != ys.iter().fold(one.clone(), |acc, y| g.mul(&acc, y)) {
            return Err(format!("step {j}: recorded product is wrong"));
        }
        if !set(&next.a).is_subset(&a_prime) {
            return Err(format!("step {}: A is not inside the previous A'", j + 1));
        }
        if tr.properties != [true; 3] {
            return Err(format!("step {j}: recorded properties are not all true"));
        }
    }

    let fin = trace.final_step.as_ref().ok_or("trace has no final step")?;
    let (i, j) = (fin.i, fin.j);
    if !(1 <= i && i < j && j <= trace.steps.len()) {
        return Err("final indices out of range".into());
    }
    let (ti, tj) = (&trace.steps[i - 1].tuple, &trace.steps[j - 1].tuple);
    if ti != tj || ti.l != fin.l {
        return Err("final derived colors differ".into());
    }
    let y = ys[i - 1..j - 1]
        .iter()
        .fold(one.clone(), |acc, y| g.mul(&acc, y));
    if y != fin.y || !trace.cover_ys[fin.l].contains(&fin.m) || !color_in(&y, fin.m) {
        return Err("final y has the wrong value or color".into());
    }
    if trace.f.get(ti.f[fin.m]) != Some(&fin.f_m) {
        return Err("final shift f_m does not match the tuple".into());
    }
    let head = ys[..i - 1]
        .iter()
        .fold(one.clone(), |acc, y| g.mul(&acc, y));
    let scale = g.mul(&head, &inv(&fin.f_m)?);
    let xs: Vec<Rational> = trace.steps[j - 1]
        .a
        .iter()
        .map(|x| g.mul(x, &scale))
        .collect();
    if xs != fin.xs || xs.is_empty() {
        return Err("final x values do not match A_j".into());
    }
    for x in &xs {
        for v in [x.clone(), y.clone(), g.mul(x, &y), g.add(x, &y)] {
            if !color_in(&v, fin.m) {
                return Err(format!("x = {x}: {v} does not have color {}", fin.m));
            }
        }
    }
    let x = &xs[0];
    if fin.quadruple != [x.clone(), y.clone(), g.mul(x, &y), g.add(x, &y)] {
        return Err("recorded quadruple is wrong".into());
    }
    Ok(())
}
