//! Finding and counting monochromatic instances, CNF encoding, and the
//! avoidance and threshold searches built on them.

mod avoid;
mod cnf;
mod coloring;
mod compiled;
mod dpll;

pub use avoid::{
    avoidance_search, field_threshold, threshold_scan, AvoidanceResult, ExternalSolver,
    FieldThresholdRow, Method, SearchError, SearchOptions, ThresholdRow, ThresholdTable, Verdict,
};
pub use cnf::{encode_cnf, encode_cnf_with_threads, parse_solver_output, CnfFormula, SolverOutput};
pub use coloring::{Coloring, ColoringError, MAX_COLORS};
pub use compiled::{CompiledTemplate, RawInstance};
pub use dpll::{satisfies, DpllSolver, SolveOutcome, SolverStats};

use serde::{Deserialize, Serialize};

use crate::instance::{instantiate, Instance};
use crate::rational::Rational;
use crate::template::PatternTemplate;

/// Monochromatic instances of `template` under `coloring`, in lexicographic
/// order of the assignment, with their common color.
pub fn find_instances(
    coloring: &Coloring,
    template: &PatternTemplate,
    limit: Option<usize>,
) -> Vec<(Instance, usize)> {
    let compiled = CompiledTemplate::new(template, coloring.ground());
    let mono = compiled.iter().filter_map(|raw| {
        monochrome_color(coloring, &raw.values).map(|c| (compiled.to_instance(&raw), c))
    });
    match limit {
        Some(l) => mono.take(l).collect(),
        None => mono.collect(),
    }
}

fn monochrome_color(coloring: &Coloring, positions: &[u32]) -> Option<usize> {
    let first = coloring.color_at(*positions.first()? as usize);
    positions
        .iter()
        .all(|&p| coloring.color_at(p as usize) == first)
        .then_some(first)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonochromaticCounts {
    pub per_color: Vec<u64>,
    pub total: u64,
}

/// Counts monochromatic instances as ordered assignments.
pub fn count_monochromatic(coloring: &Coloring, template: &PatternTemplate) -> MonochromaticCounts {
    let compiled = CompiledTemplate::new(template, coloring.ground());
    let mut per_color = vec![0u64; coloring.num_colors()];
    for raw in compiled.all_instances() {
        if let Some(c) = monochrome_color(coloring, &raw.values) {
            per_color[c] += 1;
        }
    }
    let total = per_color.iter().sum();
    MonochromaticCounts { per_color, total }
}

/// Independent check used as a verification gate by the structural code:
/// instantiates `template` at `assignment` with the reference evaluator and
/// returns the common color of the term values.
pub fn verify_monochromatic(
    coloring: &Coloring,
    template: &PatternTemplate,
    assignment: &[Rational],
) -> Option<usize> {
    let inst = instantiate(template, assignment, &coloring.ground()).ok()?;
    let colors: Vec<usize> = inst
        .term_values
        .iter()
        .map(|v| coloring.color_of(v))
        .collect::<Option<_>>()?;
    let first = *colors.first()?;
    colors.iter().all(|&c| c == first).then_some(first)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::GroundSet;
    use crate::template::{builtin_template, Builtin};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quad() -> PatternTemplate {
        builtin_template(Builtin::Quad, None).unwrap()
    }

    #[test]
    fn monochrome_interval_contains_two_three() {
        let c = Coloring::monochrome(GroundSet::interval(1, 6).unwrap());
        let found = find_instances(&c, &quad(), None);
        let two_three = found
            .iter()
            .find(|(i, _)| i.assignment == [Rational::from(2), Rational::from(3)])
            .expect("(2,3) instance");
        assert_eq!(two_three.0.term_values, [2, 3, 6, 5].map(Rational::from));
    }

    #[test]
    fn red_class_instance() {
        let g = GroundSet::interval(1, 10).unwrap();
        let c = Coloring::from_fn(g, 2, |v| {
            usize::from(![2, 3, 5, 6].contains(&v.to_i64().unwrap()))
        })
        .unwrap();
        let found = find_instances(&c, &quad(), None);
        assert!(found
            .iter()
            .any(|(i, col)| *col == 0 && i.assignment == [Rational::from(2), Rational::from(3)]));
        assert_eq!(
            verify_monochromatic(&c, &quad(), &[2.into(), 3.into()]),
            Some(0)
        );
        assert_eq!(
            verify_monochromatic(&c, &quad(), &[1.into(), 3.into()]),
            None
        );
    }

    #[test]
    fn nothing_fits_in_high_interval() {
        let c = Coloring::monochrome(GroundSet::interval(9, 10).unwrap());
        assert!(find_instances(&c, &quad(), None).is_empty());
    }

    #[test]
    fn limit_truncates_in_order() {
        let c = Coloring::monochrome(GroundSet::interval(1, 30).unwrap());
        let all = find_instances(&c, &quad(), None);
        let some = find_instances(&c, &quad(), Some(3));
        assert_eq!(&all[..3], &some[..]);
    }

    #[test]
    fn monochrome_field_counts() {
        for p in [5u64, 11] {
            let c = Coloring::monochrome(GroundSet::prime_field(p).unwrap());
            let counts = count_monochromatic(&c, &quad());
            assert_eq!(counts.total, (p - 1) * (p - 1));
            assert_eq!(counts.per_color, [(p - 1) * (p - 1)]);
        }
    }

    /// Brute force over the 36 ordered nonzero pairs of F_7 with the
    /// residue coloring (0 joins the residues).
    #[test]
    fn residue_coloring_of_f7() {
        let residues = [0i64, 1, 2, 4];
        let color = |v: i64| usize::from(!residues.contains(&v));
        let mut expected = [0u64; 2];
        for x in 1..7i64 {
            for y in 1..7i64 {
                let vals = [x, y, x * y % 7, (x + y) % 7];
                let c = color(vals[0]);
                if vals.iter().all(|&v| color(v) == c) {
                    expected[c] += 1;
                }
            }
        }
        let g = GroundSet::prime_field(7).unwrap();
        let c = Coloring::from_fn(g, 2, |v| color(v.to_i64().unwrap())).unwrap();
        let counts = count_monochromatic(&c, &quad());
        assert_eq!(counts.per_color, expected);
        assert_eq!(counts.total, expected.iter().sum::<u64>());
    }

    #[test]
    fn counting_matches_find_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for g in ["fp:13", "int:1..40", "qgrid:4/3"] {
            let g: GroundSet = g.parse().unwrap();
            for _ in 0..5 {
                let c = Coloring::random(g, 2, &mut rng).unwrap();
                let counts = count_monochromatic(&c, &quad());
                assert_eq!(
                    counts.total as usize,
                    find_instances(&c, &quad(), None).len()
                );
            }
        }
    }
}
