//! CNF encoding of "this n-coloring avoids every monochromatic instance".

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::template::PatternTemplate;

use super::compiled::CompiledTemplate;

/// A CNF formula over variables `x_{e,c}` ("element e gets color c").
///
/// Variable ids are dense in `1..=num_variables` and numbered element-major,
/// color-minor: `id(e, c) = e * n + c + 1` with `e` the position of the
/// element in ground enumeration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_variables: usize,
    pub clauses: Vec<Vec<i32>>,
    pub num_colors: usize,
    /// `variable_meaning[id - 1] = (element, color)`.
    pub variable_meaning: Vec<(Rational, usize)>,
    /// Number of distinct instance element sets that produced clauses.
    pub instance_sets: usize,
}

impl CnfFormula {
    pub fn var(&self, element_pos: usize, color: usize) -> i32 {
        (element_pos * self.num_colors + color + 1) as i32
    }

    /// True when the template has no instance in the ground, so the formula
    /// only says "every element has exactly one color".
    pub fn is_degenerate(&self) -> bool {
        self.instance_sets == 0
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = String::with_capacity(self.clauses.len() * 16);
        writeln!(out, "p cnf {} {}", self.num_variables, self.clauses.len()).unwrap();
        for c in &self.clauses {
            for l in c {
                write!(out, "{l} ").unwrap();
            }
            out.push_str("0\n");
        }
        out
    }

    /// Decodes a model (indexed by variable id - 1) into a color per element.
    /// `None` if some element has no true color variable.
    pub fn decode(&self, model: &[bool]) -> Option<Vec<u8>> {
        let elements = self.num_variables / self.num_colors.max(1);
        (0..elements)
            .map(|e| {
                (0..self.num_colors)
                    .find(|&c| {
                        model
                            .get(self.var(e, c) as usize - 1)
                            .copied()
                            .unwrap_or(false)
                    })
                    .map(|c| c as u8)
            })
            .collect()
    }
}

/// Encodes avoidance of `template` by an `n`-coloring of `ground`.
///
/// Clause order: for each element, its at-least-one clause followed by its
/// pairwise at-most-one clauses; then, for each instance in enumeration
/// order whose set of distinct term values has not been seen before, one
/// clause per color forbidding that set from being monochromatic.
pub fn encode_cnf(ground: GroundSet, n: usize, template: &PatternTemplate) -> CnfFormula {
    let compiled = CompiledTemplate::new(template, ground);
    encode_from_sets(&compiled, n, instance_sets(&compiled))
}

/// [`encode_cnf`] with instance enumeration running on a dedicated pool of
/// `threads` workers. Output is identical for every thread count.
pub fn encode_cnf_with_threads(
    ground: GroundSet,
    n: usize,
    template: &PatternTemplate,
    threads: usize,
) -> CnfFormula {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| encode_cnf(ground, n, template))
}

/// Distinct element sets of all valid instances, first occurrence order.
pub(crate) fn instance_sets(compiled: &CompiledTemplate) -> Vec<Vec<u32>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for raw in compiled.all_instances() {
        let set = raw.element_set();
        if seen.insert(set.clone()) {
            out.push(set);
        }
    }
    out
}

fn encode_from_sets(compiled: &CompiledTemplate, n: usize, sets: Vec<Vec<u32>>) -> CnfFormula {
    let elements = compiled.index().elements();
    let var = |e: usize, c: usize| (e * n + c + 1) as i32;
    let mut clauses = Vec::new();
    for e in 0..elements.len() {
        clauses.push((0..n).map(|c| var(e, c)).collect());
        for a in 0..n {
            for b in a + 1..n {
                clauses.push(vec![-var(e, a), -var(e, b)]);
            }
        }
    }
    for set in &sets {
        for c in 0..n {
            clauses.push(set.iter().map(|&e| -var(e as usize, c)).collect());
        }
    }
    let variable_meaning = elements
        .iter()
        .flat_map(|e| (0..n).map(move |c| (e.clone(), c)))
        .collect();
    CnfFormula {
        num_variables: elements.len() * n,
        clauses,
        num_colors: n,
        variable_meaning,
        instance_sets: sets.len(),
    }
}

/// What an external solver reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolverOutput {
    Satisfiable(Vec<bool>),
    Unsatisfiable,
}

/// Parses competition-format solver output: an `s SATISFIABLE` or
/// `s UNSATISFIABLE` line and, for satisfiable results, `v` lines listing
/// literals terminated by `0`.
pub fn parse_solver_output(text: &str, num_variables: usize) -> Result<SolverOutput, String> {
    let mut status = None;
    let mut model = vec![false; num_variables];
    let mut terminated = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("s ") {
            status = Some(match rest.trim() {
                "SATISFIABLE" => true,
                "UNSATISFIABLE" => false,
                other => return Err(format!("line {}: unknown status `{other}`", lineno + 1)),
            });
        } else if let Some(rest) = line.strip_prefix('v') {
            for tok in rest.split_whitespace() {
                let lit: i64 = tok
                    .parse()
                    .map_err(|_| format!("line {}: bad literal `{tok}`", lineno + 1))?;
                if lit == 0 {
                    terminated = true;
                    continue;
                }
                let v = lit.unsigned_abs() as usize;
                if v == 0 || v > num_variables {
                    return Err(format!("line {}: variable {v} out of range", lineno + 1));
                }
                model[v - 1] = lit > 0;
            }
        }
    }
    match status {
        Some(true) if !terminated => Err("model is missing its terminating 0".into()),
        Some(true) => Ok(SolverOutput::Satisfiable(model)),
        Some(false) => Ok(SolverOutput::Unsatisfiable),
        None => Err("no `s` status line".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::{builtin_template, Builtin};

    #[test]
    fn schur_on_one_two() {
        let schur = builtin_template(Builtin::Schur, None).unwrap();
        let f = encode_cnf(GroundSet::interval(1, 2).unwrap(), 2, &schur);
        // Only (1,1) -> {1,1,2} is an instance.
        assert_eq!(f.num_variables, 4);
        assert_eq!(f.instance_sets, 1);
        assert_eq!(
            f.clauses,
            vec![
                vec![1, 2],
                vec![-1, -2],
                vec![3, 4],
                vec![-3, -4],
                vec![-1, -3],
                vec![-2, -4]
            ]
        );
        assert_eq!(
            f.to_dimacs(),
            "p cnf 4 6\n1 2 0\n-1 -2 0\n3 4 0\n-3 -4 0\n-1 -3 0\n-2 -4 0\n"
        );
    }

    #[test]
    fn three_colors_pairwise_amo() {
        let schur = builtin_template(Builtin::Schur, None).unwrap();
        let f = encode_cnf(GroundSet::interval(1, 2).unwrap(), 3, &schur);
        assert_eq!(
            &f.clauses[..4],
            &[vec![1, 2, 3], vec![-1, -2], vec![-1, -3], vec![-2, -3]]
        );
        assert_eq!(f.variable_meaning[4], (Rational::from(2), 1));
    }

    #[test]
    fn degenerate_formula_is_flagged() {
        let quad = builtin_template(Builtin::Quad, None).unwrap();
        let f = encode_cnf(GroundSet::interval(9, 10).unwrap(), 2, &quad);
        assert!(f.is_degenerate());
        assert_eq!(f.clauses.len(), 4);
    }

    #[test]
    fn coincident_values_give_one_clause_per_set() {
        // (2,3) and (3,2) have the same value set {2,3,5,6}.
        let quad = builtin_template(Builtin::Quad, None).unwrap();
        let f = encode_cnf(GroundSet::interval(2, 6).unwrap(), 2, &quad);
        assert_eq!(f.instance_sets, 2); // {2,4} and {2,3,5,6}
    }

    #[test]
    fn decode_model() {
        let schur = builtin_template(Builtin::Schur, None).unwrap();
        let f = encode_cnf(GroundSet::interval(1, 2).unwrap(), 2, &schur);
        assert_eq!(f.decode(&[true, false, false, true]), Some(vec![0, 1]));
        assert_eq!(f.decode(&[false, false, false, true]), None);
    }

    #[test]
    fn solver_output_parsing() {
        let sat = "c comment\ns SATISFIABLE\nv 1 -2 -3\nv 4 0\n";
        assert_eq!(
            parse_solver_output(sat, 4),
            Ok(SolverOutput::Satisfiable(vec![true, false, false, true]))
        );
        assert_eq!(
            parse_solver_output("s UNSATISFIABLE\n", 4),
            Ok(SolverOutput::Unsatisfiable)
        );
        assert!(parse_solver_output("v 1 0\n", 4).is_err());
        assert!(parse_solver_output("s SATISFIABLE\nv 1 9 0\n", 4).is_err());
        assert!(parse_solver_output("s SATISFIABLE\nv 1 x 0\n", 4).is_err());
        assert!(parse_solver_output("s SATISFIABLE\nv 1 2\n", 4).is_err());
        assert!(parse_solver_output("s MAYBE\n", 4).is_err());
    }
}
