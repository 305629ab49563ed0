//! Evaluating templates at concrete assignments.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::OutOfGround;
use crate::ground::GroundSet;
use crate::rational::Rational;
use crate::template::{PatternTemplate, TermExpr};

/// Evaluates `expr` with the ground's arithmetic.
///
/// Every subterm that mentions a variable must stay inside the ground;
/// constant-only subterms are coefficients and are only required to have a
/// value in the ground's number system. Panics if `assignment` is shorter
/// than the largest variable index.
pub fn eval_term(
    expr: &TermExpr,
    assignment: &[Rational],
    ground: &GroundSet,
) -> Result<Rational, OutOfGround> {
    eval_inner(expr, assignment, ground).map(|(v, _)| v)
}

fn eval_inner(
    expr: &TermExpr,
    assignment: &[Rational],
    ground: &GroundSet,
) -> Result<(Rational, bool), OutOfGround> {
    let (value, has_var) = match expr {
        TermExpr::Var(i) => (assignment[*i].clone(), true),
        TermExpr::Const(c) => (ground.embed(c).ok_or(OutOfGround)?, false),
        TermExpr::Add(a, b) | TermExpr::Mul(a, b) => {
            let (x, vx) = eval_inner(a, assignment, ground)?;
            let (y, vy) = eval_inner(b, assignment, ground)?;
            let v = if matches!(expr, TermExpr::Add(..)) {
                ground.add(&x, &y)
            } else {
                ground.mul(&x, &y)
            };
            (v, vx || vy)
        }
    };
    if has_var && !ground.contains(&value) {
        return Err(OutOfGround);
    }
    Ok((value, has_var))
}

/// A template evaluated at an assignment, with every check passed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    pub assignment: Vec<Rational>,
    pub term_values: Vec<Rational>,
}

impl Instance {
    /// The distinct term values, sorted.
    pub fn value_set(&self) -> Vec<Rational> {
        let mut v = self.term_values.clone();
        v.sort();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum Rejection {
    #[error("assignment has {got} values, template has {expected} variables")]
    WrongLength { expected: usize, got: usize },
    #[error("a term value left the ground set")]
    OutOfGround,
    #[error("variable x{0} must be nonzero")]
    ZeroViolation(usize),
    #[error("term values are not pairwise distinct")]
    DistinctnessViolation,
}

pub fn instantiate(
    template: &PatternTemplate,
    assignment: &[Rational],
    ground: &GroundSet,
) -> Result<Instance, Rejection> {
    if assignment.len() != template.num_vars() {
        return Err(Rejection::WrongLength {
            expected: template.num_vars(),
            got: assignment.len(),
        });
    }
    if let Some(&v) = template
        .nonzero_vars()
        .iter()
        .find(|&&v| !ground.is_nonzero(&assignment[v]))
    {
        return Err(Rejection::ZeroViolation(v));
    }
    let term_values = template
        .terms()
        .iter()
        .map(|t| {
            eval_term(t, assignment, ground)
                .ok()
                .filter(|v| ground.contains(v))
        })
        .collect::<Option<Vec<_>>>()
        .ok_or(Rejection::OutOfGround)?;
    if template.require_distinct() {
        let distinct: HashSet<&Rational> = term_values.iter().collect();
        if distinct.len() != term_values.len() {
            return Err(Rejection::DistinctnessViolation);
        }
    }
    Ok(Instance {
        assignment: assignment.to_vec(),
        term_values,
    })
}
