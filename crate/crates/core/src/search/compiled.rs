//! Index-level evaluation of templates for the enumeration hot loops.
//!
//! Semantics are those of [`crate::instance::instantiate`]; the tests below
//! check the two against each other.

use rayon::prelude::*;

use crate::ground::{GroundIndex, GroundSet};
use crate::instance::{instantiate, Instance};
use crate::rational::Rational;
use crate::template::{PatternTemplate, TermExpr};

#[derive(Debug, Clone)]
enum Node {
    Var(usize),
    Const(Value),
    Add(Box<Node>, Box<Node>, bool),
    Mul(Box<Node>, Box<Node>, bool),
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i128),
    Exact(Rational),
    /// A constant with no residue in the field; poisons the term.
    Undefined,
}

#[derive(Debug, Clone, Copy)]
enum Mode {
    Field(u64),
    Int(i64, i64),
    Exact,
}

/// A template prepared for evaluation on ground positions. All valid
/// instances are described by their assignment positions and term-value
/// positions in the ground enumeration.
#[derive(Debug, Clone)]
pub struct CompiledTemplate {
    template: PatternTemplate,
    ground: GroundSet,
    index: GroundIndex,
    mode: Mode,
    terms: Vec<Node>,
    nonzero: Vec<bool>,
    /// Ground positions allowed for each variable.
    domains: Vec<Vec<u32>>,
}

/// A valid instance at the position level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawInstance {
    pub assignment: Vec<u32>,
    pub values: Vec<u32>,
}

impl RawInstance {
    /// Distinct value positions, sorted ascending.
    pub fn element_set(&self) -> Vec<u32> {
        let mut v = self.values.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn has_non_integer_const(e: &TermExpr) -> bool {
    match e {
        TermExpr::Var(_) => false,
        TermExpr::Const(c) => c.to_i64().is_none(),
        TermExpr::Add(a, b) | TermExpr::Mul(a, b) => {
            has_non_integer_const(a) || has_non_integer_const(b)
        }
    }
}

impl CompiledTemplate {
    pub fn new(template: &PatternTemplate, ground: GroundSet) -> Self {
        let mode = match ground {
            GroundSet::PrimeField { p } => Mode::Field(p),
            GroundSet::IntegerInterval { lo, hi }
                if !template.terms().iter().any(has_non_integer_const) =>
            {
                Mode::Int(lo, hi)
            }
            _ => Mode::Exact,
        };
        let terms = template
            .terms()
            .iter()
            .map(|t| compile(t, mode).0)
            .collect();
        let index = ground.index();
        let nonzero: Vec<bool> = (0..template.num_vars())
            .map(|v| template.nonzero_vars().contains(&v))
            .collect();
        let domains = nonzero
            .iter()
            .map(|&nz| {
                (0..index.len() as u32)
                    .filter(|&i| !nz || ground.is_nonzero(index.element(i as usize)))
                    .collect()
            })
            .collect();
        CompiledTemplate {
            template: template.clone(),
            ground,
            index,
            mode,
            terms,
            nonzero,
            domains,
        }
    }

    pub fn template(&self) -> &PatternTemplate {
        &self.template
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn index(&self) -> &GroundIndex {
        &self.index
    }

    /// Number of assignments in the enumeration space.
    pub fn space_size(&self) -> u128 {
        self.domains.iter().map(|d| d.len() as u128).product()
    }

    /// Evaluates the template at an assignment of ground positions. `None`
    /// when the assignment is rejected for any reason.
    pub fn evaluate(&self, assignment: &[u32]) -> Option<Vec<u32>> {
        for (v, &nz) in self.nonzero.iter().enumerate() {
            if nz
                && !self
                    .ground
                    .is_nonzero(self.index.element(assignment[v] as usize))
            {
                return None;
            }
        }
        let mut values = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let v = self.eval(t, assignment)?;
            values.push(self.position(&v)?);
        }
        if self.template.require_distinct() {
            let mut sorted = values.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return None;
            }
        }
        Some(values)
    }

    fn value_of(&self, pos: u32) -> Value {
        let e = self.index.element(pos as usize);
        match self.mode {
            Mode::Field(_) | Mode::Int(..) => {
                Value::Int(e.to_i64().expect("integer element") as i128)
            }
            Mode::Exact => Value::Exact(e.clone()),
        }
    }

    fn position(&self, v: &Value) -> Option<u32> {
        match (v, self.mode) {
            (Value::Int(x), Mode::Field(p)) => Some(x.rem_euclid(p as i128) as u32),
            (Value::Int(x), Mode::Int(lo, hi)) => {
                (lo as i128 <= *x && *x <= hi as i128).then(|| (*x - lo as i128) as u32)
            }
            (Value::Exact(r), _) => self.index.position(r).map(|p| p as u32),
            _ => None,
        }
    }

    fn in_ground(&self, v: &Value) -> bool {
        match (v, self.mode) {
            (Value::Int(_), Mode::Field(_)) => true,
            (Value::Int(x), Mode::Int(lo, hi)) => lo as i128 <= *x && *x <= hi as i128,
            (Value::Exact(r), _) => self.ground.contains(r),
            _ => false,
        }
    }

    fn eval(&self, node: &Node, a: &[u32]) -> Option<Value> {
        match node {
            Node::Var(i) => Some(self.value_of(a[*i])),
            Node::Const(Value::Undefined) => None,
            Node::Const(c) => Some(c.clone()),
            Node::Add(l, r, has_var) | Node::Mul(l, r, has_var) => {
                let x = self.eval(l, a)?;
                let y = self.eval(r, a)?;
                let is_add = matches!(node, Node::Add(..));
                let v = match (x, y, self.mode) {
                    (Value::Int(x), Value::Int(y), Mode::Field(p)) => {
                        let p = p as i128;
                        Value::Int(if is_add { (x + y) % p } else { (x * y) % p })
                    }
                    (Value::Int(x), Value::Int(y), _) => Value::Int(if is_add {
                        x.checked_add(y)?
                    } else {
                        x.checked_mul(y)?
                    }),
                    (Value::Exact(x), Value::Exact(y), _) => {
                        Value::Exact(if is_add { &x + &y } else { &x * &y })
                    }
                    _ => return None,
                };
                if *has_var && !self.in_ground(&v) {
                    return None;
                }
                Some(v)
            }
        }
    }

    /// Iterates valid instances in lexicographic order of the assignment.
    pub fn iter(&self) -> impl Iterator<Item = RawInstance> + '_ {
        AssignmentIter::new(&self.domains).filter_map(move |a| {
            self.evaluate(&a).map(|values| RawInstance {
                assignment: a,
                values,
            })
        })
    }

    /// All valid instances, in lexicographic order, computed in parallel over
    /// the first variable's domain. The result does not depend on the number
    /// of worker threads.
    pub fn all_instances(&self) -> Vec<RawInstance> {
        if self.domains.is_empty() {
            return Vec::new();
        }
        let rest = &self.domains[1..];
        self.domains[0]
            .par_iter()
            .map(|&first| {
                let mut out = Vec::new();
                for tail in AssignmentIter::new(rest) {
                    let mut a = Vec::with_capacity(tail.len() + 1);
                    a.push(first);
                    a.extend_from_slice(&tail);
                    if let Some(values) = self.evaluate(&a) {
                        out.push(RawInstance {
                            assignment: a,
                            values,
                        });
                    }
                }
                out
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }

    pub fn to_instance(&self, raw: &RawInstance) -> Instance {
        Instance {
            assignment: raw
                .assignment
                .iter()
                .map(|&i| self.index.element(i as usize).clone())
                .collect(),
            term_values: raw
                .values
                .iter()
                .map(|&i| self.index.element(i as usize).clone())
                .collect(),
        }
    }

    /// Cross-check of one assignment against the reference evaluator.
    pub fn agrees_with_reference(&self, assignment: &[u32]) -> bool {
        let values: Vec<Rational> = assignment
            .iter()
            .map(|&i| self.index.element(i as usize).clone())
            .collect();
        let reference = instantiate(&self.template, &values, &self.ground).ok();
        let fast = self.evaluate(assignment).map(|v| {
            v.iter()
                .map(|&i| self.index.element(i as usize).clone())
                .collect::<Vec<_>>()
        });
        reference.map(|r| r.term_values) == fast
    }
}

fn compile(e: &TermExpr, mode: Mode) -> (Node, bool) {
    match e {
        TermExpr::Var(i) => (Node::Var(*i), true),
        TermExpr::Const(c) => {
            let v = match mode {
                Mode::Field(p) => c
                    .to_residue(p)
                    .map(|r| Value::Int(r as i128))
                    .unwrap_or(Value::Undefined),
                Mode::Int(..) => Value::Int(c.to_i64().expect("integer constant") as i128),
                Mode::Exact => Value::Exact(c.clone()),
            };
            (Node::Const(v), false)
        }
        TermExpr::Add(a, b) | TermExpr::Mul(a, b) => {
            let (x, vx) = compile(a, mode);
            let (y, vy) = compile(b, mode);
            let hv = vx || vy;
            let node = if matches!(e, TermExpr::Add(..)) {
                Node::Add(Box::new(x), Box::new(y), hv)
            } else {
                Node::Mul(Box::new(x), Box::new(y), hv)
            };
            (node, hv)
        }
    }
}

/// Odometer over the product of the domains, last variable fastest.
struct AssignmentIter<'a> {
    domains: &'a [Vec<u32>],
    cursor: Vec<usize>,
    done: bool,
}

impl<'a> AssignmentIter<'a> {
    fn new(domains: &'a [Vec<u32>]) -> Self {
        let done = domains.iter().any(|d| d.is_empty());
        AssignmentIter {
            domains,
            cursor: vec![0; domains.len()],
            done,
        }
    }
}

impl Iterator for AssignmentIter<'_> {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.done {
            return None;
        }
        let item = self
            .cursor
            .iter()
            .zip(self.domains)
            .map(|(&c, d)| d[c])
            .collect();
        let mut k = self.cursor.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.cursor[k] += 1;
            if self.cursor[k] < self.domains[k].len() {
                break;
            }
            self.cursor[k] = 0;
        }
        Some(item)
    }
}
