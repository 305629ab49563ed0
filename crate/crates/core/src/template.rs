//! Term expressions and pattern templates.
//!
//! A template is a list of polynomial terms in a few variables. An instance
//! of the template is an assignment of ground elements to the variables; it
//! is monochromatic when every term value gets the same color.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ParseError;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermExpr {
    Var(usize),
    Const(Rational),
    Add(Box<TermExpr>, Box<TermExpr>),
    Mul(Box<TermExpr>, Box<TermExpr>),
}

impl TermExpr {
    pub fn var(i: usize) -> Self {
        TermExpr::Var(i)
    }

    pub fn constant(v: impl Into<Rational>) -> Self {
        TermExpr::Const(v.into())
    }

    pub fn add(a: TermExpr, b: TermExpr) -> Self {
        TermExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: TermExpr, b: TermExpr) -> Self {
        TermExpr::Mul(Box::new(a), Box::new(b))
    }

    /// Product of the given variables, left-nested. Panics on an empty range.
    pub fn product_of(vars: impl IntoIterator<Item = usize>) -> Self {
        vars.into_iter()
            .map(TermExpr::Var)
            .reduce(TermExpr::mul)
            .expect("empty product")
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            TermExpr::Var(i) => Some(*i),
            TermExpr::Const(_) => None,
            TermExpr::Add(a, b) | TermExpr::Mul(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn has_vars(&self) -> bool {
        self.max_var().is_some()
    }

    /// Replaces every `Var(i)` by `map(i)`.
    pub fn substitute(&self, map: &impl Fn(usize) -> TermExpr) -> TermExpr {
        match self {
            TermExpr::Var(i) => map(*i),
            TermExpr::Const(c) => TermExpr::Const(c.clone()),
            TermExpr::Add(a, b) => TermExpr::add(a.substitute(map), b.substitute(map)),
            TermExpr::Mul(a, b) => TermExpr::mul(a.substitute(map), b.substitute(map)),
        }
    }

    /// Canonical form used for deduplication: nested sums and products are
    /// flattened, constants folded, zero and unit constants dropped, and the
    /// operands sorted. Distributivity is not applied.
    pub fn normalize(&self) -> TermExpr {
        match self {
            TermExpr::Var(_) | TermExpr::Const(_) => self.clone(),
            TermExpr::Add(..) => {
                let mut ops = Vec::new();
                self.collect_operands(true, &mut ops);
                let mut constant = Rational::zero();
                let mut rest = Vec::new();
                for op in ops.iter().map(|e| e.normalize()) {
                    match op {
                        TermExpr::Const(c) => constant = &constant + &c,
                        other => rest.push(other),
                    }
                }
                rest.sort();
                if !constant.is_zero() || rest.is_empty() {
                    rest.insert(0, TermExpr::Const(constant));
                }
                rest.into_iter().reduce(TermExpr::add).expect("nonempty")
            }
            TermExpr::Mul(..) => {
                let mut ops = Vec::new();
                self.collect_operands(false, &mut ops);
                let mut constant = Rational::one();
                let mut rest = Vec::new();
                for op in ops.iter().map(|e| e.normalize()) {
                    match op {
                        TermExpr::Const(c) => constant = &constant * &c,
                        other => rest.push(other),
                    }
                }
                if constant.is_zero() {
                    return TermExpr::Const(constant);
                }
                rest.sort();
                if constant != Rational::one() || rest.is_empty() {
                    rest.insert(0, TermExpr::Const(constant));
                }
                rest.into_iter().reduce(TermExpr::mul).expect("nonempty")
            }
        }
    }

    fn collect_operands<'a>(&'a self, sum: bool, out: &mut Vec<&'a TermExpr>) {
        match (self, sum) {
            (TermExpr::Add(a, b), true) | (TermExpr::Mul(a, b), false) => {
                a.collect_operands(sum, out);
                b.collect_operands(sum, out);
            }
            _ => out.push(self),
        }
    }

    /// Prefix notation, e.g. `(+ (* x0 x1) x0)`.
    pub fn to_prefix(&self) -> String {
        self.to_string()
    }

    pub fn parse_prefix(s: &str) -> Result<TermExpr, ParseError> {
        let tokens = tokenize(s);
        let mut pos = 0;
        let expr = parse_tokens(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(ParseError::new(format!("trailing input in `{s}`")));
        }
        Ok(expr)
    }
}

impl fmt::Display for TermExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermExpr::Var(i) => write!(f, "x{i}"),
            TermExpr::Const(c) => write!(f, "{c}"),
            TermExpr::Add(a, b) => write!(f, "(+ {a} {b})"),
            TermExpr::Mul(a, b) => write!(f, "(* {a} {b})"),
        }
    }
}

impl FromStr for TermExpr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TermExpr::parse_prefix(s)
    }
}

fn tokenize(s: &str) -> Vec<String> {
    s.replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

fn parse_tokens(tokens: &[String], pos: &mut usize) -> Result<TermExpr, ParseError> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| ParseError::new("unexpected end of expression"))?;
    *pos += 1;
    if tok == "(" {
        let op = tokens
            .get(*pos)
            .ok_or_else(|| ParseError::new("missing operator"))?
            .clone();
        *pos += 1;
        let mut args = Vec::new();
        while tokens.get(*pos).map(String::as_str) != Some(")") {
            if *pos >= tokens.len() {
                return Err(ParseError::new("unbalanced parentheses"));
            }
            args.push(parse_tokens(tokens, pos)?);
        }
        *pos += 1;
        if args.len() < 2 {
            return Err(ParseError::new(format!(
                "operator `{op}` needs at least two operands"
            )));
        }
        let join: fn(TermExpr, TermExpr) -> TermExpr = match op.as_str() {
            "+" => TermExpr::add,
            "*" => TermExpr::mul,
            other => return Err(ParseError::new(format!("unknown operator `{other}`"))),
        };
        Ok(args.into_iter().reduce(join).expect("two operands"))
    } else if tok == ")" {
        Err(ParseError::new("unexpected `)`"))
    } else if let Some(idx) = tok.strip_prefix('x') {
        idx.parse()
            .map(TermExpr::Var)
            .map_err(|_| ParseError::new(format!("bad variable `{tok}`")))
    } else {
        tok.parse().map(TermExpr::Const)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template needs at least one variable")]
    NoVariables,
    #[error("template needs at least one term")]
    NoTerms,
    #[error("term `{term}` uses variable x{var} but the template has {num_vars} variables")]
    VariableOutOfRange {
        term: String,
        var: usize,
        num_vars: usize,
    },
    #[error("nonzero constraint names x{0}, which is not a template variable")]
    BadNonzeroVar(usize),
    #[error("QUAD_AP needs a parameter k >= 1")]
    MissingK,
    #[error("parameter k is only meaningful for QUAD_AP")]
    UnexpectedK,
    #[error("invalid k = {0}; need k >= 1")]
    InvalidK(i64),
    #[error("no coefficient function is usable at position {position} (arity {arity})")]
    ArityMismatch { position: usize, arity: usize },
    #[error("coefficient set is empty")]
    EmptyCoefficients,
    #[error("unknown template `{0}`")]
    UnknownName(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// A finite pattern: terms over `num_vars` variables with per-variable
/// nonzero constraints and an optional distinct-values requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TemplateFile", into = "TemplateFile")]
pub struct PatternTemplate {
    num_vars: usize,
    terms: Vec<TermExpr>,
    nonzero_vars: BTreeSet<usize>,
    require_distinct: bool,
}

impl PatternTemplate {
    /// Validates the variable indices and drops terms that normalize to an
    /// expression already present (first occurrence wins).
    pub fn new(
        num_vars: usize,
        terms: Vec<TermExpr>,
        nonzero_vars: impl IntoIterator<Item = usize>,
        require_distinct: bool,
    ) -> Result<Self, TemplateError> {
        if num_vars == 0 {
            return Err(TemplateError::NoVariables);
        }
        if terms.is_empty() {
            return Err(TemplateError::NoTerms);
        }
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for t in terms {
            if let Some(v) = t.max_var().filter(|&v| v >= num_vars) {
                return Err(TemplateError::VariableOutOfRange {
                    term: t.to_string(),
                    var: v,
                    num_vars,
                });
            }
            let norm = t.normalize();
            if seen.insert(norm.clone()) {
                kept.push(norm);
            }
        }
        let nonzero_vars: BTreeSet<usize> = nonzero_vars.into_iter().collect();
        if let Some(&v) = nonzero_vars.iter().find(|&&v| v >= num_vars) {
            return Err(TemplateError::BadNonzeroVar(v));
        }
        Ok(PatternTemplate {
            num_vars,
            terms: kept,
            nonzero_vars,
            require_distinct,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn terms(&self) -> &[TermExpr] {
        &self.terms
    }

    pub fn nonzero_vars(&self) -> &BTreeSet<usize> {
        &self.nonzero_vars
    }

    pub fn require_distinct(&self) -> bool {
        self.require_distinct
    }

    pub fn with_distinct(mut self, on: bool) -> Self {
        self.require_distinct = on;
        self
    }

    /// The terms as a set, for order-insensitive comparison.
    pub fn term_set(&self) -> BTreeSet<TermExpr> {
        self.terms.iter().cloned().collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("template serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, TemplateError> {
        serde_json::from_str(s).map_err(|e| TemplateError::Parse(ParseError::new(e.to_string())))
    }
}

impl fmt::Display for PatternTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        write!(f, "{{{}}}", terms.join(", "))
    }
}

/// On-disk form of a template.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TemplateFile {
    pub num_vars: usize,
    pub terms: Vec<String>,
    #[serde(default)]
    pub nonzero_vars: Vec<usize>,
    #[serde(default)]
    pub distinct: bool,
}

impl TryFrom<TemplateFile> for PatternTemplate {
    type Error = TemplateError;
    fn try_from(f: TemplateFile) -> Result<Self, Self::Error> {
        let terms = f
            .terms
            .iter()
            .map(|t| TermExpr::parse_prefix(t))
            .collect::<Result<Vec<_>, _>>()?;
        PatternTemplate::new(f.num_vars, terms, f.nonzero_vars, f.distinct)
    }
}

impl From<PatternTemplate> for TemplateFile {
    fn from(t: PatternTemplate) -> Self {
        TemplateFile {
            num_vars: t.num_vars,
            terms: t.terms.iter().map(TermExpr::to_prefix).collect(),
            nonzero_vars: t.nonzero_vars.into_iter().collect(),
            distinct: t.require_distinct,
        }
    }
}

/// Named built-in patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    /// `{x, y, x+y}`
    Schur,
    /// `{x, xy, x+y}`
    Moreira,
    /// `{x, y, xy, x+y}`
    Quad,
    /// `{x, y, xy} ∪ {x+iy : 1 <= i <= k}`
    QuadAp,
}

impl Builtin {
    pub fn name(self) -> &'static str {
        match self {
            Builtin::Schur => "schur",
            Builtin::Moreira => "moreira",
            Builtin::Quad => "quad",
            Builtin::QuadAp => "quad_ap",
        }
    }
}

impl FromStr for Builtin {
    type Err = TemplateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "schur" => Ok(Builtin::Schur),
            "moreira" => Ok(Builtin::Moreira),
            "quad" => Ok(Builtin::Quad),
            "quad_ap" | "quad-ap" | "quadap" => Ok(Builtin::QuadAp),
            _ => Err(TemplateError::UnknownName(s.to_owned())),
        }
    }
}

pub fn builtin_template(name: Builtin, k: Option<i64>) -> Result<PatternTemplate, TemplateError> {
    use TermExpr as T;
    let (x, y) = (T::var(0), T::var(1));
    let terms = match (name, k) {
        (Builtin::QuadAp, None) => return Err(TemplateError::MissingK),
        (Builtin::QuadAp, Some(k)) if k < 1 => return Err(TemplateError::InvalidK(k)),
        (Builtin::QuadAp, Some(k)) => {
            let mut terms = vec![x.clone(), y.clone(), T::mul(x.clone(), y.clone())];
            for i in 1..=k {
                terms.push(T::add(x.clone(), T::mul(T::constant(i), y.clone())));
            }
            terms
        }
        (_, Some(_)) => return Err(TemplateError::UnexpectedK),
        (Builtin::Schur, None) => vec![x.clone(), y.clone(), T::add(x, y)],
        (Builtin::Moreira, None) => vec![x.clone(), T::mul(x.clone(), y.clone()), T::add(x, y)],
        (Builtin::Quad, None) => vec![
            x.clone(),
            y.clone(),
            T::mul(x.clone(), y.clone()),
            T::add(x, y),
        ],
    };
    PatternTemplate::new(2, terms, [0, 1], false)
}

/// The multi-variable family over `x_0..x_t`: every product `x_i⋯x_j`
/// (`0 <= i <= j <= t`) and every sum
/// `x_0⋯x_i + h_{i+1}·x_{i+1} + … + h_t·x_t` with each `h_s` drawn from
/// `coefficients`.
///
/// A coefficient is an expression whose `Var(a)` stands for `x_{a+1}`. It
/// can be used at position `s` when it only mentions `x_1..x_{s-1}`;
/// constants can be used everywhere.
pub fn general_template(
    coefficients: &[TermExpr],
    t: usize,
) -> Result<PatternTemplate, TemplateError> {
    if coefficients.is_empty() {
        return Err(TemplateError::EmptyCoefficients);
    }
    if t == 0 {
        return Err(TemplateError::NoVariables);
    }
    // usable[s] = coefficients whose variables lie in x_1..x_{s-1}, shifted
    // onto template variables.
    let mut usable: Vec<Vec<TermExpr>> = vec![Vec::new(); t + 1];
    for s in 1..=t {
        for h in coefficients {
            let fits = h.max_var().is_none_or(|a| a + 1 < s);
            if fits {
                usable[s].push(h.substitute(&|a| TermExpr::Var(a + 1)));
            }
        }
        if usable[s].is_empty() {
            return Err(TemplateError::ArityMismatch {
                position: s,
                arity: s - 1,
            });
        }
    }

    let mut terms = Vec::new();
    for i in 0..=t {
        for j in i..=t {
            terms.push(TermExpr::product_of(i..=j));
        }
    }
    for i in 0..=t {
        let base = TermExpr::product_of(0..=i);
        let mut partial = vec![base];
        for (s, choices) in usable.iter().enumerate().skip(i + 1) {
            let mut next = Vec::with_capacity(partial.len() * choices.len());
            for p in &partial {
                for h in choices {
                    next.push(TermExpr::add(
                        p.clone(),
                        TermExpr::mul(h.clone(), TermExpr::Var(s)),
                    ));
                }
            }
            partial = next;
        }
        terms.extend(partial);
    }
    PatternTemplate::new(t + 1, terms, 0..=t, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms_of(t: &PatternTemplate) -> BTreeSet<String> {
        t.terms().iter().map(|e| e.to_string()).collect()
    }

    fn parse_set(items: &[&str]) -> BTreeSet<TermExpr> {
        items
            .iter()
            .map(|s| TermExpr::parse_prefix(s).unwrap().normalize())
            .collect()
    }

    #[test]
    fn quad_has_four_terms_and_nonzero_vars() {
        let q = builtin_template(Builtin::Quad, None).unwrap();
        assert_eq!(q.terms().len(), 4);
        assert_eq!(q.nonzero_vars().iter().copied().collect::<Vec<_>>(), [0, 1]);
        assert_eq!(
            q.term_set(),
            parse_set(&["x0", "x1", "(* x0 x1)", "(+ x0 x1)"])
        );
    }

    #[test]
    fn schur_and_moreira() {
        let s = builtin_template(Builtin::Schur, None).unwrap();
        assert_eq!(s.term_set(), parse_set(&["x0", "x1", "(+ x0 x1)"]));
        let m = builtin_template(Builtin::Moreira, None).unwrap();
        assert_eq!(m.term_set(), parse_set(&["x0", "(* x0 x1)", "(+ x0 x1)"]));
    }

    #[test]
    fn quad_ap_terms() {
        let q2 = builtin_template(Builtin::QuadAp, Some(2)).unwrap();
        assert_eq!(
            q2.term_set(),
            parse_set(&["x0", "x1", "(* x0 x1)", "(+ x0 x1)", "(+ x0 (* 2 x1))"])
        );
        let q1 = builtin_template(Builtin::QuadAp, Some(1)).unwrap();
        let quad = builtin_template(Builtin::Quad, None).unwrap();
        assert_eq!(q1.term_set(), quad.term_set());
    }

    #[test]
    fn k_validation() {
        assert_eq!(
            builtin_template(Builtin::QuadAp, None),
            Err(TemplateError::MissingK)
        );
        assert_eq!(
            builtin_template(Builtin::QuadAp, Some(0)),
            Err(TemplateError::InvalidK(0))
        );
        assert_eq!(
            builtin_template(Builtin::Quad, Some(2)),
            Err(TemplateError::UnexpectedK)
        );
    }

    #[test]
    fn general_template_example_one() {
        // 0, 1, y, z, yz as coefficient functions in the arguments (y, z).
        let h = vec![
            TermExpr::constant(0),
            TermExpr::constant(1),
            TermExpr::var(0),
            TermExpr::var(1),
            TermExpr::mul(TermExpr::var(0), TermExpr::var(1)),
        ];
        let t = general_template(&h, 2).unwrap();
        // x = x0, y = x1, z = x2
        let expected = parse_set(&[
            "x0",
            "x1",
            "x2",
            "(* x0 x1)",
            "(* x1 x2)",
            "(* x0 x1 x2)",
            "(+ x0 x1)",
            "(+ x0 x2)",
            "(+ x0 x1 x2)",
            "(+ x0 x1 (* x1 x2))",
            "(+ x0 (* x1 x2))",
            "(+ (* x0 x1) x2)",
            "(+ (* x0 x1) (* x1 x2))",
        ]);
        assert_eq!(t.term_set(), expected);
    }

    #[test]
    fn general_template_constants_match_quad_ap() {
        for k in 1..=5 {
            let h: Vec<TermExpr> = (1..=k).map(TermExpr::constant).collect();
            let g = general_template(&h, 1).unwrap();
            let q = builtin_template(Builtin::QuadAp, Some(k)).unwrap();
            assert_eq!(g.term_set(), q.term_set(), "k = {k}");
        }
    }

    #[test]
    fn general_template_zero_collapses() {
        let g = general_template(&[TermExpr::constant(0)], 1).unwrap();
        assert_eq!(g.term_set(), parse_set(&["x0", "x1", "(* x0 x1)"]));
    }

    #[test]
    fn general_template_arity_mismatch() {
        let err = general_template(&[TermExpr::var(0)], 1).unwrap_err();
        assert_eq!(
            err,
            TemplateError::ArityMismatch {
                position: 1,
                arity: 0
            }
        );
    }

    #[test]
    fn normalization_flattens_and_folds() {
        let a = TermExpr::parse_prefix("(+ x1 (+ x0 (* 1 x2)))")
            .unwrap()
            .normalize();
        let b = TermExpr::parse_prefix("(+ (+ x2 x1) x0)")
            .unwrap()
            .normalize();
        assert_eq!(a, b);
        let c = TermExpr::parse_prefix("(* 2 (* x0 3))")
            .unwrap()
            .normalize();
        assert_eq!(c.to_string(), "(* 6 x0)");
        let z = TermExpr::parse_prefix("(+ x0 (* 0 x1))")
            .unwrap()
            .normalize();
        assert_eq!(z, TermExpr::Var(0));
        assert_eq!(a.normalize(), a);
    }

    #[test]
    fn prefix_parse_errors() {
        for bad in ["(+ x0)", "(- x0 x1)", "(+ x0 x1", "x", ")", "(+ x0 x1) x2"] {
            assert!(TermExpr::parse_prefix(bad).is_err(), "{bad}");
        }
        let e = TermExpr::parse_prefix("(+ (* x0 x1) 1/2)").unwrap();
        assert_eq!(e.to_prefix(), "(+ (* x0 x1) 1/2)");
    }

    #[test]
    fn template_validation() {
        let err = PatternTemplate::new(1, vec![TermExpr::var(1)], [], false).unwrap_err();
        assert!(matches!(
            err,
            TemplateError::VariableOutOfRange { var: 1, .. }
        ));
        assert_eq!(
            PatternTemplate::new(1, vec![], [], false),
            Err(TemplateError::NoTerms)
        );
        assert_eq!(
            PatternTemplate::new(1, vec![TermExpr::var(0)], [3], false),
            Err(TemplateError::BadNonzeroVar(3))
        );
        let dup = PatternTemplate::new(
            2,
            vec![
                TermExpr::parse_prefix("(+ x0 x1)").unwrap(),
                TermExpr::parse_prefix("(+ x1 x0)").unwrap(),
            ],
            [],
            false,
        )
        .unwrap();
        assert_eq!(dup.terms().len(), 1);
    }

    #[test]
    fn json_format() {
        let q = builtin_template(Builtin::Quad, None).unwrap();
        let json = q.to_json();
        assert!(json.contains("\"numVars\": 2"));
        assert!(json.contains("\"(* x0 x1)\""));
        assert_eq!(PatternTemplate::from_json(&json).unwrap(), q);
        let bad = r#"{"numVars": 2, "terms": ["x0"], "colour": 1}"#;
        assert!(PatternTemplate::from_json(bad).is_err());
        assert_eq!(terms_of(&q).len(), 4);
    }
}
