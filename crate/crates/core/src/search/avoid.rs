use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground::GroundSet;
use crate::template::PatternTemplate;

use super::cnf::{encode_cnf, instance_sets, parse_solver_output, SolverOutput};
use super::coloring::Coloring;
use super::compiled::CompiledTemplate;
use super::dpll::{DpllSolver, SolveOutcome};
use super::find_instances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    Sat,
    SatExternal,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exhaustive => "exhaustive",
            Method::Sat => "sat",
            Method::SatExternal => "sat_external",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exhaustive" => Ok(Method::Exhaustive),
            "sat" => Ok(Method::Sat),
            "sat_external" | "sat-external" | "external" => Ok(Method::SatExternal),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("external solver: {0}")]
    SolverError(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("internal verification failed: {0}")]
    VerificationFailed(String),
}

/// External solver hookup: the formula is written to `cnf_path`; if
/// `command` is set it is run with the CNF path appended and its standard
/// output saved to `output_path`, otherwise `output_path` must already hold
/// the solver's output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSolver {
    pub command: Option<String>,
    pub cnf_path: PathBuf,
    pub output_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Exhaustive search is refused when `|ground| * log2(n)` exceeds this.
    pub exhaustive_budget_bits: f64,
    pub decision_limit: Option<u64>,
    /// Fix the color of the least element (colors are interchangeable).
    pub symmetry_breaking: bool,
    pub external: Option<ExternalSolver>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            exhaustive_budget_bits: 48.0,
            decision_limit: None,
            symmetry_breaking: true,
            external: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum AvoidanceResult {
    /// An avoiding coloring, re-verified to contain no monochromatic instance.
    Avoiding {
        coloring: Coloring,
        method: Method,
        seconds: f64,
    },
    /// No avoiding coloring exists.
    Forced {
        instance_count: usize,
        method: Method,
        seconds: f64,
        /// The UNSAT answer came from an external solver and was not checked.
        externally_certified: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Avoiding,
    Forced,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Avoiding => "avoiding",
            Verdict::Forced => "forced",
        }
    }
}

impl AvoidanceResult {
    pub fn verdict(&self) -> Verdict {
        match self {
            AvoidanceResult::Avoiding { .. } => Verdict::Avoiding,
            AvoidanceResult::Forced { .. } => Verdict::Forced,
        }
    }

    pub fn is_forced(&self) -> bool {
        self.verdict() == Verdict::Forced
    }

    pub fn seconds(&self) -> f64 {
        match self {
            AvoidanceResult::Avoiding { seconds, .. } | AvoidanceResult::Forced { seconds, .. } => {
                *seconds
            }
        }
    }

    pub fn coloring(&self) -> Option<&Coloring> {
        match self {
            AvoidanceResult::Avoiding { coloring, .. } => Some(coloring),
            AvoidanceResult::Forced { .. } => None,
        }
    }
}

/// Decides whether some `n`-coloring of `ground` has no monochromatic
/// instance of `template`.
pub fn avoidance_search(
    ground: GroundSet,
    n: usize,
    template: &PatternTemplate,
    method: Method,
    opts: &SearchOptions,
) -> Result<AvoidanceResult, SearchError> {
    if n == 0 || n > super::MAX_COLORS {
        return Err(SearchError::InvalidInput(format!(
            "color count {n} out of range"
        )));
    }
    let start = Instant::now();
    let compiled = CompiledTemplate::new(template, ground);
    let sets = instance_sets(&compiled);
    let instance_count = compiled.all_instances().len();

    let colors: Option<Vec<u8>> = if n == 1 {
        sets.is_empty().then(|| vec![0; compiled.index().len()])
    } else {
        match method {
            Method::Exhaustive => {
                let bits = compiled.index().len() as f64 * (n as f64).log2();
                if bits > opts.exhaustive_budget_bits {
                    return Err(SearchError::BudgetExceeded(format!(
                        "exhaustive search over {bits:.1} bits exceeds the budget of {}",
                        opts.exhaustive_budget_bits
                    )));
                }
                exhaustive(compiled.index().len(), n, &sets, opts.symmetry_breaking)
            }
            Method::Sat => solve_builtin(ground, n, template, opts)?,
            Method::SatExternal => solve_external(ground, n, template, opts)?,
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    match colors {
        Some(colors) => {
            let coloring = Coloring::with_index(Arc::new(compiled.index().clone()), n, colors)
                .map_err(|e| SearchError::VerificationFailed(e.to_string()))?;
            if !find_instances(&coloring, template, Some(1)).is_empty() {
                return Err(SearchError::VerificationFailed(
                    "reported avoiding coloring has a monochromatic instance".into(),
                ));
            }
            Ok(AvoidanceResult::Avoiding {
                coloring,
                method,
                seconds,
            })
        }
        None => Ok(AvoidanceResult::Forced {
            instance_count,
            method,
            seconds,
            externally_certified: method == Method::SatExternal && n > 1,
        }),
    }
}

fn solve_builtin(
    ground: GroundSet,
    n: usize,
    template: &PatternTemplate,
    opts: &SearchOptions,
) -> Result<Option<Vec<u8>>, SearchError> {
    let formula = encode_cnf(ground, n, template);
    let mut clauses = formula.clauses.clone();
    if opts.symmetry_breaking {
        clauses.push(vec![formula.var(0, 0)]);
    }
    let mut solver = DpllSolver::new(formula.num_variables, &clauses);
    if let Some(limit) = opts.decision_limit {
        solver = solver.with_decision_limit(limit);
    }
    match solver.solve() {
        SolveOutcome::Sat(model) => formula.decode(&model).map(Some).ok_or_else(|| {
            SearchError::VerificationFailed("model leaves an element uncolored".into())
        }),
        SolveOutcome::Unsat => Ok(None),
        SolveOutcome::Unknown => Err(SearchError::BudgetExceeded(format!(
            "decision limit {:?} reached",
            opts.decision_limit
        ))),
    }
}

fn solve_external(
    ground: GroundSet,
    n: usize,
    template: &PatternTemplate,
    opts: &SearchOptions,
) -> Result<Option<Vec<u8>>, SearchError> {
    let ext = opts
        .external
        .as_ref()
        .ok_or_else(|| SearchError::InvalidInput("sat_external needs solver paths".into()))?;
    let formula = encode_cnf(ground, n, template);
    let io = |path: &PathBuf| {
        let path = path.clone();
        move |source| SearchError::Io { path, source }
    };
    std::fs::write(&ext.cnf_path, formula.to_dimacs()).map_err(io(&ext.cnf_path))?;
    if let Some(cmd) = &ext.command {
        let mut parts = cmd.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| SearchError::InvalidInput("empty solver command".into()))?;
        let output = Command::new(program)
            .args(parts)
            .arg(&ext.cnf_path)
            .output()
            .map_err(|e| SearchError::SolverError(format!("cannot run `{cmd}`: {e}")))?;
        std::fs::write(&ext.output_path, &output.stdout).map_err(io(&ext.output_path))?;
    }
    let text = std::fs::read_to_string(&ext.output_path).map_err(io(&ext.output_path))?;
    match parse_solver_output(&text, formula.num_variables).map_err(SearchError::SolverError)? {
        SolverOutput::Unsatisfiable => Ok(None),
        SolverOutput::Satisfiable(model) => formula
            .decode(&model)
            .map(Some)
            .ok_or_else(|| SearchError::SolverError("model leaves an element uncolored".into())),
    }
}

/// Backtracking over colorings with fail-first element choice: always
/// extend the uncolored element with the fewest admissible colors.
struct Backtracker<'a> {
    n: usize,
    sets: &'a [Vec<u32>],
    sets_of: Vec<Vec<usize>>,
    colors: Vec<i8>,
}

impl<'a> Backtracker<'a> {
    fn new(elements: usize, n: usize, sets: &'a [Vec<u32>]) -> Self {
        let mut sets_of = vec![Vec::new(); elements];
        for (i, s) in sets.iter().enumerate() {
            for &e in s {
                sets_of[e as usize].push(i);
            }
        }
        Backtracker {
            n,
            sets,
            sets_of,
            colors: vec![-1; elements],
        }
    }

    /// Bitmask of colors `e` can take without completing a monochromatic set.
    fn admissible(&self, e: usize) -> u64 {
        let mut mask = if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        };
        for &si in &self.sets_of[e] {
            let mut common: Option<i8> = None;
            let mut blocked = true;
            for &o in &self.sets[si] {
                if o as usize == e {
                    continue;
                }
                let c = self.colors[o as usize];
                if c < 0 || common.is_some_and(|k| k != c) {
                    blocked = false;
                    break;
                }
                common = Some(c);
            }
            if blocked {
                match common {
                    Some(c) => mask &= !(1u64 << c),
                    None => mask = 0, // singleton set
                }
            }
        }
        mask
    }

    /// The next element to branch on and its admissible colors; `None` when
    /// everything is colored.
    fn choose(&self) -> Option<(usize, u64)> {
        let mut best: Option<(usize, u64)> = None;
        for e in 0..self.colors.len() {
            if self.colors[e] >= 0 {
                continue;
            }
            let m = self.admissible(e);
            if best.is_none_or(|(_, bm)| m.count_ones() < bm.count_ones()) {
                best = Some((e, m));
                if m == 0 {
                    break;
                }
            }
        }
        best
    }

    fn dfs(&mut self) -> bool {
        let Some((e, mask)) = self.choose() else {
            return true;
        };
        for c in 0..self.n {
            if mask >> c & 1 == 1 {
                self.colors[e] = c as i8;
                if self.dfs() {
                    return true;
                }
            }
        }
        self.colors[e] = -1;
        false
    }

    /// Partial colorings at which the search tree is split for parallel work,
    /// in the order the sequential search would visit them.
    fn frontier(&mut self, depth: usize, out: &mut Vec<Vec<i8>>) {
        if depth == 0 {
            out.push(self.colors.clone());
            return;
        }
        let Some((e, mask)) = self.choose() else {
            out.push(self.colors.clone());
            return;
        };
        for c in 0..self.n {
            if mask >> c & 1 == 1 {
                self.colors[e] = c as i8;
                self.frontier(depth - 1, out);
            }
        }
        self.colors[e] = -1;
    }
}

fn exhaustive(elements: usize, n: usize, sets: &[Vec<u32>], symmetry: bool) -> Option<Vec<u8>> {
    let mut root = Backtracker::new(elements, n, sets);
    if elements == 0 {
        return Some(Vec::new());
    }
    if symmetry {
        if root.admissible(0) & 1 == 0 {
            return None;
        }
        root.colors[0] = 0;
    }
    let mut frontier = Vec::new();
    root.frontier(6, &mut frontier);
    frontier.into_par_iter().find_map_first(|start| {
        let mut bt = Backtracker::new(elements, n, sets);
        bt.colors = start;
        bt.dfs()
            .then(|| bt.colors.iter().map(|&c| c.max(0) as u8).collect())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub hi: i64,
    pub verdict: Verdict,
    /// Filled in from monotonicity rather than searched.
    pub inferred: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub lo: i64,
    pub rows: Vec<ThresholdRow>,
    /// Least `hi` whose interval `[lo, hi]` is forced, if any in range.
    pub minimal_forced: Option<i64>,
}

/// Scans the intervals `[lo, hi]` for `hi` in `his`. Forcing is upward
/// closed in `hi`, so the boundary is found by binary search and both of
/// its sides are searched explicitly; the remaining rows are inferred.
pub fn threshold_scan(
    lo: i64,
    his: RangeInclusive<i64>,
    n: usize,
    template: &PatternTemplate,
    method: Method,
    opts: &SearchOptions,
) -> Result<ThresholdTable, SearchError> {
    let (first, last) = (*his.start(), *his.end());
    if first < lo || first > last {
        return Err(SearchError::InvalidInput(format!(
            "scan range {first}..={last} must be nonempty and start at or above lo = {lo}"
        )));
    }
    let mut computed: std::collections::BTreeMap<i64, (Verdict, f64)> = Default::default();
    let mut run = |hi: i64| -> Result<Verdict, SearchError> {
        if let Some((v, _)) = computed.get(&hi) {
            return Ok(*v);
        }
        let ground =
            GroundSet::interval(lo, hi).map_err(|e| SearchError::InvalidInput(e.to_string()))?;
        let r = avoidance_search(ground, n, template, method, opts)?;
        computed.insert(hi, (r.verdict(), r.seconds()));
        Ok(r.verdict())
    };

    let minimal_forced = if run(last)? == Verdict::Avoiding {
        None
    } else {
        let (mut a, mut b) = (first, last);
        while a < b {
            let mid = a + (b - a) / 2;
            if run(mid)? == Verdict::Forced {
                b = mid;
            } else {
                a = mid + 1;
            }
        }
        run(a)?;
        if a > first {
            run(a - 1)?;
        }
        Some(a)
    };

    let mut rows = Vec::new();
    for hi in first..=last {
        let row = match computed.get(&hi) {
            Some(&(verdict, seconds)) => ThresholdRow {
                hi,
                verdict,
                inferred: false,
                seconds,
            },
            None => ThresholdRow {
                hi,
                verdict: match minimal_forced {
                    Some(m) if hi >= m => Verdict::Forced,
                    _ => Verdict::Avoiding,
                },
                inferred: true,
                seconds: 0.0,
            },
        };
        rows.push(row);
    }
    for r in &rows {
        let expected = match minimal_forced {
            Some(m) if r.hi >= m => Verdict::Forced,
            _ => Verdict::Avoiding,
        };
        if r.verdict != expected {
            return Err(SearchError::VerificationFailed(format!(
                "verdict at {} contradicts monotonicity",
                r.hi
            )));
        }
    }
    Ok(ThresholdTable {
        lo,
        rows,
        minimal_forced,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldThresholdRow {
    pub p: u64,
    pub verdict: Verdict,
    pub seconds: f64,
}

/// Per-prime avoidance verdicts; primes are searched concurrently and the
/// rows reported in input order without any monotonicity assumption.
pub fn field_threshold(
    n: usize,
    template: &PatternTemplate,
    primes: &[u64],
    method: Method,
    opts: &SearchOptions,
) -> Result<Vec<FieldThresholdRow>, SearchError> {
    if primes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SearchError::InvalidInput(
            "primes must be strictly ascending".into(),
        ));
    }
    primes
        .par_iter()
        .map(|&p| {
            let ground =
                GroundSet::prime_field(p).map_err(|e| SearchError::InvalidInput(e.to_string()))?;
            let r = avoidance_search(ground, n, template, method, opts)?;
            Ok(FieldThresholdRow {
                p,
                verdict: r.verdict(),
                seconds: r.seconds(),
            })
        })
        .collect()
}
