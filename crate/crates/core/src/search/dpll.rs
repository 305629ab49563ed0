//! A small DPLL solver: two watched literals for unit propagation,
//! chronological backtracking, no clause learning. Branching is fail-first:
//! the next decision satisfies a literal of a shortest open clause.

use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Lit(u32);

impl Lit {
    fn from_dimacs(l: i32) -> Lit {
        let v = l.unsigned_abs() - 1;
        Lit(v << 1 | u32::from(l < 0))
    }
    fn var(self) -> usize {
        (self.0 >> 1) as usize
    }
    fn negated(self) -> bool {
        self.0 & 1 == 1
    }
    fn neg(self) -> Lit {
        Lit(self.0 ^ 1)
    }
    fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveOutcome {
    /// A model, indexed by variable id - 1.
    Sat(Vec<bool>),
    Unsat,
    /// The decision budget ran out.
    Unknown,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub elapsed: Duration,
}

pub struct DpllSolver {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    /// 0 unassigned, 1 true, -1 false (per variable).
    value: Vec<i8>,
    trail: Vec<Lit>,
    /// Trail length at each decision, with whether the decision was flipped.
    decisions: Vec<(usize, Lit, bool)>,
    qhead: usize,
    units: Vec<Lit>,
    trivially_unsat: bool,
    stats: SolverStats,
    decision_limit: Option<u64>,
}

impl DpllSolver {
    pub fn new(num_vars: usize, clauses: &[Vec<i32>]) -> Self {
        let mut s = DpllSolver {
            num_vars,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            value: vec![0; num_vars],
            trail: Vec::new(),
            decisions: Vec::new(),
            qhead: 0,
            units: Vec::new(),
            trivially_unsat: false,
            stats: SolverStats::default(),
            decision_limit: None,
        };
        for c in clauses {
            s.add_clause(c);
        }
        s
    }

    pub fn with_decision_limit(mut self, limit: u64) -> Self {
        self.decision_limit = Some(limit);
        self
    }

    fn add_clause(&mut self, clause: &[i32]) {
        let mut lits: Vec<Lit> = clause.iter().map(|&l| Lit::from_dimacs(l)).collect();
        lits.sort_by_key(|l| l.0);
        lits.dedup();
        if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
            return; // tautology
        }
        // Keep the caller's literal order for branching.
        let mut ordered: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in clause
            .iter()
            .map(|l| Lit::from_dimacs(*l))
            .collect::<Vec<_>>()
            .iter()
        {
            if !ordered.contains(&l) {
                ordered.push(l);
            }
        }
        match ordered.len() {
            0 => self.trivially_unsat = true,
            1 => self.units.push(ordered[0]),
            _ => {
                let id = self.clauses.len();
                self.watches[ordered[0].neg().idx()].push(id);
                self.watches[ordered[1].neg().idx()].push(id);
                self.clauses.push(ordered);
            }
        }
    }

    fn lit_value(&self, l: Lit) -> i8 {
        let v = self.value[l.var()];
        if l.negated() {
            -v
        } else {
            v
        }
    }

    fn assign(&mut self, l: Lit) {
        self.value[l.var()] = if l.negated() { -1 } else { 1 };
        self.trail.push(l);
    }

    /// Unit propagation; returns `false` on conflict.
    fn propagate(&mut self) -> bool {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            // Clauses watching a literal that just became false.
            let mut ws = std::mem::take(&mut self.watches[p.idx()]);
            let false_lit = p.neg();
            let mut i = 0;
            let mut ok = true;
            while i < ws.len() {
                let cid = ws[i];
                let clause = &mut self.clauses[cid];
                if clause[0] == false_lit {
                    clause.swap(0, 1);
                }
                let first = clause[0];
                let first_val = {
                    let v = self.value[first.var()];
                    if first.negated() {
                        -v
                    } else {
                        v
                    }
                };
                if first_val == 1 {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    let v = self.value[l.var()];
                    let lv = if l.negated() { -v } else { v };
                    if lv != -1 {
                        clause.swap(1, k);
                        self.watches[clause[1].neg().idx()].push(cid);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if first_val == -1 {
                    ok = false;
                    break;
                }
                self.assign(first);
                i += 1;
            }
            let displaced = std::mem::replace(&mut self.watches[p.idx()], ws);
            self.watches[p.idx()].extend(displaced);
            if !ok {
                self.stats.conflicts += 1;
                return false;
            }
        }
        true
    }

    fn undo_to(&mut self, len: usize) {
        while self.trail.len() > len {
            let l = self.trail.pop().expect("nonempty trail");
            self.value[l.var()] = 0;
        }
        self.qhead = len;
    }

    /// Fail-first choice: a literal of an open clause with the fewest
    /// unassigned literals (first such clause in clause order).
    fn pick_branch(&self) -> Option<Lit> {
        let mut best: Option<(usize, Lit)> = None;
        for clause in &self.clauses {
            let mut open = 0;
            let mut first = None;
            let mut satisfied = false;
            for &l in clause {
                match self.lit_value(l) {
                    1 => {
                        satisfied = true;
                        break;
                    }
                    0 => {
                        open += 1;
                        first.get_or_insert(l);
                    }
                    _ => {}
                }
            }
            if satisfied || open == 0 {
                continue;
            }
            if best.is_none_or(|(b, _)| open < b) {
                best = Some((open, first.expect("open literal")));
                if open <= 2 {
                    break;
                }
            }
        }
        best.map(|(_, l)| l).or_else(|| {
            // Variables in no open clause: any value works.
            (0..self.num_vars)
                .find(|&v| self.value[v] == 0)
                .map(|v| Lit((v as u32) << 1 | 1))
        })
    }

    pub fn solve(&mut self) -> SolveOutcome {
        let start = Instant::now();
        let outcome = self.run();
        self.stats.elapsed = start.elapsed();
        outcome
    }

    fn run(&mut self) -> SolveOutcome {
        if self.trivially_unsat {
            return SolveOutcome::Unsat;
        }
        for l in std::mem::take(&mut self.units) {
            match self.lit_value(l) {
                -1 => return SolveOutcome::Unsat,
                0 => self.assign(l),
                _ => {}
            }
        }
        loop {
            if self.propagate() {
                match self.pick_branch() {
                    None => {
                        let model = self.value.iter().map(|&v| v == 1).collect();
                        return SolveOutcome::Sat(model);
                    }
                    Some(l) => {
                        if self
                            .decision_limit
                            .is_some_and(|lim| self.stats.decisions >= lim)
                        {
                            return SolveOutcome::Unknown;
                        }
                        self.stats.decisions += 1;
                        self.decisions.push((self.trail.len(), l, false));
                        self.assign(l);
                    }
                }
            } else {
                loop {
                    match self.decisions.pop() {
                        None => return SolveOutcome::Unsat,
                        Some((len, l, flipped)) => {
                            self.undo_to(len);
                            if !flipped {
                                self.decisions.push((len, l.neg(), true));
                                self.assign(l.neg());
                                break;
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }
}

/// Checks a model against a clause list.
pub fn satisfies(clauses: &[Vec<i32>], model: &[bool]) -> bool {
    clauses.iter().all(|c| {
        c.iter()
            .any(|&l| model[l.unsigned_abs() as usize - 1] == (l > 0))
    })
}
