//! An embedded CDCL satisfiability solver.
//!
//! Conflict-driven clause learning in the MiniSat lineage: two-watched-
//! literal propagation, first-UIP conflict analysis, exponentially decayed
//! variable activities for branching, phase saving, Luby restarts, and
//! solving under assumptions for incremental use.  Ties in branching are
//! broken toward the lowest variable id and the default phase is negative,
//! so results are bit-for-bit reproducible: an unconstrained variable ends
//! up false in the model.
//!
//! Learnt clauses are kept for the lifetime of the solver (no database
//! reduction); the bounded-unrolling instances this crate produces stay
//! well within that regime.  The [`SatBackend`] trait lets an external
//! DIMACS solver process stand in for the embedded one.

use std::fmt;
use std::io::Write as _;
use std::process::Command;

/// A propositional variable.  Ids are dense and allocated in order; the
/// first variable is id 1, matching DIMACS numbering.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u32);

impl Var {
    /// Zero-based index into the solver's arrays.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// One-based DIMACS id.
    pub fn id(self) -> u32 {
        self.0 + 1
    }

    /// The positive literal of this variable.
    pub fn positive(self) -> Lit {
        Lit::new(self, false)
    }

    /// The negative literal of this variable.
    pub fn negative(self) -> Lit {
        Lit::new(self, true)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.id())
    }
}

/// A literal: a variable or its negation.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    /// Builds a literal over `var`, negated when `negated` is true.
    pub fn new(var: Var, negated: bool) -> Lit {
        Lit(var.0 * 2 + u32::from(negated))
    }

    /// The underlying variable.
    pub fn var(self) -> Var {
        Var(self.0 / 2)
    }

    /// Whether the literal is the negation of its variable.
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// Dense code usable as an array index.
    fn code(self) -> usize {
        self.0 as usize
    }

    /// Signed DIMACS representation.
    pub fn to_dimacs(self) -> i64 {
        let id = i64::from(self.var().id());
        if self.is_negated() {
            -id
        } else {
            id
        }
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Ternary assignment value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LBool {
    True,
    False,
    Undef,
}

/// Verdict of a [`SatBackend::solve`] call.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Satisfiable,
    Unsatisfiable,
}

/// A total satisfying assignment over all allocated variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model(Vec<bool>);

impl Model {
    /// The value assigned to `var`.
    pub fn var_value(&self, var: Var) -> bool {
        self.0[var.index()]
    }

    /// The value of `lit` under the assignment.
    pub fn value(&self, lit: Lit) -> bool {
        self.0[lit.var().index()] != lit.is_negated()
    }
}

/// Outcome of a solve call: a status, plus a model when satisfiable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub model: Option<Model>,
}

impl SolveResult {
    fn unsat() -> SolveResult {
        SolveResult {
            status: SolveStatus::Unsatisfiable,
            model: None,
        }
    }

    /// Whether the instance was satisfiable.
    pub fn is_sat(&self) -> bool {
        self.status == SolveStatus::Satisfiable
    }
}

/// The solving interface the encoders and analyses are written against.
///
/// Adding the empty clause is allowed and makes the backend permanently
/// unsatisfiable.  `solve` may be called repeatedly, interleaved with
/// clause additions; assumptions hold for a single call only.
pub trait SatBackend {
    /// Allocates a fresh variable with the next dense id.
    fn new_var(&mut self) -> Var;

    /// Number of variables allocated so far.
    fn num_vars(&self) -> usize;

    /// Adds a clause over already-allocated variables.
    fn add_clause(&mut self, lits: &[Lit]);

    /// Decides satisfiability of the added clauses under the given
    /// assumption literals.
    fn solve(&mut self, assumptions: &[Lit]) -> SolveResult;

    /// Renders the added clauses in DIMACS CNF format (learnt clauses are
    /// excluded; the formula is the one the caller built).
    fn export_dimacs(&self) -> String;
}

#[derive(Clone, Debug)]
struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
}

/// Watcher entry: `blocker` is a cached literal of the clause whose truth
/// lets propagation skip loading the clause at all.
#[derive(Clone, Copy, Debug)]
struct Watcher {
    clause: u32,
    blocker: Lit,
}

/// Max-heap over variables ordered by activity, ties broken toward the
/// lowest id.  Supports lazy deletion and re-insertion on backtracking.
#[derive(Clone, Debug, Default)]
struct VarOrder {
    heap: Vec<u32>,
    position: Vec<i32>,
}

impl VarOrder {
    fn precedes(activity: &[f64], a: u32, b: u32) -> bool {
        let (aa, ab) = (activity[a as usize], activity[b as usize]);
        aa > ab || (aa == ab && a < b)
    }

    fn contains(&self, var: u32) -> bool {
        self.position[var as usize] >= 0
    }

    fn push_var(&mut self, activity: &[f64], var: u32) {
        if self.contains(var) {
            return;
        }
        self.position[var as usize] = self.heap.len() as i32;
        self.heap.push(var);
        self.sift_up(activity, self.heap.len() - 1);
    }

    fn pop_max(&mut self, activity: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().unwrap();
        self.position[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.position[last as usize] = 0;
            self.sift_down(activity, 0);
        }
        Some(top)
    }

    fn bumped(&mut self, activity: &[f64], var: u32) {
        if self.contains(var) {
            self.sift_up(activity, self.position[var as usize] as usize);
        }
    }

    fn sift_up(&mut self, activity: &[f64], mut index: usize) {
        while index > 0 {
            let parent = (index - 1) / 2;
            if Self::precedes(activity, self.heap[index], self.heap[parent]) {
                self.swap(index, parent);
                index = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, activity: &[f64], mut index: usize) {
        loop {
            let left = index * 2 + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let mut best = left;
            if right < self.heap.len() && Self::precedes(activity, self.heap[right], self.heap[left])
            {
                best = right;
            }
            if Self::precedes(activity, self.heap[best], self.heap[index]) {
                self.swap(index, best);
                index = best;
            } else {
                break;
            }
        }
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.position[self.heap[a] as usize] = a as i32;
        self.position[self.heap[b] as usize] = b as i32;
    }
}

const ACTIVITY_DECAY: f64 = 0.95;
const ACTIVITY_RESCALE: f64 = 1e100;
const RESTART_UNIT: u64 = 100;

/// The embedded conflict-driven solver.
pub struct CdclSolver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<LBool>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    order: VarOrder,
    seen: Vec<bool>,
    /// False once the clause set is contradictory on its own.
    ok: bool,
    num_original: usize,
    conflicts: u64,
}

impl Default for CdclSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl CdclSolver {
    pub fn new() -> CdclSolver {
        CdclSolver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            polarity: Vec::new(),
            activity: Vec::new(),
            var_inc: 1.0,
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            order: VarOrder::default(),
            seen: Vec::new(),
            ok: true,
            num_original: 0,
            conflicts: 0,
        }
    }

    fn value(&self, lit: Lit) -> LBool {
        match self.assigns[lit.var().index()] {
            LBool::Undef => LBool::Undef,
            LBool::True if !lit.is_negated() => LBool::True,
            LBool::False if lit.is_negated() => LBool::True,
            _ => LBool::False,
        }
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn new_decision_level(&mut self) {
        self.trail_lim.push(self.trail.len());
    }

    /// Records `lit` as true with the given implying clause.
    fn assign(&mut self, lit: Lit, reason: Option<u32>) {
        let var = lit.var().index();
        debug_assert_eq!(self.assigns[var], LBool::Undef);
        self.assigns[var] = if lit.is_negated() {
            LBool::False
        } else {
            LBool::True
        };
        self.level[var] = self.decision_level() as u32;
        self.reason[var] = reason;
        self.trail.push(lit);
    }

    fn cancel_until(&mut self, target: usize) {
        if self.decision_level() <= target {
            return;
        }
        let cut = self.trail_lim[target];
        for index in (cut..self.trail.len()).rev() {
            let lit = self.trail[index];
            let var = lit.var().index();
            self.polarity[var] = !lit.is_negated();
            self.assigns[var] = LBool::Undef;
            self.reason[var] = None;
            self.order.push_var(&self.activity, lit.var().0);
        }
        self.trail.truncate(cut);
        self.trail_lim.truncate(target);
        self.qhead = self.trail.len();
    }

    fn bump_var(&mut self, var: usize) {
        self.activity[var] += self.var_inc;
        if self.activity[var] > ACTIVITY_RESCALE {
            for value in &mut self.activity {
                *value /= ACTIVITY_RESCALE;
            }
            self.var_inc /= ACTIVITY_RESCALE;
        }
        self.order.bumped(&self.activity, var as u32);
    }

    fn decay_activities(&mut self) {
        self.var_inc /= ACTIVITY_DECAY;
    }

    fn watch_clause(&mut self, index: u32) {
        let lits = &self.clauses[index as usize].lits;
        debug_assert!(lits.len() >= 2);
        let (w0, w1) = (lits[0], lits[1]);
        self.watches[w0.code()].push(Watcher {
            clause: index,
            blocker: w1,
        });
        self.watches[w1.code()].push(Watcher {
            clause: index,
            blocker: w0,
        });
    }

    /// Propagates all queued assignments; returns the conflicting clause
    /// if one arises.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut watchers = std::mem::take(&mut self.watches[false_lit.code()]);
            let mut kept = 0;
            let mut index = 0;
            let mut conflict = None;
            'watchers: while index < watchers.len() {
                let watcher = watchers[index];
                index += 1;
                if self.value(watcher.blocker) == LBool::True {
                    watchers[kept] = watcher;
                    kept += 1;
                    continue;
                }
                let cref = watcher.clause as usize;
                // Normalize so the falsified literal sits at position 1.
                if self.clauses[cref].lits[0] == false_lit {
                    self.clauses[cref].lits.swap(0, 1);
                }
                let first = self.clauses[cref].lits[0];
                let updated = Watcher {
                    clause: watcher.clause,
                    blocker: first,
                };
                if first != watcher.blocker && self.value(first) == LBool::True {
                    watchers[kept] = updated;
                    kept += 1;
                    continue;
                }
                // Look for a non-false literal to take over the watch.
                let len = self.clauses[cref].lits.len();
                for slot in 2..len {
                    let candidate = self.clauses[cref].lits[slot];
                    if self.value(candidate) != LBool::False {
                        self.clauses[cref].lits.swap(1, slot);
                        self.watches[candidate.code()].push(updated);
                        continue 'watchers;
                    }
                }
                // None found: the clause is unit or conflicting.
                watchers[kept] = updated;
                kept += 1;
                if self.value(first) == LBool::False {
                    conflict = Some(watcher.clause);
                    self.qhead = self.trail.len();
                    while index < watchers.len() {
                        watchers[kept] = watchers[index];
                        kept += 1;
                        index += 1;
                    }
                    break;
                }
                self.assign(first, Some(watcher.clause));
            }
            watchers.truncate(kept);
            self.watches[false_lit.code()] = watchers;
            if conflict.is_some() {
                return conflict;
            }
        }
        None
    }

    /// First-UIP conflict analysis.  Returns the learnt clause (asserting
    /// literal first) and the level to backtrack to.
    fn analyze(&mut self, conflict: u32) -> (Vec<Lit>, usize) {
        let mut learnt = vec![Lit(0)];
        let mut todo_at_level = 0usize;
        let mut clause = conflict as usize;
        let mut skip_first = false;
        let mut trail_index = self.trail.len();
        let uip = loop {
            let len = self.clauses[clause].lits.len();
            for slot in usize::from(skip_first)..len {
                let lit = self.clauses[clause].lits[slot];
                let var = lit.var().index();
                if !self.seen[var] && self.level[var] > 0 {
                    self.seen[var] = true;
                    self.bump_var(var);
                    if self.level[var] as usize >= self.decision_level() {
                        todo_at_level += 1;
                    } else {
                        learnt.push(lit);
                    }
                }
            }
            // Walk the trail backwards to the next marked literal.
            loop {
                trail_index -= 1;
                if self.seen[self.trail[trail_index].var().index()] {
                    break;
                }
            }
            let lit = self.trail[trail_index];
            self.seen[lit.var().index()] = false;
            todo_at_level -= 1;
            if todo_at_level == 0 {
                break lit;
            }
            clause = self.reason[lit.var().index()]
                .expect("implied literal in conflict analysis must have a reason") as usize;
            skip_first = true;
        };
        learnt[0] = !uip;
        for lit in &learnt[1..] {
            self.seen[lit.var().index()] = false;
        }
        let backtrack = if learnt.len() == 1 {
            0
        } else {
            // Move the deepest remaining literal to the second watch slot.
            let mut deepest = 1;
            for slot in 2..learnt.len() {
                if self.level[learnt[slot].var().index()]
                    > self.level[learnt[deepest].var().index()]
                {
                    deepest = slot;
                }
            }
            learnt.swap(1, deepest);
            self.level[learnt[1].var().index()] as usize
        };
        (learnt, backtrack)
    }

    fn record_learnt(&mut self, learnt: Vec<Lit>) {
        debug_assert!(!learnt.is_empty());
        let asserting = learnt[0];
        if learnt.len() == 1 {
            self.cancel_until(0);
            self.assign(asserting, None);
            return;
        }
        let index = self.clauses.len() as u32;
        self.clauses.push(Clause {
            lits: learnt,
            learnt: true,
        });
        self.watch_clause(index);
        self.assign(asserting, Some(index));
    }

    /// The i-th term (0-based) of the Luby restart sequence
    /// 1, 1, 2, 1, 1, 2, 4, ...
    fn luby(mut i: u64) -> u64 {
        // Find the smallest full subsequence containing index i, then
        // narrow down to the position within it.
        let mut size = 1u64;
        while size < i + 1 {
            size = 2 * size + 1;
        }
        while size - 1 != i {
            size = (size - 1) / 2;
            i %= size;
        }
        (size + 1) / 2
    }

    #[cfg(debug_assertions)]
    fn debug_check_model(&self) {
        for clause in &self.clauses {
            if clause.learnt {
                continue;
            }
            assert!(
                clause.lits.iter().any(|&lit| self.value(lit) == LBool::True),
                "model does not satisfy clause {:?}",
                clause.lits
            );
        }
    }

    fn search(&mut self, assumptions: &[Lit]) -> SolveResult {
        let mut restarts = 0u64;
        let mut budget = Self::luby(0) * RESTART_UNIT;
        let mut conflicts_here = 0u64;
        loop {
            if let Some(conflict) = self.propagate() {
                self.conflicts += 1;
                conflicts_here += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveResult::unsat();
                }
                let (learnt, backtrack) = self.analyze(conflict);
                self.cancel_until(backtrack);
                self.record_learnt(learnt);
                self.decay_activities();
                continue;
            }
            if conflicts_here >= budget {
                restarts += 1;
                budget = Self::luby(restarts) * RESTART_UNIT;
                conflicts_here = 0;
                self.cancel_until(0);
                continue;
            }
            // Assumption prefix: one decision level per assumption, empty
            // levels for assumptions that already hold.
            if self.decision_level() < assumptions.len() {
                let lit = assumptions[self.decision_level()];
                match self.value(lit) {
                    LBool::True => {
                        self.new_decision_level();
                    }
                    LBool::False => return SolveResult::unsat(),
                    LBool::Undef => {
                        self.new_decision_level();
                        self.assign(lit, None);
                    }
                }
                continue;
            }
            // Pick the most active unassigned variable.
            let decision = loop {
                match self.order.pop_max(&self.activity) {
                    Some(var) if self.assigns[var as usize] == LBool::Undef => {
                        break Some(var);
                    }
                    Some(_) => continue,
                    None => break None,
                }
            };
            let Some(var) = decision else {
                // Every variable is assigned: a model.
                let model = Model(
                    self.assigns
                        .iter()
                        .map(|value| matches!(value, LBool::True))
                        .collect(),
                );
                #[cfg(debug_assertions)]
                self.debug_check_model();
                return SolveResult {
                    status: SolveStatus::Satisfiable,
                    model: Some(model),
                };
            };
            self.new_decision_level();
            let phase = self.polarity[var as usize];
            self.assign(Lit::new(Var(var), !phase), None);
        }
    }
}

impl SatBackend for CdclSolver {
    fn new_var(&mut self) -> Var {
        let var = Var(self.assigns.len() as u32);
        self.assigns.push(LBool::Undef);
        self.polarity.push(false);
        self.activity.push(0.0);
        self.level.push(0);
        self.reason.push(None);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.order.position.push(-1);
        self.order.push_var(&self.activity, var.0);
        var
    }

    fn num_vars(&self) -> usize {
        self.assigns.len()
    }

    /// Adds a clause, simplifying against the top-level assignment:
    /// duplicate literals collapse, tautologies are dropped, literals
    /// already false at level 0 are removed and clauses already true at
    /// level 0 are ignored.  The empty clause (given or derived) makes the
    /// solver permanently unsatisfiable.
    fn add_clause(&mut self, lits: &[Lit]) {
        self.cancel_until(0);
        if !self.ok {
            return;
        }
        let mut clause: Vec<Lit> = lits.to_vec();
        clause.sort_unstable();
        clause.dedup();
        let mut simplified = Vec::with_capacity(clause.len());
        let mut previous: Option<Lit> = None;
        for lit in clause {
            debug_assert!(lit.var().index() < self.num_vars(), "unallocated variable");
            if let Some(prev) = previous {
                if prev == !lit {
                    return; // tautology: p and not-p sort adjacently
                }
            }
            match self.value(lit) {
                LBool::True => return, // already satisfied at level 0
                LBool::False => {}     // falsified at level 0: drop literal
                LBool::Undef => simplified.push(lit),
            }
            previous = Some(lit);
        }
        self.num_original += 1;
        match simplified.len() {
            0 => {
                self.clauses.push(Clause {
                    lits: simplified,
                    learnt: false,
                });
                self.ok = false;
            }
            1 => {
                self.clauses.push(Clause {
                    lits: simplified.clone(),
                    learnt: false,
                });
                self.assign(simplified[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let index = self.clauses.len() as u32;
                self.clauses.push(Clause {
                    lits: simplified,
                    learnt: false,
                });
                self.watch_clause(index);
            }
        }
    }

    fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.cancel_until(0);
        if !self.ok {
            return SolveResult::unsat();
        }
        let result = self.search(assumptions);
        self.cancel_until(0);
        result
    }

    fn export_dimacs(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let count = self.clauses.iter().filter(|clause| !clause.learnt).count();
        let _ = writeln!(out, "p cnf {} {}", self.num_vars(), count);
        for clause in &self.clauses {
            if clause.learnt {
                continue;
            }
            // Watch maintenance permutes literals in place; print them in
            // their normalized (sorted) order so exports are stable.
            let mut lits = clause.lits.clone();
            lits.sort_unstable();
            for lit in lits {
                let _ = write!(out, "{} ", lit.to_dimacs());
            }
            let _ = writeln!(out, "0");
        }
        out
    }
}

/// Runs an external DIMACS solver process for each query.
///
/// The process is invoked as `command [args...] <cnf-file>` and must print
/// `SAT` followed by a model line of DIMACS literals terminated by `0`, or
/// `UNSAT` (the `s SATISFIABLE` / `v ...` competition dialect is accepted
/// too).  Assumptions are emulated by appending unit clauses to the
/// exported formula, which keeps the incremental interface intact at the
/// cost of re-running the process per query.
pub struct ExternalSolver {
    command: Vec<String>,
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
}

impl ExternalSolver {
    /// Creates a backend that shells out to `command` (program + fixed
    /// arguments).
    ///
    /// # Panics
    /// Panics if `command` is empty.
    pub fn new(command: Vec<String>) -> ExternalSolver {
        assert!(!command.is_empty(), "external solver command must be set");
        ExternalSolver {
            command,
            num_vars: 0,
            clauses: Vec::new(),
        }
    }

    fn render_dimacs(&self, extra_units: &[Lit]) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "p cnf {} {}",
            self.num_vars,
            self.clauses.len() + extra_units.len()
        );
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(out, "{} ", lit.to_dimacs());
            }
            let _ = writeln!(out, "0");
        }
        for lit in extra_units {
            let _ = writeln!(out, "{} 0", lit.to_dimacs());
        }
        out
    }
}

impl SatBackend for ExternalSolver {
    fn new_var(&mut self) -> Var {
        let var = Var(self.num_vars as u32);
        self.num_vars += 1;
        var
    }

    fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        self.clauses.push(lits.to_vec());
    }

    fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        let mut file = tempfile::Builder::new()
            .prefix("softerr-cnf-")
            .suffix(".cnf")
            .tempfile()
            .expect("failed to create temporary CNF file");
        file.write_all(self.render_dimacs(assumptions).as_bytes())
            .expect("failed to write temporary CNF file");
        let output = Command::new(&self.command[0])
            .args(&self.command[1..])
            .arg(file.path())
            .output()
            .unwrap_or_else(|error| {
                panic!("failed to run external solver {:?}: {error}", self.command)
            });
        let stdout = String::from_utf8_lossy(&output.stdout);
        let mut verdict: Option<bool> = None;
        let mut values = vec![false; self.num_vars];
        for line in stdout.lines() {
            let line = line.trim();
            match line {
                "SAT" | "s SATISFIABLE" => verdict = Some(true),
                "UNSAT" | "s UNSATISFIABLE" => verdict = Some(false),
                _ => {
                    for token in line.split_whitespace() {
                        if token == "v" {
                            continue;
                        }
                        let Ok(value) = token.parse::<i64>() else {
                            break;
                        };
                        if value != 0 {
                            let index = value.unsigned_abs() as usize - 1;
                            if index < values.len() {
                                values[index] = value > 0;
                            }
                        }
                    }
                }
            }
        }
        match verdict {
            Some(true) => SolveResult {
                status: SolveStatus::Satisfiable,
                model: Some(Model(values)),
            },
            Some(false) => SolveResult::unsat(),
            None => panic!(
                "external solver {:?} produced no SAT/UNSAT verdict",
                self.command
            ),
        }
    }

    fn export_dimacs(&self) -> String {
        self.render_dimacs(&[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vars(solver: &mut CdclSolver, n: usize) -> Vec<Lit> {
        (0..n).map(|_| solver.new_var().positive()).collect()
    }

    /// Exhaustive satisfiability check used as the ground truth.
    fn brute_force_sat(num_vars: usize, clauses: &[Vec<Lit>]) -> bool {
        assert!(num_vars <= 24);
        (0..1u64 << num_vars).any(|bits| {
            clauses.iter().all(|clause| {
                clause.iter().any(|lit| {
                    let value = (bits >> lit.var().index()) & 1 == 1;
                    value != lit.is_negated()
                })
            })
        })
    }

    #[test]
    fn empty_instance_is_satisfiable() {
        let mut solver = CdclSolver::new();
        let result = solver.solve(&[]);
        assert!(result.is_sat());
        assert_eq!(result.model, Some(Model(vec![])));
    }

    #[test]
    fn fresh_vars_have_dense_increasing_ids() {
        let mut solver = CdclSolver::new();
        let a = solver.new_var();
        let b = solver.new_var();
        assert_eq!(a.id(), 1);
        assert_eq!(b.id(), 2);
        assert_eq!(solver.num_vars(), 2);

        // Allocation stays cheap and ids stay unique at scale.
        let mut solver = CdclSolver::new();
        let mut last = 0;
        for _ in 0..1_000_000 {
            let var = solver.new_var();
            assert!(var.id() > last);
            last = var.id();
        }
        assert_eq!(solver.num_vars(), 1_000_000);
    }

    #[test]
    fn unconstrained_model_prefers_all_false() {
        let mut solver = CdclSolver::new();
        let lits = vars(&mut solver, 5);
        let result = solver.solve(&[]);
        let model = result.model.unwrap();
        assert!(lits.iter().all(|&lit| !model.value(lit)));
    }

    #[test]
    fn unit_and_contradiction() {
        let mut solver = CdclSolver::new();
        let [a] = vars(&mut solver, 1)[..] else {
            unreachable!()
        };
        solver.add_clause(&[a]);
        let result = solver.solve(&[]);
        assert!(result.is_sat());
        assert!(result.model.unwrap().value(a));

        solver.add_clause(&[!a]);
        assert!(!solver.solve(&[]).is_sat());
        // Permanently unsatisfiable from here on.
        assert!(!solver.solve(&[]).is_sat());
    }

    #[test]
    fn empty_clause_is_permanent() {
        let mut solver = CdclSolver::new();
        let _ = vars(&mut solver, 2);
        solver.add_clause(&[]);
        assert!(!solver.solve(&[]).is_sat());
        assert!(!solver.solve(&[]).is_sat());
    }

    #[test]
    fn simple_implication_chain() {
        let mut solver = CdclSolver::new();
        let lits = vars(&mut solver, 4);
        for window in lits.windows(2) {
            solver.add_clause(&[!window[0], window[1]]);
        }
        solver.add_clause(&[lits[0]]);
        let result = solver.solve(&[]);
        let model = result.model.unwrap();
        assert!(lits.iter().all(|&lit| model.value(lit)));
    }

    #[test]
    fn assumptions_do_not_stick() {
        let mut solver = CdclSolver::new();
        let [a, b] = vars(&mut solver, 2)[..] else {
            unreachable!()
        };
        solver.add_clause(&[a, b]);
        let result = solver.solve(&[!a]);
        assert!(result.is_sat());
        assert!(result.model.unwrap().value(b));

        let result = solver.solve(&[!b]);
        assert!(result.is_sat());
        assert!(result.model.unwrap().value(a));

        assert!(!solver.solve(&[!a, !b]).is_sat());
        // The failed assumption set leaves no residue.
        assert!(solver.solve(&[]).is_sat());
    }

    #[test]
    fn conflicting_assumptions_are_unsat() {
        let mut solver = CdclSolver::new();
        let [a] = vars(&mut solver, 1)[..] else {
            unreachable!()
        };
        assert!(!solver.solve(&[a, !a]).is_sat());
        assert!(solver.solve(&[a, a]).is_sat());
    }

    #[test]
    fn all_solutions_by_blocking() {
        let mut solver = CdclSolver::new();
        let [a, b] = vars(&mut solver, 2)[..] else {
            unreachable!()
        };
        solver.add_clause(&[a, b]);
        let mut seen = Vec::new();
        loop {
            let result = solver.solve(&[]);
            let Some(model) = result.model else { break };
            seen.push((model.value(a), model.value(b)));
            let blocking: Vec<Lit> = [a, b]
                .iter()
                .map(|&lit| if model.value(lit) { !lit } else { lit })
                .collect();
            solver.add_clause(&blocking);
        }
        seen.sort();
        assert_eq!(
            seen,
            vec![(false, true), (true, false), (true, true)]
        );
    }

    #[test]
    fn pigeonhole_five_into_four_is_unsat() {
        // p[i][j]: pigeon i sits in hole j.
        let mut solver = CdclSolver::new();
        let p: Vec<Vec<Lit>> = (0..5)
            .map(|_| (0..4).map(|_| solver.new_var().positive()).collect())
            .collect();
        for pigeon in &p {
            solver.add_clause(pigeon);
        }
        for hole in 0..4 {
            for i in 0..5 {
                for k in i + 1..5 {
                    solver.add_clause(&[!p[i][hole], !p[k][hole]]);
                }
            }
        }
        assert!(!solver.solve(&[]).is_sat());
    }

    #[test]
    fn tautologies_and_duplicates_are_harmless() {
        let mut solver = CdclSolver::new();
        let [a, b] = vars(&mut solver, 2)[..] else {
            unreachable!()
        };
        solver.add_clause(&[a, !a, b]);
        solver.add_clause(&[b, b, b]);
        let result = solver.solve(&[]);
        assert!(result.is_sat());
        assert!(result.model.unwrap().value(b));
    }

    #[test]
    fn matches_brute_force_on_random_cnf() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for round in 0..300 {
            let num_vars = rng.gen_range(1..=12);
            let num_clauses = rng.gen_range(1..=num_vars * 5);
            let mut solver = CdclSolver::new();
            let lits = vars(&mut solver, num_vars);
            let mut clauses = Vec::new();
            for _ in 0..num_clauses {
                let len = rng.gen_range(1..=3.min(num_vars));
                let mut clause = Vec::new();
                for _ in 0..len {
                    let var = rng.gen_range(0..num_vars);
                    let lit = if rng.gen() { lits[var] } else { !lits[var] };
                    clause.push(lit);
                }
                solver.add_clause(&clause);
                clauses.push(clause);
            }
            let expected = brute_force_sat(num_vars, &clauses);
            let result = solver.solve(&[]);
            assert_eq!(
                result.is_sat(),
                expected,
                "verdict mismatch on round {round}"
            );
            if let Some(model) = result.model {
                for clause in &clauses {
                    assert!(clause.iter().any(|&lit| model.value(lit)));
                }
            }
        }
    }

    #[test]
    fn matches_brute_force_on_larger_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0xbead);
        for _ in 0..4 {
            let num_vars = 20;
            let num_clauses = 85;
            let mut solver = CdclSolver::new();
            let lits = vars(&mut solver, num_vars);
            let mut clauses = Vec::new();
            for _ in 0..num_clauses {
                let mut clause = Vec::new();
                for _ in 0..3 {
                    let var = rng.gen_range(0..num_vars);
                    let lit = if rng.gen() { lits[var] } else { !lits[var] };
                    clause.push(lit);
                }
                solver.add_clause(&clause);
                clauses.push(clause);
            }
            let expected = brute_force_sat(num_vars, &clauses);
            assert_eq!(solver.solve(&[]).is_sat(), expected);
        }
    }

    #[test]
    fn assumptions_agree_with_added_units() {
        // Solving under assumption [l] must match a clone with unit [l].
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let num_vars = rng.gen_range(2..=10);
            let num_clauses = rng.gen_range(1..=num_vars * 4);
            let mut clauses = Vec::new();
            let mut solver = CdclSolver::new();
            let lits = vars(&mut solver, num_vars);
            for _ in 0..num_clauses {
                let len = rng.gen_range(1..=3.min(num_vars));
                let clause: Vec<Lit> = (0..len)
                    .map(|_| {
                        let var = rng.gen_range(0..num_vars);
                        if rng.gen() {
                            lits[var]
                        } else {
                            !lits[var]
                        }
                    })
                    .collect();
                solver.add_clause(&clause);
                clauses.push(clause);
            }
            let assumption = {
                let var = rng.gen_range(0..num_vars);
                if rng.gen() {
                    lits[var]
                } else {
                    !lits[var]
                }
            };
            let mut reference = clauses.clone();
            reference.push(vec![assumption]);
            let expected = brute_force_sat(num_vars, &reference);
            assert_eq!(solver.solve(&[assumption]).is_sat(), expected);
            // And the base instance is untouched by the assumption.
            assert_eq!(
                solver.solve(&[]).is_sat(),
                brute_force_sat(num_vars, &clauses)
            );
        }
    }

    #[test]
    fn dimacs_export_format() {
        let solver = CdclSolver::new();
        assert_eq!(solver.export_dimacs(), "p cnf 0 0\n");

        let mut solver = CdclSolver::new();
        let [a, b] = vars(&mut solver, 2)[..] else {
            unreachable!()
        };
        solver.add_clause(&[a, !b]);
        assert_eq!(solver.export_dimacs(), "p cnf 2 1\n1 -2 0\n");
    }

    #[test]
    fn dimacs_export_skips_learnt_clauses() {
        let mut solver = CdclSolver::new();
        let lits = vars(&mut solver, 6);
        for window in lits.windows(2) {
            solver.add_clause(&[!window[0], window[1]]);
        }
        solver.add_clause(&[lits[0], lits[5]]);
        let before = solver.export_dimacs();
        let _ = solver.solve(&[!lits[5]]);
        assert_eq!(solver.export_dimacs(), before);
    }

    #[test]
    fn luby_sequence_prefix() {
        let prefix: Vec<u64> = (0..15).map(CdclSolver::luby).collect();
        assert_eq!(prefix, vec![1, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8]);
    }

    #[test]
    fn deterministic_models_across_reruns() {
        let build = || {
            let mut solver = CdclSolver::new();
            let lits = vars(&mut solver, 12);
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            for _ in 0..30 {
                let clause: Vec<Lit> = (0..3)
                    .map(|_| {
                        let var = rng.gen_range(0..12);
                        if rng.gen() {
                            lits[var]
                        } else {
                            !lits[var]
                        }
                    })
                    .collect();
                solver.add_clause(&clause);
            }
            solver.solve(&[]).model
        };
        assert_eq!(build(), build());
    }
}
