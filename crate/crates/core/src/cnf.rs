//! Clause-level encoding of circuits: Tseitin translation of the
//! combinational logic, step-indexed unrolling frames for a fault-free
//! and a faulty copy, fault-selection variables, cardinality constraints,
//! vector comparisons, and environment-model constraints.
//!
//! The layout mirrors the analyses' two-copy construction: per step both
//! copies get a frame and share the step's input literals; the faulty
//! copy's next-state is the fault-free update of its own state,
//! XOR-flipped at latch `i` exactly when the step's fault variable and
//! the latch's location variable are both true.  Every AND node receives
//! its own definition variable (three clauses); there is no structural
//! hashing, so clause counts are predictable and the per-node literals
//! can be compared against concrete simulation runs bit for bit.

use std::collections::BTreeSet;

use crate::aiger::{Circuit, Literal};
use crate::sat::{CdclSolver, Lit, Model, SatBackend, SolveResult};
use crate::testcase::TestCase;

/// A solver paired with a pinned constant-true literal.
pub struct CnfContext {
    backend: Box<dyn SatBackend>,
    true_lit: Lit,
}

impl CnfContext {
    pub fn new(mut backend: Box<dyn SatBackend>) -> CnfContext {
        let true_lit = backend.new_var().positive();
        backend.add_clause(&[true_lit]);
        CnfContext { backend, true_lit }
    }

    /// A context over the embedded solver.
    pub fn embedded() -> CnfContext {
        CnfContext::new(Box::new(CdclSolver::new()))
    }

    pub fn fresh(&mut self) -> Lit {
        self.backend.new_var().positive()
    }

    /// The pinned literal for a boolean constant.
    pub fn constant(&self, value: bool) -> Lit {
        if value {
            self.true_lit
        } else {
            !self.true_lit
        }
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.backend.add_clause(lits);
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.backend.solve(assumptions)
    }

    pub fn num_vars(&self) -> usize {
        self.backend.num_vars()
    }

    pub fn export_dimacs(&self) -> String {
        self.backend.export_dimacs()
    }

    /// Definition variable for `a AND b` (three clauses).
    pub fn and_lit(&mut self, a: Lit, b: Lit) -> Lit {
        let v = self.fresh();
        self.add_clause(&[!v, a]);
        self.add_clause(&[!v, b]);
        self.add_clause(&[v, !a, !b]);
        v
    }

    /// Definition variable for `a XOR b` (four clauses).
    pub fn xor_lit(&mut self, a: Lit, b: Lit) -> Lit {
        let v = self.fresh();
        self.add_clause(&[!v, a, b]);
        self.add_clause(&[!v, !a, !b]);
        self.add_clause(&[v, a, !b]);
        self.add_clause(&[v, !a, b]);
        v
    }

    /// Definition variable for `a = b`.
    pub fn equal_lit(&mut self, a: Lit, b: Lit) -> Lit {
        !self.xor_lit(a, b)
    }

    /// Definition variable for the conjunction of `lits` (true constant
    /// for none, passthrough for one).
    pub fn big_and(&mut self, lits: &[Lit]) -> Lit {
        match lits {
            [] => self.constant(true),
            [only] => *only,
            _ => {
                let v = self.fresh();
                let mut long = Vec::with_capacity(lits.len() + 1);
                long.push(v);
                for &lit in lits {
                    self.add_clause(&[!v, lit]);
                    long.push(!lit);
                }
                self.add_clause(&long);
                v
            }
        }
    }

    /// Definition variable for the disjunction of `lits`.
    pub fn big_or(&mut self, lits: &[Lit]) -> Lit {
        let negated: Vec<Lit> = lits.iter().map(|&lit| !lit).collect();
        !self.big_and(&negated)
    }
}

/// Which copy of the circuit a frame belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameCopy {
    FaultFree,
    Faulty,
}

/// Solver literals for one circuit copy during one step.
#[derive(Clone, Debug)]
pub struct Frame {
    /// 1-based step index.
    pub step: usize,
    pub copy: FrameCopy,
    /// One literal per primary input; shared with the sibling copy.
    pub inputs: Vec<Lit>,
    /// Latch state at the start of the step.
    pub latches: Vec<Lit>,
    /// All outputs in declaration order.
    pub outputs: Vec<Lit>,
    /// Outputs excluding the alarm.
    pub data_outputs: Vec<Lit>,
    /// The designated alarm output, if the circuit has outputs.
    pub alarm: Option<Lit>,
    /// Latch state at the start of the following step, before any fault
    /// is applied.
    pub next_latches: Vec<Lit>,
}

fn lift(map: &[Lit], literal: Literal) -> Lit {
    let base = map[literal.var() as usize];
    if literal.is_negated() {
        !base
    } else {
        base
    }
}

/// Encodes one copy's combinational step over the given input and state
/// literals, allocating a definition variable per AND gate.
pub fn encode_frame(
    ctx: &mut CnfContext,
    circuit: &Circuit,
    step: usize,
    copy: FrameCopy,
    inputs: Vec<Lit>,
    latches: Vec<Lit>,
) -> Frame {
    assert_eq!(inputs.len(), circuit.inputs.len(), "input arity mismatch");
    assert_eq!(latches.len(), circuit.latches.len(), "latch arity mismatch");
    let mut map = vec![ctx.constant(false); circuit.max_var as usize + 1];
    for (position, literal) in circuit.inputs.iter().enumerate() {
        map[literal.var() as usize] = inputs[position];
    }
    for (position, latch) in circuit.latches.iter().enumerate() {
        map[latch.current.var() as usize] = latches[position];
    }
    for gate in &circuit.ands {
        let a = lift(&map, gate.rhs0);
        let b = lift(&map, gate.rhs1);
        map[gate.lhs.var() as usize] = ctx.and_lit(a, b);
    }
    let outputs: Vec<Lit> = circuit
        .outputs
        .iter()
        .map(|&literal| lift(&map, literal))
        .collect();
    let data_outputs = circuit
        .data_output_indices()
        .iter()
        .map(|&index| outputs[index])
        .collect();
    let next_latches = circuit
        .latches
        .iter()
        .map(|latch| lift(&map, latch.next))
        .collect();
    Frame {
        step,
        copy,
        alarm: circuit.alarm.map(|index| outputs[index]),
        inputs,
        latches,
        outputs,
        data_outputs,
        next_latches,
    }
}

/// Literals for the state at step 1: constants for defined resets, one
/// fresh variable per unconstrained reset (callers pass the same vector
/// to both copies so they start identically).
pub fn initial_state_lits(ctx: &mut CnfContext, circuit: &Circuit) -> Vec<Lit> {
    circuit
        .latches
        .iter()
        .map(|latch| match latch.reset {
            crate::aiger::Reset::Zero => ctx.constant(false),
            crate::aiger::Reset::One => ctx.constant(true),
            crate::aiger::Reset::Free => ctx.fresh(),
        })
        .collect()
}

/// Unrolls the fault-free copy one step: fresh inputs, state carried over
/// from `from`'s next-state literals.
pub fn encode_transition(ctx: &mut CnfContext, circuit: &Circuit, from: &Frame) -> Frame {
    assert!(
        !circuit.latches.is_empty(),
        "cannot unroll a circuit without latches"
    );
    let inputs: Vec<Lit> = circuit.inputs.iter().map(|_| ctx.fresh()).collect();
    encode_frame(
        ctx,
        circuit,
        from.step + 1,
        from.copy,
        inputs,
        from.next_latches.clone(),
    )
}

/// Per-latch fault-location variables (`c`), restricted to the injectable
/// set.  [`encode_exactly_one`] over [`FaultVars::location_lits`] must be
/// emitted before solving.
#[derive(Clone, Debug)]
pub struct FaultVars {
    /// `(latch position, location variable)`, ascending by position.
    pub locations: Vec<(usize, Lit)>,
}

impl FaultVars {
    pub fn new(ctx: &mut CnfContext, injectable: &BTreeSet<usize>) -> FaultVars {
        FaultVars {
            locations: injectable.iter().map(|&latch| (latch, ctx.fresh())).collect(),
        }
    }

    pub fn location_lits(&self) -> Vec<Lit> {
        self.locations.iter().map(|&(_, lit)| lit).collect()
    }

    /// The location variable guarding `latch`, if it is injectable.
    pub fn lit_for(&self, latch: usize) -> Option<Lit> {
        self.locations
            .binary_search_by_key(&latch, |&(position, _)| position)
            .ok()
            .map(|index| self.locations[index].1)
    }
}

/// Unrolls the faulty copy one step.  Its starting state is `from`'s own
/// next-state, XOR-flipped at each injectable latch `i` exactly when
/// `fault_now AND c_i`; inputs are shared with the fault-free frame of
/// the same step.
pub fn encode_faulty_transition(
    ctx: &mut CnfContext,
    circuit: &Circuit,
    from: &Frame,
    shared_inputs: &[Lit],
    fault_now: Lit,
    fault: &FaultVars,
) -> Frame {
    assert_eq!(from.copy, FrameCopy::Faulty, "from must be the faulty copy");
    let state: Vec<Lit> = from
        .next_latches
        .iter()
        .enumerate()
        .map(|(latch, &next)| match fault.lit_for(latch) {
            Some(location) => {
                let flip = ctx.and_lit(fault_now, location);
                ctx.xor_lit(next, flip)
            }
            None => next,
        })
        .collect();
    encode_frame(
        ctx,
        circuit,
        from.step + 1,
        FrameCopy::Faulty,
        shared_inputs.to_vec(),
        state,
    )
}

/// Constrains exactly one of `lits` to be true using the sequential
/// counter (ladder) encoding.
///
/// # Panics
/// Panics on an empty list.
pub fn encode_exactly_one(ctx: &mut CnfContext, lits: &[Lit]) {
    assert!(!lits.is_empty(), "exactly-one needs at least one variable");
    ctx.add_clause(lits); // at least one
    if lits.len() == 1 {
        return;
    }
    // ladder[i] = "some of lits[..=i] is true"; a later true literal with
    // the ladder already set is a second one.
    let mut ladder_prev = lits[0];
    for (index, &lit) in lits.iter().enumerate().skip(1) {
        ctx.add_clause(&[!lit, !ladder_prev]);
        if index + 1 < lits.len() {
            let ladder = ctx.fresh();
            ctx.add_clause(&[!ladder_prev, ladder]);
            ctx.add_clause(&[!lit, ladder]);
            ladder_prev = ladder;
        }
    }
}

/// Constrains at most one of the per-step fault variables to be true
/// using pairwise implications (`f_s → ¬f_j`); the all-false assignment
/// stays allowed.  Analyses extending `f` one step at a time add just the
/// new pairs themselves; this one-shot form emits every pair.
pub fn encode_at_most_one_fault_time(ctx: &mut CnfContext, f: &[Lit]) {
    for (index, &later) in f.iter().enumerate() {
        for &earlier in &f[..index] {
            ctx.add_clause(&[!later, !earlier]);
        }
    }
}

/// Which relation [`encode_vector_compare`] reifies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorRelation {
    Equal,
    NotEqual,
}

/// Returns a literal that is true in a model iff the two equal-width
/// vectors stand in `relation`.
///
/// # Panics
/// Panics on a width mismatch.
pub fn encode_vector_compare(
    ctx: &mut CnfContext,
    a: &[Lit],
    b: &[Lit],
    relation: VectorRelation,
) -> Lit {
    assert_eq!(a.len(), b.len(), "vector compare width mismatch");
    let bits: Vec<Lit> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| ctx.equal_lit(x, y))
        .collect();
    let equal = ctx.big_and(&bits);
    match relation {
        VectorRelation::Equal => equal,
        VectorRelation::NotEqual => !equal,
    }
}

/// Lockstep unrolling of an environment model over the main circuit's
/// input literals, forcing its `valid` output true at each constrained
/// step.
pub struct EnvUnroller {
    state: Vec<Lit>,
    step: usize,
}

impl EnvUnroller {
    /// # Panics
    /// Panics unless the environment has exactly one output and reads
    /// `main_inputs` inputs.
    pub fn new(ctx: &mut CnfContext, env: &Circuit, main_inputs: usize) -> EnvUnroller {
        assert_eq!(
            env.inputs.len(),
            main_inputs,
            "environment model must read the main circuit's inputs"
        );
        assert_eq!(
            env.outputs.len(),
            1,
            "environment model must have exactly one (valid) output"
        );
        EnvUnroller {
            state: initial_state_lits(ctx, env),
            step: 0,
        }
    }

    /// Unrolls the environment over one step's shared input literals and
    /// constrains its valid output true at that step.
    pub fn constrain_step(&mut self, ctx: &mut CnfContext, env: &Circuit, shared_inputs: &[Lit]) {
        self.step += 1;
        let frame = encode_frame(
            ctx,
            env,
            self.step,
            FrameCopy::FaultFree,
            shared_inputs.to_vec(),
            self.state.clone(),
        );
        ctx.add_clause(&[frame.outputs[0]]);
        self.state = frame.next_latches;
    }
}

/// Input literals for one test-case step: constants for concrete bits,
/// fresh unconstrained variables for open bits.
pub fn testcase_step_lits(ctx: &mut CnfContext, test: &TestCase, step: usize) -> Vec<Lit> {
    test.step(step)
        .iter()
        .map(|bit| match bit.value() {
            Some(value) => ctx.constant(value),
            None => ctx.fresh(),
        })
        .collect()
}

/// Reads a vector of literals back from a model.
pub fn model_values(model: &Model, lits: &[Lit]) -> Vec<bool> {
    lits.iter().map(|&lit| model.value(lit)).collect()
}
