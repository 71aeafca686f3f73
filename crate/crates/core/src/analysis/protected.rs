//! Bounded protection proofs: a latch is `(j, k)`-protected when no
//! single flip of it, struck in any admissible start state, can diverge
//! the data outputs within `k` steps — or the latch states at step
//! `k + 1` — before the faulty copy's alarm rises, while the fault-free
//! copy keeps its own alarm low over the whole window.
//!
//! Admissible start states are `approx(j)`: everything reachable from the
//! reset state within `j` steps, plus everything *some* state reaches in
//! exactly `j` alarm-free steps.  `j = 0` admits every state, making the
//! proof independent of reachability assumptions.
//!
//! The search takes no test case and no environment model: inputs are
//! fully unconstrained, and a single solver instance removes latches from
//! the protected set one counterexample at a time until the query formula
//! becomes unsatisfiable.  The fault is pinned to the start of the
//! window; generality comes from the free start state.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use crate::aiger::Circuit;
use crate::analysis::{
    bits_to_string, validate_analysis_inputs, AnalysisError, ProtectionReport, WitnessTrace,
};
use crate::cnf::{
    encode_exactly_one, encode_frame, encode_vector_compare, initial_state_lits, model_values,
    CnfContext, FaultVars, Frame, FrameCopy, VectorRelation,
};
use crate::sat::{Lit, Model};

/// Hard upper bound on the start-state bound `j`.
pub const MAX_REACH_BOUND: usize = 8;
/// Hard upper bound on the window length `k`.
pub const MAX_WINDOW: usize = 32;

/// Parameters of one protection query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtectionQuery {
    /// Start-state bound: see the module docs. `0` admits every state.
    pub j: usize,
    /// Window length: divergence is searched over `k` steps.
    pub k: usize,
    pub injectable: BTreeSet<usize>,
    /// Wall-clock budget; when exceeded, still-undecided latches are
    /// reported unclassified rather than silently protected.
    pub deadline: Option<Duration>,
}

impl ProtectionQuery {
    /// The base query: any start state, single-step window.
    pub fn new(injectable: BTreeSet<usize>) -> ProtectionQuery {
        ProtectionQuery {
            j: 0,
            k: 1,
            injectable,
            deadline: None,
        }
    }
}

/// Returns a literal that is true iff the values of `start` form a state
/// reachable from the reset state within `j` steps (with no alarm
/// requirement along the way).
pub fn reach_states(ctx: &mut CnfContext, circuit: &Circuit, j: usize, start: &[Lit]) -> Lit {
    let mut state = initial_state_lits(ctx, circuit);
    let mut hits = vec![encode_vector_compare(
        ctx,
        &state,
        start,
        VectorRelation::Equal,
    )];
    for step in 1..=j {
        let inputs: Vec<Lit> = circuit.inputs.iter().map(|_| ctx.fresh()).collect();
        let frame = encode_frame(ctx, circuit, step, FrameCopy::FaultFree, inputs, state);
        state = frame.next_latches;
        hits.push(encode_vector_compare(
            ctx,
            &state,
            start,
            VectorRelation::Equal,
        ));
    }
    ctx.big_or(&hits)
}

/// Returns a literal that is true iff the values of `start` form an
/// admissible window start: either some state reaches them in exactly
/// `j` alarm-free steps, or they are reachable from reset within `j`
/// steps.  With `j = 0` the constraint is trivially true.
pub fn build_approx(ctx: &mut CnfContext, circuit: &Circuit, j: usize, start: &[Lit]) -> Lit {
    if j == 0 {
        return ctx.constant(true);
    }
    let mut terms: Vec<Lit> = Vec::with_capacity(j + 1);
    let mut state: Vec<Lit> = circuit.latches.iter().map(|_| ctx.fresh()).collect();
    for step in 1..=j {
        let inputs: Vec<Lit> = circuit.inputs.iter().map(|_| ctx.fresh()).collect();
        let frame = encode_frame(ctx, circuit, step, FrameCopy::FaultFree, inputs, state);
        terms.push(!frame.alarm.expect("alarm designated before analysis"));
        state = frame.next_latches;
    }
    terms.push(encode_vector_compare(
        ctx,
        &state,
        start,
        VectorRelation::Equal,
    ));
    let anywhere = ctx.big_and(&terms);
    let reachable = reach_states(ctx, circuit, j, start);
    ctx.big_or(&[anywhere, reachable])
}

fn window_witness(
    model: &Model,
    start: &[Lit],
    ff: &[Frame],
    faulty: &[Frame],
    fault_latch: usize,
    window: usize,
) -> WitnessTrace {
    let mut through = None;
    for d in 1..=window {
        let alarm = faulty[d - 1].alarm.expect("alarm designated before analysis");
        if model.value(alarm) {
            break; // the alarm preceded any divergence on this run
        }
        let outputs_differ = model_values(model, &ff[d - 1].data_outputs)
            != model_values(model, &faulty[d - 1].data_outputs);
        let states_differ = d == window
            && model_values(model, &ff[d - 1].next_latches)
                != model_values(model, &faulty[d - 1].next_latches);
        if outputs_differ || states_differ {
            through = Some(d);
            break;
        }
    }
    let through = through.expect("the divergence disjunction holds in the model");
    let rows = |frames: &[Frame], pick: &dyn Fn(&Frame) -> Vec<Lit>| -> Vec<String> {
        frames[..through]
            .iter()
            .map(|frame| bits_to_string(&model_values(model, &pick(frame))))
            .collect()
    };
    let alarm_bits = |frames: &[Frame]| -> String {
        frames[..through]
            .iter()
            .map(|frame| {
                let alarm = frame.alarm.expect("alarm designated before analysis");
                if model.value(alarm) {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    };
    WitnessTrace {
        fault_latch,
        fault_step: 1,
        initial_state: bits_to_string(&model_values(model, start)),
        inputs: rows(ff, &|frame| frame.inputs.clone()),
        outputs_ff: rows(ff, &|frame| frame.data_outputs.clone()),
        outputs_faulty: rows(faulty, &|frame| frame.data_outputs.clone()),
        alarm_ff: alarm_bits(ff),
        alarm_faulty: alarm_bits(faulty),
    }
}

/// Classifies every injectable latch as protected within the query's
/// window, or attaches a counterexample run, or (only under a deadline)
/// leaves it unclassified.
pub fn find_protected(
    circuit: &Circuit,
    query: &ProtectionQuery,
) -> Result<ProtectionReport, AnalysisError> {
    validate_analysis_inputs(circuit, None, None, &query.injectable)?;
    if query.k < 1 || query.k > MAX_WINDOW {
        return Err(AnalysisError::WindowOutOfRange {
            k: query.k,
            max: MAX_WINDOW,
        });
    }
    if query.j > MAX_REACH_BOUND {
        return Err(AnalysisError::ReachBoundOutOfRange {
            j: query.j,
            max: MAX_REACH_BOUND,
        });
    }
    let started = Instant::now();
    let mut ctx = CnfContext::embedded();
    let fault = FaultVars::new(&mut ctx, &query.injectable);
    encode_exactly_one(&mut ctx, &fault.location_lits());
    let start: Vec<Lit> = circuit.latches.iter().map(|_| ctx.fresh()).collect();
    let admissible = build_approx(&mut ctx, circuit, query.j, &start);
    ctx.add_clause(&[admissible]);
    // The faulty copy starts from the same state with the selected latch
    // flipped; no further faults strike during the window.
    let faulty_start: Vec<Lit> = start
        .iter()
        .enumerate()
        .map(|(latch, &bit)| match fault.lit_for(latch) {
            Some(location) => ctx.xor_lit(bit, location),
            None => bit,
        })
        .collect();
    let mut ff_frames: Vec<Frame> = Vec::with_capacity(query.k);
    let mut faulty_frames: Vec<Frame> = Vec::with_capacity(query.k);
    for step in 1..=query.k {
        let inputs: Vec<Lit> = circuit.inputs.iter().map(|_| ctx.fresh()).collect();
        let ff_state = if step == 1 {
            start.clone()
        } else {
            ff_frames[step - 2].next_latches.clone()
        };
        let faulty_state = if step == 1 {
            faulty_start.clone()
        } else {
            faulty_frames[step - 2].next_latches.clone()
        };
        let ff = encode_frame(
            &mut ctx,
            circuit,
            step,
            FrameCopy::FaultFree,
            inputs.clone(),
            ff_state,
        );
        let faulty = encode_frame(&mut ctx, circuit, step, FrameCopy::Faulty, inputs, faulty_state);
        let ff_alarm = ff.alarm.expect("alarm designated before analysis");
        ctx.add_clause(&[!ff_alarm]);
        ff_frames.push(ff);
        faulty_frames.push(faulty);
    }
    // One disjunct per divergence depth: the faulty alarm is still quiet
    // through depth d and the data outputs differ there; at the window
    // end, surviving state divergence one step later also counts.
    let mut disjuncts = Vec::with_capacity(query.k);
    let mut quiet_prefix = ctx.constant(true);
    for d in 1..=query.k {
        let faulty_alarm = faulty_frames[d - 1]
            .alarm
            .expect("alarm designated before analysis");
        quiet_prefix = ctx.and_lit(quiet_prefix, !faulty_alarm);
        let mut diverged = encode_vector_compare(
            &mut ctx,
            &ff_frames[d - 1].data_outputs,
            &faulty_frames[d - 1].data_outputs,
            VectorRelation::NotEqual,
        );
        if d == query.k {
            let states_differ = encode_vector_compare(
                &mut ctx,
                &ff_frames[d - 1].next_latches,
                &faulty_frames[d - 1].next_latches,
                VectorRelation::NotEqual,
            );
            diverged = ctx.big_or(&[diverged, states_differ]);
        }
        disjuncts.push(ctx.and_lit(quiet_prefix, diverged));
    }
    ctx.add_clause(&disjuncts);

    let mut report = ProtectionReport {
        injectable: query.injectable.clone(),
        protected_latches: query.injectable.clone(),
        ..ProtectionReport::default()
    };
    loop {
        if let Some(budget) = query.deadline {
            if started.elapsed() >= budget {
                report.unclassified = std::mem::take(&mut report.protected_latches);
                break;
            }
        }
        let result = ctx.solve(&[]);
        let Some(model) = result.model else { break };
        let latch = fault
            .locations
            .iter()
            .find(|&&(_, lit)| model.value(lit))
            .map(|&(latch, _)| latch)
            .expect("the one-hot location constraint selects a latch");
        let witness = window_witness(&model, &start, &ff_frames, &faulty_frames, latch, query.k);
        report.protected_latches.remove(&latch);
        report.counterexamples.insert(latch, witness);
        let location = fault.lit_for(latch).expect("found above");
        ctx.add_clause(&[!location]);
    }
    Ok(report)
}
