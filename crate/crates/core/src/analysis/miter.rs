//! Self-composition for external checkers: both circuit copies, the
//! fault-location selectors and a single-shot fault strobe folded into
//! one AIGER circuit whose only output, `vuln_check`, fires exactly on an
//! escaping divergence.  Handing the result to any bounded model checker
//! reproduces the vulnerability search without this crate's solver.
//!
//! Layout of the composed circuit:
//!   - inputs: the original inputs (shared by both copies), one location
//!     selector per latch, then the fault strobe `f` — so the input count
//!     is always `|inputs| + |latches| + 1`;
//!   - the faulty copy reads the fault-free state on the first cycle, so
//!     both copies share one start state even with free-reset latches;
//!   - monitor latches remember whether either alarm has fired, whether
//!     `f` fired before, and whether the selection constraints (one-hot
//!     location, at most one strobe) have held on every earlier cycle.

use crate::aiger::{Circuit, Literal, Reset};
use crate::analysis::{all_latches, validate_analysis_inputs, AnalysisError};
use crate::corpus::CircuitBuilder;

/// The nets of one instantiated copy, in the composed circuit's namespace.
struct CopyNets {
    data_outputs: Vec<Literal>,
    alarm: Literal,
    next: Vec<Literal>,
}

/// Re-builds the circuit's combinational logic over the given input and
/// state literals.
fn instantiate(
    builder: &mut CircuitBuilder,
    circuit: &Circuit,
    inputs: &[Literal],
    state: &[Literal],
) -> CopyNets {
    let mut map: Vec<Literal> = vec![Literal::FALSE; circuit.max_var as usize + 1];
    for (position, input) in circuit.inputs.iter().enumerate() {
        map[input.var() as usize] = inputs[position];
    }
    for (position, latch) in circuit.latches.iter().enumerate() {
        map[latch.current.var() as usize] = state[position];
    }
    fn lift(map: &[Literal], literal: Literal) -> Literal {
        let base = map[literal.var() as usize];
        if literal.is_negated() {
            base.negated()
        } else {
            base
        }
    }
    for and in &circuit.ands {
        let a = lift(&map, and.rhs0);
        let b = lift(&map, and.rhs1);
        map[and.lhs.var() as usize] = builder.and(a, b);
    }
    let alarm_index = circuit.alarm.expect("alarm designated before composition");
    CopyNets {
        data_outputs: circuit
            .data_output_indices()
            .into_iter()
            .map(|index| lift(&map, circuit.outputs[index]))
            .collect(),
        alarm: lift(&map, circuit.outputs[alarm_index]),
        next: circuit
            .latches
            .iter()
            .map(|latch| lift(&map, latch.next))
            .collect(),
    }
}

/// Builds the composed vulnerability miter.  With `length` given, the
/// check output can only fire during the first `length` cycles, matching
/// a bounded search over a test of that length.
pub fn export_composed_miter(
    circuit: &Circuit,
    length: Option<usize>,
) -> Result<Circuit, AnalysisError> {
    validate_analysis_inputs(circuit, None, None, &all_latches(circuit.latches.len()))?;
    let mut builder = CircuitBuilder::new();
    let inputs: Vec<Literal> = (0..circuit.inputs.len())
        .map(|position| builder.input(&circuit.input_name(position)))
        .collect();
    let locations: Vec<Literal> = (0..circuit.latches.len())
        .map(|position| builder.input(&format!("c_{}", circuit.latch_name(position))))
        .collect();
    let fault_now = builder.input("f");

    // Two copies of the state.  The faulty copy's reset is never read:
    // on the first cycle it is bypassed in favor of the fault-free state.
    let ff_state: Vec<Literal> = (0..circuit.latches.len())
        .map(|position| builder.latch(&circuit.latch_name(position), circuit.latches[position].reset))
        .collect();
    let faulty_state: Vec<Literal> = (0..circuit.latches.len())
        .map(|position| {
            builder.latch(&format!("{}_err", circuit.latch_name(position)), Reset::Zero)
        })
        .collect();
    let first_cycle = builder.latch("first_cycle", Reset::One);
    builder.set_next(first_cycle, Literal::FALSE);
    let faulty_view: Vec<Literal> = ff_state
        .iter()
        .zip(&faulty_state)
        .map(|(&shared, &own)| builder.mux(first_cycle, shared, own))
        .collect();

    let ff = instantiate(&mut builder, circuit, &inputs, &ff_state);
    let faulty = instantiate(&mut builder, circuit, &inputs, &faulty_view);

    for (position, &latch) in ff_state.iter().enumerate() {
        builder.set_next(latch, ff.next[position]);
    }
    for (position, &latch) in faulty_state.iter().enumerate() {
        let strike = builder.and(fault_now, locations[position]);
        let next = builder.xor(faulty.next[position], strike);
        builder.set_next(latch, next);
    }

    // Alarm history for both copies: once raised, remembered forever.
    let ff_alarm_seen = builder.latch("alarm_seen", Reset::Zero);
    let remember = builder.or(ff_alarm_seen, ff.alarm);
    builder.set_next(ff_alarm_seen, remember);
    let faulty_alarm_seen = builder.latch("alarm_err_seen", Reset::Zero);
    let remember = builder.or(faulty_alarm_seen, faulty.alarm);
    builder.set_next(faulty_alarm_seen, remember);

    // Selection constraints, checked every cycle: the location selectors
    // are one-hot and the strobe fires at most once over the whole run.
    // Only the selection at the strobe cycle reaches the state update, so
    // re-selecting on other cycles cannot add behaviors.
    let fault_seen = builder.latch("fault_seen", Reset::Zero);
    let remember = builder.or(fault_seen, fault_now);
    builder.set_next(fault_seen, remember);
    let repeat_fault = builder.and(fault_now, fault_seen);
    let mut some_location = Literal::FALSE;
    let mut two_locations = Literal::FALSE;
    for &location in &locations {
        let overlap = builder.and(some_location, location);
        two_locations = builder.or(two_locations, overlap);
        some_location = builder.or(some_location, location);
    }
    let one_hot = builder.and(some_location, two_locations.negated());
    let constraints_now = builder.and(one_hot, repeat_fault.negated());

    let constraint_ok = builder.latch("constraint_ok", Reset::One);
    let carry = builder.and(constraint_ok, constraints_now);
    builder.set_next(constraint_ok, carry);
    let constraints_hold = builder.and(constraint_ok, constraints_now);

    let mut differ = Literal::FALSE;
    for (&a, &b) in ff.data_outputs.iter().zip(&faulty.data_outputs) {
        let bit = builder.xor(a, b);
        differ = builder.or(differ, bit);
    }

    let quiet = builder.and(ff_alarm_seen.negated(), ff.alarm.negated());
    let quiet_err = builder.and(faulty_alarm_seen.negated(), faulty.alarm.negated());
    let quiet_both = builder.and(quiet, quiet_err);
    let mut check = builder.and(constraints_hold, quiet_both);
    check = builder.and(check, differ);
    if let Some(length) = length {
        // A one-hot token walks a shift register for `length` cycles;
        // the check is gated on the token still being present.
        let mut within = Literal::FALSE;
        let mut carry_in = Literal::FALSE;
        for cycle in 0..length {
            let reset = if cycle == 0 { Reset::One } else { Reset::Zero };
            let stage = builder.latch(&format!("window{cycle}"), reset);
            builder.set_next(stage, carry_in);
            within = builder.or(within, stage);
            carry_in = stage;
        }
        check = builder.and(check, within);
    }
    builder.output("vuln_check", check);
    Ok(builder.build())
}
