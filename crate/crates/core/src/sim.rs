//! Cycle-accurate concrete simulation, with optional single-bit state
//! corruption.
//!
//! A run of `n` steps reads one input row per step.  During step `t`
//! (1-based) the circuit sees the latch state recorded at the start of
//! that step together with input row `t`; outputs are values during the
//! step and the latch state is then reloaded from the next-state
//! functions.  A *flip* `(latch, t)` inverts one latch bit in the state at
//! the start of step `t`; `t = n + 1` corrupts only the final state.
//! Flipping at the start of step 1 models an uninitialized or corrupted
//! power-on value, flipping at `t ≥ 2` models a transient strike during
//! step `t - 1` that lands in the registered value.

use crate::aiger::{Circuit, Literal, Reset};

/// Everything observable about one simulation run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimTrace {
    /// `states[t]` is the latch state at the start of step `t + 1`; the
    /// last entry (index = number of steps) is the state after the run.
    pub states: Vec<Vec<bool>>,
    /// All outputs in declaration order, one row per step.
    pub outputs: Vec<Vec<bool>>,
    /// Output rows restricted to the non-alarm outputs.
    pub data_outputs: Vec<Vec<bool>>,
    /// The designated alarm output per step; all false when the circuit
    /// has no outputs.
    pub alarms: Vec<bool>,
}

impl SimTrace {
    /// Number of simulated steps.
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Latch state after the last step.
    pub fn final_state(&self) -> &[bool] {
        self.states.last().expect("trace always has an initial state")
    }
}

/// Evaluates all variables for one step: constant, inputs, current state,
/// then AND gates in their topological declaration order.
fn evaluate_step(circuit: &Circuit, state: &[bool], input_row: &[bool]) -> Vec<bool> {
    let mut values = vec![false; circuit.max_var as usize + 1];
    for (position, literal) in circuit.inputs.iter().enumerate() {
        values[literal.var() as usize] = input_row[position];
    }
    for (position, latch) in circuit.latches.iter().enumerate() {
        values[latch.current.var() as usize] = state[position];
    }
    for gate in &circuit.ands {
        let value = literal_value(&values, gate.rhs0) && literal_value(&values, gate.rhs1);
        values[gate.lhs.var() as usize] = value;
    }
    values
}

fn literal_value(values: &[bool], literal: Literal) -> bool {
    values[literal.var() as usize] != literal.is_negated()
}

/// Runs `circuit` from `initial` over the given input rows.
///
/// # Panics
/// Panics when `initial` does not match the latch count, an input row does
/// not match the input count, or the flip coordinates are out of range
/// (latch index, or step outside `1..=steps + 1`).
pub fn simulate(
    circuit: &Circuit,
    initial: &[bool],
    inputs: &[Vec<bool>],
    flip: Option<(usize, usize)>,
) -> SimTrace {
    assert_eq!(
        initial.len(),
        circuit.latches.len(),
        "initial state width must equal the latch count"
    );
    let steps = inputs.len();
    if let Some((latch, step)) = flip {
        assert!(latch < circuit.latches.len(), "flip latch out of range");
        assert!(
            (1..=steps + 1).contains(&step),
            "flip step must lie in 1..={}",
            steps + 1
        );
    }
    let alarm_index = circuit.alarm;
    let data_indices = circuit.data_output_indices();

    let mut state = initial.to_vec();
    let mut trace = SimTrace {
        states: Vec::with_capacity(steps + 1),
        outputs: Vec::with_capacity(steps),
        data_outputs: Vec::with_capacity(steps),
        alarms: Vec::with_capacity(steps),
    };
    for (index, input_row) in inputs.iter().enumerate() {
        assert_eq!(
            input_row.len(),
            circuit.inputs.len(),
            "input row width must equal the input count"
        );
        if let Some((latch, step)) = flip {
            if step == index + 1 {
                state[latch] = !state[latch];
            }
        }
        trace.states.push(state.clone());
        let values = evaluate_step(circuit, &state, input_row);
        let output_row: Vec<bool> = circuit
            .outputs
            .iter()
            .map(|&literal| literal_value(&values, literal))
            .collect();
        trace
            .data_outputs
            .push(data_indices.iter().map(|&i| output_row[i]).collect());
        trace
            .alarms
            .push(alarm_index.map_or(false, |i| output_row[i]));
        trace.outputs.push(output_row);
        state = circuit
            .latches
            .iter()
            .map(|latch| literal_value(&values, latch.next))
            .collect();
    }
    if let Some((latch, step)) = flip {
        if step == steps + 1 {
            state[latch] = !state[latch];
        }
    }
    trace.states.push(state);
    trace
}

/// Number of latches whose reset is unconstrained.
pub fn free_reset_count(circuit: &Circuit) -> usize {
    circuit
        .latches
        .iter()
        .filter(|latch| latch.reset == Reset::Free)
        .count()
}

/// Builds a start state from the resets, reading one bit from
/// `free_choices` (in latch order) per unconstrained latch.
///
/// # Panics
/// Panics when `free_choices` does not have exactly one bit per
/// free-reset latch.
pub fn initial_state(circuit: &Circuit, free_choices: &[bool]) -> Vec<bool> {
    let mut remaining = free_choices.iter().copied();
    let state: Vec<bool> = circuit
        .latches
        .iter()
        .map(|latch| match latch.reset {
            Reset::Zero => false,
            Reset::One => true,
            Reset::Free => remaining
                .next()
                .expect("one free choice needed per unconstrained latch"),
        })
        .collect();
    assert!(
        remaining.next().is_none(),
        "more free choices than unconstrained latches"
    );
    state
}

/// All start states the resets admit, in binary counting order over the
/// free-reset latches (first free latch is the least significant bit).
/// The all-defaults state (free bits 0) comes first.
pub fn enumerate_initial_states(circuit: &Circuit) -> Vec<Vec<bool>> {
    let free = free_reset_count(circuit);
    assert!(free < 20, "too many unconstrained resets to enumerate");
    (0..1u32 << free)
        .map(|bits| {
            let choices: Vec<bool> = (0..free).map(|p| (bits >> p) & 1 == 1).collect();
            initial_state(circuit, &choices)
        })
        .collect()
}
