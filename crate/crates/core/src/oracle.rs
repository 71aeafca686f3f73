//! Exhaustive reference analyses and witness replay checks.
//!
//! These enumerate every open-input assignment, undefined reset value,
//! fault location and fault step outright, testing the same operational
//! conditions the solver-based analyses encode.  They are deliberately
//! simple and independent of the CNF machinery so the two
//! implementations can be compared on small circuits; the `validate_*`
//! functions replay emitted witnesses on the concrete simulator and check
//! each finding's defining condition.
//!
//! Semantics shared with the solver-based analyses:
//!
//! * Both copies start from the same state; a fault flips one latch bit
//!   in the faulty copy's state at the start of some step `t ≥ 2` (the
//!   registered value was corrupted while latching).  Protection analysis
//!   instead flips the very first state of its window (`t = 1`).
//! * A fault *escapes* when the data outputs differ at some step `t'`
//!   while both alarms are false at every step up to and including `t'`,
//!   the environment deems every step up to `t'` valid, and the
//!   fault-free run keeps the alarm low over those steps.
//! * A fault is *spurious* at step `s` when the data outputs agree at
//!   every step up to `s`, the states are bit-identical again at the
//!   start of step `s + 1`, and the faulty copy raised the alarm at some
//!   step up to `s` (fault-free alarm low and environment valid as
//!   above).
//! * A latch is `(j, k)`-*protected* when no start state reachable within
//!   `j` steps (or reachable from anywhere in exactly `j` alarm-free
//!   steps), with that latch flipped, produces output or state divergence
//!   within `k` steps before the faulty copy raises the alarm, while the
//!   fault-free window stays alarm-free.

use std::collections::BTreeSet;

use crate::aiger::Circuit;
use crate::analysis::{parse_bits, WitnessTrace};
use crate::sim::{enumerate_initial_states, simulate, SimTrace};
use crate::testcase::TestCase;

/// Enumeration budget for open bits and undefined resets combined.
const ORACLE_BUDGET: u128 = 1 << 16;

/// What exhaustive enumeration found.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleFindings {
    /// Latch positions satisfying the analyzed condition.
    pub found: BTreeSet<usize>,
    /// First step at which no admissible trace keeps the fault-free alarm
    /// low, mirroring the analyses' vacuity report.
    pub unconstrained_alarm_violation: Option<usize>,
}

/// One fully concrete stimulus: inputs, start state, environment verdicts
/// and the resulting fault-free run.
struct Scenario {
    inputs: Vec<Vec<bool>>,
    init: Vec<bool>,
    ff: SimTrace,
    /// Longest prefix with the fault-free alarm low and the environment
    /// valid; escapes and spurious alarms must complete inside it.
    clean_prefix: usize,
}

fn environment_validity(env: &Circuit, env_init: &[bool], inputs: &[Vec<bool>]) -> Vec<bool> {
    let trace = simulate(env, env_init, inputs, None);
    trace.outputs.iter().map(|row| row[0]).collect()
}

/// Expands the test over open bits, undefined resets (of both the circuit
/// and the environment model), keeping each concrete run.
fn scenarios(circuit: &Circuit, test: &TestCase, env: Option<&Circuit>) -> Vec<Scenario> {
    assert_eq!(
        test.width(),
        circuit.inputs.len(),
        "test width must equal the input count"
    );
    if let Some(env) = env {
        assert_eq!(
            env.inputs.len(),
            circuit.inputs.len(),
            "environment model must read the same inputs"
        );
        assert_eq!(
            env.outputs.len(),
            1,
            "environment model must have exactly one (valid) output"
        );
    }
    let circuit_inits = enumerate_initial_states(circuit);
    let env_inits = env.map_or(vec![vec![]], enumerate_initial_states);
    let combos = test
        .count_open_assignments()
        .saturating_mul(circuit_inits.len() as u128)
        .saturating_mul(env_inits.len() as u128);
    assert!(
        combos <= ORACLE_BUDGET,
        "enumeration space {combos} exceeds the oracle budget {ORACLE_BUDGET}"
    );

    let mut out = Vec::new();
    for inputs in test.expansions() {
        for init in &circuit_inits {
            for env_init in &env_inits {
                let valid = match env {
                    Some(env) => environment_validity(env, env_init, &inputs),
                    None => vec![true; inputs.len()],
                };
                let ff = simulate(circuit, init, &inputs, None);
                let clean_prefix = ff
                    .alarms
                    .iter()
                    .zip(&valid)
                    .take_while(|&(&alarm, &ok)| !alarm && ok)
                    .count();
                out.push(Scenario {
                    inputs: inputs.clone(),
                    init: init.clone(),
                    ff,
                    clean_prefix,
                });
            }
        }
    }
    out
}

fn alarm_violation(scenarios: &[Scenario], steps: usize) -> Option<usize> {
    let best = scenarios
        .iter()
        .map(|s| s.clean_prefix)
        .max()
        .unwrap_or(0);
    (best < steps).then_some(best + 1)
}

/// Exhaustively finds latches from which a single flip can reach the data
/// outputs with both alarms silent.
///
/// # Panics
/// Panics on width mismatches or when the enumeration space exceeds the
/// oracle budget.
pub fn brute_force_vulnerable(
    circuit: &Circuit,
    test: &TestCase,
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
) -> OracleFindings {
    let steps = test.len();
    let scenarios = scenarios(circuit, test, env);
    let mut found = BTreeSet::new();
    for &latch in injectable {
        'search: for scenario in &scenarios {
            for fault_step in 2..=steps {
                let faulty = simulate(
                    circuit,
                    &scenario.init,
                    &scenario.inputs,
                    Some((latch, fault_step)),
                );
                for step in fault_step..=scenario.clean_prefix {
                    if faulty.alarms[step - 1] {
                        break; // alarm raised: no later step can escape
                    }
                    if scenario.ff.data_outputs[step - 1] != faulty.data_outputs[step - 1] {
                        found.insert(latch);
                        break 'search;
                    }
                }
            }
        }
    }
    OracleFindings {
        found,
        unconstrained_alarm_violation: alarm_violation(&scenarios, steps),
    }
}

/// Exhaustively finds latches whose faults can ring the alarm while the
/// computation recovers completely.
///
/// # Panics
/// As [`brute_force_vulnerable`].
pub fn brute_force_spurious(
    circuit: &Circuit,
    test: &TestCase,
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
) -> OracleFindings {
    let steps = test.len();
    let scenarios = scenarios(circuit, test, env);
    let mut found = BTreeSet::new();
    for &latch in injectable {
        'search: for scenario in &scenarios {
            for fault_step in 2..=steps {
                let faulty = simulate(
                    circuit,
                    &scenario.init,
                    &scenario.inputs,
                    Some((latch, fault_step)),
                );
                let mut alarm_raised = false;
                for step in 1..=scenario.clean_prefix {
                    if scenario.ff.data_outputs[step - 1] != faulty.data_outputs[step - 1] {
                        break; // output equality is cumulative
                    }
                    alarm_raised |= faulty.alarms[step - 1];
                    if step >= fault_step
                        && alarm_raised
                        && scenario.ff.states[step] == faulty.states[step]
                    {
                        found.insert(latch);
                        break 'search;
                    }
                }
            }
        }
    }
    OracleFindings {
        found,
        unconstrained_alarm_violation: alarm_violation(&scenarios, steps),
    }
}

/// The start states admitted for a `(j, k)`-protection window: states
/// reachable from the reset state within `j` steps, plus states reachable
/// from *any* state in exactly `j` steps that keep the alarm low.
///
/// # Panics
/// Panics when the circuit is too large to enumerate states.
pub fn brute_force_approx(circuit: &Circuit, j: usize) -> BTreeSet<Vec<bool>> {
    let latches = circuit.latches.len();
    assert!(latches <= 16, "too many latches to enumerate state space");
    let input_rows = enumerate_input_rows(circuit.inputs.len());
    let all_states: Vec<Vec<bool>> = (0..1u32 << latches)
        .map(|bits| (0..latches).map(|p| (bits >> p) & 1 == 1).collect())
        .collect();

    // From-anywhere term: image of the full state space after exactly j
    // steps, each step required to keep the alarm low.
    let mut anywhere: BTreeSet<Vec<bool>> = all_states.iter().cloned().collect();
    for _ in 0..j {
        let mut next = BTreeSet::new();
        for state in &anywhere {
            for row in &input_rows {
                let step = simulate(circuit, state, std::slice::from_ref(row), None);
                if !step.alarms[0] {
                    next.insert(step.final_state().to_vec());
                }
            }
        }
        anywhere = next;
    }

    anywhere.extend(brute_force_reach(circuit, j));
    anywhere
}

/// States reachable from the reset state within `j` steps (alarm-free or
/// not), by explicit breadth-first image computation.
///
/// # Panics
/// Panics when the circuit is too large to enumerate states.
pub fn brute_force_reach(circuit: &Circuit, j: usize) -> BTreeSet<Vec<bool>> {
    assert!(
        circuit.latches.len() <= 16,
        "too many latches to enumerate state space"
    );
    let input_rows = enumerate_input_rows(circuit.inputs.len());
    let mut reached: BTreeSet<Vec<bool>> = enumerate_initial_states(circuit).into_iter().collect();
    let mut frontier = reached.clone();
    for _ in 0..j {
        let mut next = BTreeSet::new();
        for state in &frontier {
            for row in &input_rows {
                let step = simulate(circuit, state, std::slice::from_ref(row), None);
                next.insert(step.final_state().to_vec());
            }
        }
        frontier = next;
        reached.extend(frontier.iter().cloned());
    }
    reached
}

fn enumerate_input_rows(width: usize) -> Vec<Vec<bool>> {
    assert!(width <= 8, "too many inputs to enumerate");
    (0..1u32 << width)
        .map(|bits| (0..width).map(|p| (bits >> p) & 1 == 1).collect())
        .collect()
}

fn enumerate_input_sequences(width: usize, steps: usize) -> Vec<Vec<Vec<bool>>> {
    let rows = enumerate_input_rows(width);
    let mut sequences: Vec<Vec<Vec<bool>>> = vec![vec![]];
    for _ in 0..steps {
        let mut longer = Vec::with_capacity(sequences.len() * rows.len());
        for sequence in &sequences {
            for row in &rows {
                let mut extended = sequence.clone();
                extended.push(row.clone());
                longer.push(extended);
            }
        }
        sequences = longer;
    }
    sequences
}

/// Exhaustively decides `(j, k)`-protection for every injectable latch:
/// a latch stays protected when no admissible window shows divergence
/// before the faulty alarm.
///
/// # Panics
/// Panics beyond 5 latches or 3 inputs (the state × input enumeration).
pub fn brute_force_protected(
    circuit: &Circuit,
    j: usize,
    k: usize,
    injectable: &BTreeSet<usize>,
) -> BTreeSet<usize> {
    assert!(circuit.latches.len() <= 5, "too many latches for the oracle");
    assert!(circuit.inputs.len() <= 3, "too many inputs for the oracle");
    assert!(k >= 1, "window length must be at least 1");
    let starts = brute_force_approx(circuit, j);
    let sequences = enumerate_input_sequences(circuit.inputs.len(), k);
    let mut protected = injectable.clone();
    for start in &starts {
        for inputs in &sequences {
            let ff = simulate(circuit, start, inputs, None);
            if ff.alarms.iter().any(|&alarm| alarm) {
                continue; // window must be alarm-free without the fault
            }
            protected.retain(|&latch| {
                let faulty = simulate(circuit, start, inputs, Some((latch, 1)));
                for d in 1..=k {
                    if faulty.alarms[d - 1] {
                        return true; // alarm precedes any later divergence
                    }
                    let diverged = ff.data_outputs[d - 1] != faulty.data_outputs[d - 1]
                        || (d == k && ff.states[d] != faulty.states[d]);
                    if diverged {
                        return false;
                    }
                }
                true
            });
            if protected.is_empty() {
                return protected;
            }
        }
    }
    protected
}

/// Re-simulates a witness and checks that its recorded rows match the
/// simulator bit for bit.  Returns the fault-free and faulty traces.
fn replay(circuit: &Circuit, witness: &WitnessTrace) -> Result<(SimTrace, SimTrace), String> {
    let init = parse_bits(&witness.initial_state)
        .ok_or_else(|| format!("malformed initial state {:?}", witness.initial_state))?;
    if init.len() != circuit.latches.len() {
        return Err(format!(
            "initial state has {} bits, circuit has {} latches",
            init.len(),
            circuit.latches.len()
        ));
    }
    let mut inputs = Vec::with_capacity(witness.inputs.len());
    for (index, row) in witness.inputs.iter().enumerate() {
        let bits =
            parse_bits(row).ok_or_else(|| format!("malformed input row {}: {row:?}", index + 1))?;
        if bits.len() != circuit.inputs.len() {
            return Err(format!(
                "input row {} has {} bits, circuit has {} inputs",
                index + 1,
                bits.len(),
                circuit.inputs.len()
            ));
        }
        inputs.push(bits);
    }
    if witness.fault_latch >= circuit.latches.len() {
        return Err(format!("fault latch {} out of range", witness.fault_latch));
    }
    if witness.fault_step < 1 || witness.fault_step > inputs.len() {
        return Err(format!(
            "fault step {} outside 1..={}",
            witness.fault_step,
            inputs.len()
        ));
    }
    let ff = simulate(circuit, &init, &inputs, None);
    let faulty = simulate(
        circuit,
        &init,
        &inputs,
        Some((witness.fault_latch, witness.fault_step)),
    );
    let render = |rows: &[Vec<bool>]| -> Vec<String> {
        rows.iter()
            .map(|row| crate::analysis::bits_to_string(row))
            .collect()
    };
    let bools_to_string = |bits: &[bool]| crate::analysis::bits_to_string(bits);
    if render(&ff.data_outputs) != witness.outputs_ff {
        return Err("recorded fault-free outputs disagree with resimulation".into());
    }
    if render(&faulty.data_outputs) != witness.outputs_faulty {
        return Err("recorded faulty outputs disagree with resimulation".into());
    }
    if bools_to_string(&ff.alarms) != witness.alarm_ff {
        return Err("recorded fault-free alarms disagree with resimulation".into());
    }
    if bools_to_string(&faulty.alarms) != witness.alarm_faulty {
        return Err("recorded faulty alarms disagree with resimulation".into());
    }
    Ok((ff, faulty))
}

fn check_environment(
    env: Option<&Circuit>,
    witness: &WitnessTrace,
    through: usize,
) -> Result<(), String> {
    let Some(env) = env else { return Ok(()) };
    let inputs: Vec<Vec<bool>> = witness
        .inputs
        .iter()
        .map(|row| parse_bits(row).expect("rows validated by replay"))
        .collect();
    let admissible = enumerate_initial_states(env).iter().any(|env_init| {
        environment_validity(env, env_init, &inputs)[..through]
            .iter()
            .all(|&ok| ok)
    });
    if admissible {
        Ok(())
    } else {
        Err("environment rejects the witness inputs".into())
    }
}

/// Checks that a vulnerability witness demonstrates an escape: data
/// outputs differ at its final step, both alarms stay low throughout, and
/// the environment accepts every step.
pub fn validate_vulnerable_witness(
    circuit: &Circuit,
    env: Option<&Circuit>,
    witness: &WitnessTrace,
) -> Result<(), String> {
    let (ff, faulty) = replay(circuit, witness)?;
    let steps = witness.len();
    if steps == 0 {
        return Err("empty witness".into());
    }
    if witness.fault_step < 2 {
        return Err("fault must strike a registered value (step 2 or later)".into());
    }
    if ff.data_outputs[steps - 1] == faulty.data_outputs[steps - 1] {
        return Err("data outputs agree at the final step".into());
    }
    if ff.alarms.iter().any(|&alarm| alarm) {
        return Err("fault-free alarm raised during the witness".into());
    }
    if faulty.alarms.iter().any(|&alarm| alarm) {
        return Err("faulty alarm raised during the witness".into());
    }
    check_environment(env, witness, steps)
}

/// Checks that a spurious-alarm witness shows full recovery with a raised
/// alarm: outputs equal at every step, states re-converged after the last
/// step, faulty alarm raised somewhere.
pub fn validate_spurious_witness(
    circuit: &Circuit,
    env: Option<&Circuit>,
    witness: &WitnessTrace,
) -> Result<(), String> {
    let (ff, faulty) = replay(circuit, witness)?;
    let steps = witness.len();
    if steps == 0 {
        return Err("empty witness".into());
    }
    if witness.fault_step < 2 {
        return Err("fault must strike a registered value (step 2 or later)".into());
    }
    if ff.data_outputs != faulty.data_outputs {
        return Err("data outputs diverge".into());
    }
    if ff.states[steps] != faulty.states[steps] {
        return Err("states have not re-converged after the last step".into());
    }
    if !faulty.alarms.iter().any(|&alarm| alarm) {
        return Err("faulty alarm never raised".into());
    }
    if ff.alarms.iter().any(|&alarm| alarm) {
        return Err("fault-free alarm raised during the witness".into());
    }
    check_environment(env, witness, steps)
}

/// Checks that a protection counterexample starts in an admissible window
/// state, flips at step 1, and diverges (outputs anywhere; state at the
/// window end) before the faulty alarm rises.  `window` is the `k` the
/// analysis ran with; a witness shorter than `window` must show output
/// divergence.
pub fn validate_protection_counterexample(
    circuit: &Circuit,
    j: usize,
    window: usize,
    witness: &WitnessTrace,
) -> Result<(), String> {
    let (ff, faulty) = replay(circuit, witness)?;
    let steps = witness.len();
    if steps == 0 || steps > window {
        return Err(format!("witness length {steps} outside 1..={window}"));
    }
    if witness.fault_step != 1 {
        return Err("protection faults strike the first window state".into());
    }
    if ff.alarms.iter().any(|&alarm| alarm) {
        return Err("fault-free alarm raised during the window".into());
    }
    if faulty.alarms.iter().any(|&alarm| alarm) {
        return Err("faulty alarm raised before divergence".into());
    }
    let output_diverged = ff.data_outputs[steps - 1] != faulty.data_outputs[steps - 1];
    let state_diverged = steps == window && ff.states[steps] != faulty.states[steps];
    if !output_diverged && !state_diverged {
        return Err("no divergence at the witness end".into());
    }
    if j == 0 {
        return Ok(()); // every state is admissible
    }
    let start = parse_bits(&witness.initial_state).expect("validated by replay");
    if brute_force_approx(circuit, j).contains(&start) {
        Ok(())
    } else {
        Err("start state is not admissible for this window".into())
    }
}
