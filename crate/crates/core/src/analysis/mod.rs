//! Shared result types for the three latch classifications.
//!
//! Every positive finding carries a [`WitnessTrace`]: a fully concrete
//! run (start state, one input row per step, per-step data outputs and
//! alarms of the fault-free and the faulty copy) that demonstrates the
//! classification when replayed on the concrete simulator.  The
//! `fault_step` is the first step whose starting latch state differs
//! between the copies, which is exactly the flip coordinate the simulator
//! takes: replaying means simulating once without and once with
//! `(fault_latch, fault_step)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aiger::Circuit;
use crate::testcase::TestCase;

pub mod miter;
pub mod protected;
pub mod spurious;
mod unroll;
pub mod vulnerable;

/// How faults and open inputs are searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Fault time and location symbolic; one solver instance.
    Stla,
    /// Fault time symbolic, locations enumerated one context each.
    Sta,
    /// Everything enumerated: open inputs, fault time and location.
    Sim,
}

/// Conditions under which an analysis refuses to run.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("the circuit has no latches to inject faults into")]
    ZeroLatchCircuit,
    #[error("no injectable latches remain after filtering")]
    EmptyInjectable,
    #[error("injectable latch {latch} out of range (circuit has {latches} latches)")]
    InjectableOutOfRange { latch: usize, latches: usize },
    #[error("test case width {width} does not match the circuit's {inputs} inputs")]
    TestWidthMismatch { width: usize, inputs: usize },
    #[error("no alarm output is designated")]
    NoAlarm,
    #[error("environment model reads {env_inputs} inputs but the circuit has {inputs}")]
    EnvironmentArity { env_inputs: usize, inputs: usize },
    #[error("environment model must have exactly one (valid) output, found {outputs}")]
    EnvironmentOutputs { outputs: usize },
    #[error(
        "test case expands to {needed} concrete assignments, over the budget of {budget}; \
         use the stla variant for open inputs at this scale"
    )]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("window bound k must be at least 1 and at most {max}, got {k}")]
    WindowOutOfRange { k: usize, max: usize },
    #[error("start-state bound j must be at most {max}, got {j}")]
    ReachBoundOutOfRange { j: usize, max: usize },
    #[error("the sim variant applies to vulnerability analysis only")]
    UnsupportedVariant,
}

/// Checks the preconditions shared by every analysis entry point.
pub(crate) fn validate_analysis_inputs(
    circuit: &Circuit,
    test: Option<&TestCase>,
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
) -> Result<(), AnalysisError> {
    if circuit.latches.is_empty() {
        return Err(AnalysisError::ZeroLatchCircuit);
    }
    if circuit.alarm.is_none() {
        return Err(AnalysisError::NoAlarm);
    }
    if injectable.is_empty() {
        return Err(AnalysisError::EmptyInjectable);
    }
    if let Some(&latch) = injectable.iter().next_back() {
        if latch >= circuit.latches.len() {
            return Err(AnalysisError::InjectableOutOfRange {
                latch,
                latches: circuit.latches.len(),
            });
        }
    }
    if let Some(test) = test {
        if test.width() != circuit.inputs.len() {
            return Err(AnalysisError::TestWidthMismatch {
                width: test.width(),
                inputs: circuit.inputs.len(),
            });
        }
    }
    if let Some(env) = env {
        if env.inputs.len() != circuit.inputs.len() {
            return Err(AnalysisError::EnvironmentArity {
                env_inputs: env.inputs.len(),
                inputs: circuit.inputs.len(),
            });
        }
        if env.outputs.len() != 1 {
            return Err(AnalysisError::EnvironmentOutputs {
                outputs: env.outputs.len(),
            });
        }
    }
    Ok(())
}

/// Renders bits as a `0`/`1` string, most significant position first in
/// declaration order (index 0 of the slice is the leftmost character).
pub fn bits_to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Parses a `0`/`1` string produced by [`bits_to_string`].
pub fn parse_bits(text: &str) -> Option<Vec<bool>> {
    text.chars()
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

/// A concrete run demonstrating a finding.
///
/// All per-step vectors have one entry per step; `initial_state` is the
/// fault-free copy's latch state at the start of step 1 and the `alarm_*`
/// strings carry one character per step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessTrace {
    /// Latch (declaration position) that was struck.
    pub fault_latch: usize,
    /// 1-based first step whose starting state contains the flipped bit;
    /// also the simulator flip coordinate for replay.
    pub fault_step: usize,
    /// Fault-free start state, one character per latch.
    pub initial_state: String,
    /// One input row per step.
    pub inputs: Vec<String>,
    /// Data outputs of the fault-free copy, one row per step.
    pub outputs_ff: Vec<String>,
    /// Data outputs of the faulty copy, one row per step.
    pub outputs_faulty: Vec<String>,
    /// Alarm of the fault-free copy, one character per step.
    pub alarm_ff: String,
    /// Alarm of the faulty copy, one character per step.
    pub alarm_faulty: String,
}

impl WitnessTrace {
    /// Number of steps the witness covers.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Latches from which an injected fault can escape to the data outputs
/// unnoticed, with one demonstrating run each.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnerabilityReport {
    pub vulnerable: BTreeSet<usize>,
    pub witnesses: BTreeMap<usize, WitnessTrace>,
    /// First step at which the test itself raises the alarm with no fault
    /// injected (later steps are vacuous and were not analyzed).
    pub unconstrained_alarm_violation: Option<usize>,
}

/// Latches whose faults can raise the alarm even though the computation
/// fully recovers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpuriousReport {
    pub spurious: BTreeSet<usize>,
    pub witnesses: BTreeMap<usize, WitnessTrace>,
    /// Same vacuity report as for vulnerability analysis.
    pub unconstrained_alarm_violation: Option<usize>,
}

/// Latches proven protected within a bounded window, and counterexample
/// runs for the others.
///
/// The three sets partition `injectable`; `unclassified` is non-empty
/// exactly when a resource limit stopped the search early, so absence
/// from `protected_latches` is never silent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtectionReport {
    /// The latch set the query actually examined.
    pub injectable: BTreeSet<usize>,
    pub protected_latches: BTreeSet<usize>,
    pub counterexamples: BTreeMap<usize, WitnessTrace>,
    /// Latches not decided before the deadline was hit.
    pub unclassified: BTreeSet<usize>,
}

/// The set of latches faults are injected into: all by default, narrowed
/// by include/exclude lists at the interface layer.
pub fn all_latches(count: usize) -> BTreeSet<usize> {
    (0..count).collect()
}
