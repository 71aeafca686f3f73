//! Escape analysis: find latches from which a single transient bit flip
//! can change the data outputs while both copies' alarms stay silent.
//!
//! Three search strategies produce the same latch set.  `stla` keeps the
//! fault time and location symbolic in one solver instance and extracts
//! every location through an all-solutions loop.  `sta` keeps only the
//! time symbolic and runs one solver instance per injectable latch.
//! `sim` enumerates everything — open input bits, fault time, fault
//! location — and double-simulates each combination concretely.

use std::collections::BTreeSet;

use crate::aiger::Circuit;
use crate::analysis::unroll::TwoCopyUnrolling;
use crate::analysis::{
    bits_to_string, validate_analysis_inputs, AnalysisError, Variant, VulnerabilityReport,
    WitnessTrace,
};
use crate::cnf::{encode_vector_compare, VectorRelation};
use crate::sim::{enumerate_initial_states, simulate, SimTrace};
use crate::testcase::TestCase;

/// Searches with symbolic fault time and location: one solver instance,
/// one-hot location variables, and per-step all-solutions extraction.
///
/// Per unrolled step the fault-free alarm is pinned low (a test that
/// rings it on its own makes the remaining steps vacuous and is reported
/// via `unconstrained_alarm_violation`), the faulty alarm is pinned low
/// cumulatively, and each model of "data outputs differ at this step"
/// yields one vulnerable latch which is then blocked permanently.
pub fn find_vulnerable_stla(
    circuit: &Circuit,
    test: &TestCase,
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
) -> Result<VulnerabilityReport, AnalysisError> {
    validate_analysis_inputs(circuit, Some(test), env, injectable)?;
    let mut unrolling = TwoCopyUnrolling::new(circuit, test, env, injectable);
    let mut report = VulnerabilityReport::default();
    for _ in 0..test.len() {
        let step = unrolling.advance();
        let faulty_alarm = unrolling.faulty[step - 1]
            .alarm
            .expect("alarm designated before analysis");
        unrolling.ctx.add_clause(&[!faulty_alarm]);
        if unrolling.vacuous() {
            report.unconstrained_alarm_violation = Some(step);
            break;
        }
        let differ = encode_vector_compare(
            &mut unrolling.ctx,
            &unrolling.ff[step - 1].data_outputs,
            &unrolling.faulty[step - 1].data_outputs,
            VectorRelation::NotEqual,
        );
        loop {
            let result = unrolling.ctx.solve(&[differ]);
            let Some(model) = result.model else { break };
            let latch = unrolling
                .fault
                .locations
                .iter()
                .find(|&&(_, lit)| model.value(lit))
                .map(|&(latch, _)| latch)
                .expect("the one-hot location constraint selects a latch");
            let witness = unrolling.witness(&model, latch, step);
            report.vulnerable.insert(latch);
            report.witnesses.insert(latch, witness);
            let location = unrolling.fault.lit_for(latch).expect("found above");
            unrolling.ctx.add_clause(&[!location]);
        }
        if report.vulnerable.len() == injectable.len() {
            // Everything is classified; further steps could only trip the
            // now-unsatisfiable one-hot constraint.
            break;
        }
    }
    Ok(report)
}

/// Searches with symbolic fault time but enumerated locations: one
/// fresh solver instance per injectable latch, whose single location
/// variable is pinned true by the one-hot constraint.
pub fn find_vulnerable_sta(
    circuit: &Circuit,
    test: &TestCase,
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
) -> Result<VulnerabilityReport, AnalysisError> {
    validate_analysis_inputs(circuit, Some(test), env, injectable)?;
    let mut report = VulnerabilityReport::default();
    'latches: for &latch in injectable {
        let single: BTreeSet<usize> = [latch].into_iter().collect();
        let mut unrolling = TwoCopyUnrolling::new(circuit, test, env, &single);
        for _ in 0..test.len() {
            // Steps at or past a known vacuity point classify nothing.
            if let Some(violation) = report.unconstrained_alarm_violation {
                if unrolling.steps() + 1 >= violation {
                    continue 'latches;
                }
            }
            let step = unrolling.advance();
            let faulty_alarm = unrolling.faulty[step - 1]
                .alarm
                .expect("alarm designated before analysis");
            unrolling.ctx.add_clause(&[!faulty_alarm]);
            if report.unconstrained_alarm_violation.is_none() && unrolling.vacuous() {
                report.unconstrained_alarm_violation = Some(step);
                continue 'latches;
            }
            let differ = encode_vector_compare(
                &mut unrolling.ctx,
                &unrolling.ff[step - 1].data_outputs,
                &unrolling.faulty[step - 1].data_outputs,
                VectorRelation::NotEqual,
            );
            if let Some(model) = unrolling.ctx.solve(&[differ]).model {
                let witness = unrolling.witness(&model, latch, step);
                report.vulnerable.insert(latch);
                report.witnesses.insert(latch, witness);
                continue 'latches;
            }
        }
    }
    Ok(report)
}

fn environment_validity(env: Option<&Circuit>, env_init: &[bool], inputs: &[Vec<bool>]) -> Vec<bool> {
    match env {
        Some(env) => simulate(env, env_init, inputs, None)
            .outputs
            .iter()
            .map(|row| row[0])
            .collect(),
        None => vec![true; inputs.len()],
    }
}

fn trace_witness(
    init: &[bool],
    inputs: &[Vec<bool>],
    clean: &SimTrace,
    hit: &SimTrace,
    fault_latch: usize,
    fault_step: usize,
    through_step: usize,
) -> WitnessTrace {
    let rows = |rows: &[Vec<bool>]| -> Vec<String> {
        rows[..through_step].iter().map(|row| bits_to_string(row)).collect()
    };
    let alarm_bits = |trace: &SimTrace| -> String {
        trace.alarms[..through_step]
            .iter()
            .map(|&bit| if bit { '1' } else { '0' })
            .collect()
    };
    WitnessTrace {
        fault_latch,
        fault_step,
        initial_state: bits_to_string(init),
        inputs: rows(inputs),
        outputs_ff: rows(&clean.data_outputs),
        outputs_faulty: rows(&hit.data_outputs),
        alarm_ff: alarm_bits(clean),
        alarm_faulty: alarm_bits(hit),
    }
}

/// Searches by exhaustive concrete simulation: every assignment of the
/// open input bits, every injectable latch, and every fault step are
/// enumerated and double-simulated.
///
/// The expansion count must stay within `max_expansions`; beyond that the
/// symbolic variants are the right tool.  Environment constraints are
/// evaluated on the concrete trace: a finding must complete while the
/// trace is still accepted (and the fault-free alarm still low), exactly
/// mirroring the per-step constraints of the symbolic variants.
pub fn find_vulnerable_sim(
    circuit: &Circuit,
    test: &TestCase,
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
    max_expansions: u128,
) -> Result<VulnerabilityReport, AnalysisError> {
    validate_analysis_inputs(circuit, Some(test), env, injectable)?;
    let needed = test.count_open_assignments();
    if needed > max_expansions {
        return Err(AnalysisError::BudgetExceeded {
            needed,
            budget: max_expansions,
        });
    }
    let circuit_inits = enumerate_initial_states(circuit);
    let env_inits = match env {
        Some(env) => enumerate_initial_states(env),
        None => vec![Vec::new()],
    };
    let steps = test.len();
    let mut report = VulnerabilityReport::default();
    let mut longest_clean_prefix = 0;
    for inputs in test.expansions() {
        for init in &circuit_inits {
            for env_init in &env_inits {
                let valid = environment_validity(env, env_init, &inputs);
                let clean = simulate(circuit, init, &inputs, None);
                let clean_prefix = clean
                    .alarms
                    .iter()
                    .zip(&valid)
                    .take_while(|&(&alarm, &ok)| !alarm && ok)
                    .count();
                longest_clean_prefix = longest_clean_prefix.max(clean_prefix);
                for &latch in injectable.iter() {
                    if report.vulnerable.contains(&latch) {
                        continue;
                    }
                    'fault_steps: for fault_step in 2..=clean_prefix {
                        let hit = simulate(circuit, init, &inputs, Some((latch, fault_step)));
                        for step in fault_step..=clean_prefix {
                            if hit.alarms[step - 1] {
                                break;
                            }
                            if hit.data_outputs[step - 1] != clean.data_outputs[step - 1] {
                                let witness = trace_witness(
                                    init, &inputs, &clean, &hit, latch, fault_step, step,
                                );
                                report.vulnerable.insert(latch);
                                report.witnesses.insert(latch, witness);
                                break 'fault_steps;
                            }
                        }
                    }
                }
            }
        }
    }
    if longest_clean_prefix < steps {
        report.unconstrained_alarm_violation = Some(longest_clean_prefix + 1);
    }
    Ok(report)
}

/// Runs one analysis per test case and unions the findings: a latch
/// classified by an earlier test is excluded from later searches, so each
/// latch is reported (with its first witness) exactly once.  The first
/// vacuity violation in test order is the one reported.
pub fn find_vulnerable(
    circuit: &Circuit,
    tests: &[TestCase],
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
    variant: Variant,
    max_expansions: u128,
) -> Result<VulnerabilityReport, AnalysisError> {
    validate_analysis_inputs(circuit, None, env, injectable)?;
    let mut report = VulnerabilityReport::default();
    for test in tests {
        let remaining: BTreeSet<usize> = injectable
            .difference(&report.vulnerable)
            .copied()
            .collect();
        if remaining.is_empty() {
            break;
        }
        let found = match variant {
            Variant::Stla => find_vulnerable_stla(circuit, test, env, &remaining)?,
            Variant::Sta => find_vulnerable_sta(circuit, test, env, &remaining)?,
            Variant::Sim => find_vulnerable_sim(circuit, test, env, &remaining, max_expansions)?,
        };
        report.vulnerable.extend(found.vulnerable.iter().copied());
        for (latch, witness) in found.witnesses {
            report.witnesses.entry(latch).or_insert(witness);
        }
        if report.unconstrained_alarm_violation.is_none() {
            report.unconstrained_alarm_violation = found.unconstrained_alarm_violation;
        }
    }
    Ok(report)
}
