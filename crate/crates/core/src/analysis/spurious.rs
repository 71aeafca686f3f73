//! Spurious-alarm analysis: find latches whose single flip can ring the
//! faulty copy's alarm even though the data outputs never differ and the
//! latch states fully reconverge — a false positive of the protection
//! logic that costs a recovery for nothing.
//!
//! The search shares the escape analysis' unrolling; per step it pins the
//! data outputs of both copies equal (cumulatively) and asks for a model
//! where the states are bit-identical again at the next step while the
//! faulty alarm rang at some step so far.

use std::collections::BTreeSet;

use crate::aiger::Circuit;
use crate::analysis::unroll::TwoCopyUnrolling;
use crate::analysis::{
    validate_analysis_inputs, AnalysisError, SpuriousReport, Variant,
};
use crate::cnf::{encode_vector_compare, VectorRelation};
use crate::sat::Lit;
use crate::testcase::TestCase;

/// Searches with symbolic fault time and location in one solver instance,
/// extracting every latch through an all-solutions loop.
pub fn find_spurious_stla(
    circuit: &Circuit,
    test: &TestCase,
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
) -> Result<SpuriousReport, AnalysisError> {
    validate_analysis_inputs(circuit, Some(test), env, injectable)?;
    let mut unrolling = TwoCopyUnrolling::new(circuit, test, env, injectable);
    let mut report = SpuriousReport::default();
    let mut faulty_alarms: Vec<Lit> = Vec::new();
    for _ in 0..test.len() {
        let step = unrolling.advance();
        let outputs_equal = encode_vector_compare(
            &mut unrolling.ctx,
            &unrolling.ff[step - 1].data_outputs,
            &unrolling.faulty[step - 1].data_outputs,
            VectorRelation::Equal,
        );
        unrolling.ctx.add_clause(&[outputs_equal]);
        if unrolling.vacuous() {
            report.unconstrained_alarm_violation = Some(step);
            break;
        }
        faulty_alarms.push(
            unrolling.faulty[step - 1]
                .alarm
                .expect("alarm designated before analysis"),
        );
        let converged = encode_vector_compare(
            &mut unrolling.ctx,
            &unrolling.ff[step - 1].next_latches,
            &unrolling.faulty[step - 1].next_latches,
            VectorRelation::Equal,
        );
        let alarm_rang = unrolling.ctx.big_or(&faulty_alarms);
        let query = unrolling.ctx.and_lit(converged, alarm_rang);
        loop {
            let result = unrolling.ctx.solve(&[query]);
            let Some(model) = result.model else { break };
            let latch = unrolling
                .fault
                .locations
                .iter()
                .find(|&&(_, lit)| model.value(lit))
                .map(|&(latch, _)| latch)
                .expect("the one-hot location constraint selects a latch");
            let witness = unrolling.witness(&model, latch, step);
            report.spurious.insert(latch);
            report.witnesses.insert(latch, witness);
            let location = unrolling.fault.lit_for(latch).expect("found above");
            unrolling.ctx.add_clause(&[!location]);
        }
        if report.spurious.len() == injectable.len() {
            // Everything is classified; further steps could only trip the
            // now-unsatisfiable one-hot constraint.
            break;
        }
    }
    Ok(report)
}

/// Searches with symbolic fault time but one solver instance per latch.
pub fn find_spurious_sta(
    circuit: &Circuit,
    test: &TestCase,
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
) -> Result<SpuriousReport, AnalysisError> {
    validate_analysis_inputs(circuit, Some(test), env, injectable)?;
    let mut report = SpuriousReport::default();
    'latches: for &latch in injectable {
        let single: BTreeSet<usize> = [latch].into_iter().collect();
        let mut unrolling = TwoCopyUnrolling::new(circuit, test, env, &single);
        let mut faulty_alarms: Vec<Lit> = Vec::new();
        for _ in 0..test.len() {
            if let Some(violation) = report.unconstrained_alarm_violation {
                if unrolling.steps() + 1 >= violation {
                    continue 'latches;
                }
            }
            let step = unrolling.advance();
            let outputs_equal = encode_vector_compare(
                &mut unrolling.ctx,
                &unrolling.ff[step - 1].data_outputs,
                &unrolling.faulty[step - 1].data_outputs,
                VectorRelation::Equal,
            );
            unrolling.ctx.add_clause(&[outputs_equal]);
            if report.unconstrained_alarm_violation.is_none() && unrolling.vacuous() {
                report.unconstrained_alarm_violation = Some(step);
                continue 'latches;
            }
            faulty_alarms.push(
                unrolling.faulty[step - 1]
                    .alarm
                    .expect("alarm designated before analysis"),
            );
            let converged = encode_vector_compare(
                &mut unrolling.ctx,
                &unrolling.ff[step - 1].next_latches,
                &unrolling.faulty[step - 1].next_latches,
                VectorRelation::Equal,
            );
            let alarm_rang = unrolling.ctx.big_or(&faulty_alarms);
            let query = unrolling.ctx.and_lit(converged, alarm_rang);
            if let Some(model) = unrolling.ctx.solve(&[query]).model {
                let witness = unrolling.witness(&model, latch, step);
                report.spurious.insert(latch);
                report.witnesses.insert(latch, witness);
                continue 'latches;
            }
        }
    }
    Ok(report)
}

/// Runs one analysis per test case and unions the findings, excluding
/// already-classified latches from later searches; see
/// [`super::vulnerable::find_vulnerable`] for the aggregation rules.
/// The sim variant does not apply to spurious alarms.
pub fn find_spurious(
    circuit: &Circuit,
    tests: &[TestCase],
    env: Option<&Circuit>,
    injectable: &BTreeSet<usize>,
    variant: Variant,
) -> Result<SpuriousReport, AnalysisError> {
    validate_analysis_inputs(circuit, None, env, injectable)?;
    let mut report = SpuriousReport::default();
    for test in tests {
        let remaining: BTreeSet<usize> =
            injectable.difference(&report.spurious).copied().collect();
        if remaining.is_empty() {
            break;
        }
        let found = match variant {
            Variant::Stla => find_spurious_stla(circuit, test, env, &remaining)?,
            Variant::Sta => find_spurious_sta(circuit, test, env, &remaining)?,
            Variant::Sim => return Err(AnalysisError::UnsupportedVariant),
        };
        report.spurious.extend(found.spurious.iter().copied());
        for (latch, witness) in found.witnesses {
            report.witnesses.entry(latch).or_insert(witness);
        }
        if report.unconstrained_alarm_violation.is_none() {
            report.unconstrained_alarm_violation = found.unconstrained_alarm_violation;
        }
    }
    Ok(report)
}
