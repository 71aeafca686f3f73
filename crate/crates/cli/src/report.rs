//! Machine-readable verdicts.  The JSON layout is part of the tool's
//! contract: top-level keys `mode`, `circuit`, `parameters`, `findings`,
//! `unclassified` and `timings_ms` never change, and reruns with the same
//! inputs produce the same document except for the timing values.  The
//! text rendering is for people and makes no stability promise.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use softerr_core::aiger::Circuit;
use softerr_core::analysis::{
    ProtectionReport, SpuriousReport, VulnerabilityReport, WitnessTrace,
};

/// Complete result of one analysis run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    /// `vulnerable`, `spurious` or `protected`.
    pub mode: String,
    /// The circuit file as given on the command line.
    pub circuit: String,
    pub parameters: Parameters,
    /// One entry per classified latch, ascending by latch index.
    pub findings: Vec<Finding>,
    /// Latch names the analysis had to give up on (resource limits).
    pub unclassified: Vec<String>,
    pub timings_ms: BTreeMap<String, u64>,
}

/// Echo of the effective analysis configuration.  Fields that do not
/// apply to the mode stay `null`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameters {
    pub variant: Option<String>,
    pub tests: Vec<String>,
    pub environment: Option<String>,
    pub j: Option<usize>,
    pub k: Option<usize>,
    pub max_expansions: Option<u64>,
    /// Step at which the fault-free circuit raises its alarm under the
    /// test alone, making deeper search vacuous.
    pub unconstrained_alarm_violation: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    /// Latch symbol when the circuit names it, else `latch<ordinal>`.
    pub latch: String,
    pub kind: FindingKind,
    /// Concrete run demonstrating the finding; `null` for protection
    /// proofs, which hold over all runs.
    pub witness: Option<Witness>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Vulnerable,
    SpuriousAlarm,
    Protected,
    NotProtected,
}

impl FindingKind {
    fn label(self) -> &'static str {
        match self {
            FindingKind::Vulnerable => "vulnerable",
            FindingKind::SpuriousAlarm => "spurious_alarm",
            FindingKind::Protected => "protected",
            FindingKind::NotProtected => "not_protected",
        }
    }
}

/// One run of both circuit copies, as bit strings per step (leftmost
/// character = position 0).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub fault_latch: usize,
    pub fault_step: usize,
    pub initial_state: String,
    pub inputs: Vec<String>,
    pub outputs_ff: Vec<String>,
    pub outputs_faulty: Vec<String>,
    pub alarm_ff: String,
    pub alarm_faulty: String,
}

impl From<&WitnessTrace> for Witness {
    fn from(trace: &WitnessTrace) -> Witness {
        Witness {
            fault_latch: trace.fault_latch,
            fault_step: trace.fault_step,
            initial_state: trace.initial_state.clone(),
            inputs: trace.inputs.clone(),
            outputs_ff: trace.outputs_ff.clone(),
            outputs_faulty: trace.outputs_faulty.clone(),
            alarm_ff: trace.alarm_ff.clone(),
            alarm_faulty: trace.alarm_faulty.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

pub fn vulnerability_verdict(
    circuit: &Circuit,
    circuit_label: &str,
    mut parameters: Parameters,
    report: &VulnerabilityReport,
    timings_ms: BTreeMap<String, u64>,
) -> Verdict {
    parameters.unconstrained_alarm_violation = report.unconstrained_alarm_violation;
    let findings = report
        .vulnerable
        .iter()
        .map(|&latch| Finding {
            latch: circuit.latch_name(latch),
            kind: FindingKind::Vulnerable,
            witness: report.witnesses.get(&latch).map(Witness::from),
        })
        .collect();
    Verdict {
        mode: "vulnerable".to_string(),
        circuit: circuit_label.to_string(),
        parameters,
        findings,
        unclassified: Vec::new(),
        timings_ms,
    }
}

pub fn spurious_verdict(
    circuit: &Circuit,
    circuit_label: &str,
    mut parameters: Parameters,
    report: &SpuriousReport,
    timings_ms: BTreeMap<String, u64>,
) -> Verdict {
    parameters.unconstrained_alarm_violation = report.unconstrained_alarm_violation;
    let findings = report
        .spurious
        .iter()
        .map(|&latch| Finding {
            latch: circuit.latch_name(latch),
            kind: FindingKind::SpuriousAlarm,
            witness: report.witnesses.get(&latch).map(Witness::from),
        })
        .collect();
    Verdict {
        mode: "spurious".to_string(),
        circuit: circuit_label.to_string(),
        parameters,
        findings,
        unclassified: Vec::new(),
        timings_ms,
    }
}

pub fn protection_verdict(
    circuit: &Circuit,
    circuit_label: &str,
    parameters: Parameters,
    report: &ProtectionReport,
    timings_ms: BTreeMap<String, u64>,
) -> Verdict {
    let findings = report
        .injectable
        .iter()
        .filter_map(|&latch| {
            let (kind, witness) = if report.protected_latches.contains(&latch) {
                (FindingKind::Protected, None)
            } else if let Some(trace) = report.counterexamples.get(&latch) {
                (FindingKind::NotProtected, Some(Witness::from(trace)))
            } else {
                return None; // unclassified: listed separately below
            };
            Some(Finding {
                latch: circuit.latch_name(latch),
                kind,
                witness,
            })
        })
        .collect();
    Verdict {
        mode: "protected".to_string(),
        circuit: circuit_label.to_string(),
        parameters,
        findings,
        unclassified: report
            .unclassified
            .iter()
            .map(|&latch| circuit.latch_name(latch))
            .collect(),
        timings_ms,
    }
}

pub fn write_report(verdict: &Verdict, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(verdict).expect("verdicts always serialize");
            text.push('\n');
            text
        }
        ReportFormat::Text => render_text(verdict),
    }
}

fn render_text(verdict: &Verdict) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "mode: {}", verdict.mode);
    let _ = writeln!(out, "circuit: {}", verdict.circuit);
    if let Some(variant) = &verdict.parameters.variant {
        let _ = writeln!(out, "variant: {variant}");
    }
    if !verdict.parameters.tests.is_empty() {
        let _ = writeln!(out, "tests: {}", verdict.parameters.tests.join(", "));
    }
    if let Some(env) = &verdict.parameters.environment {
        let _ = writeln!(out, "environment: {env}");
    }
    if let (Some(j), Some(k)) = (verdict.parameters.j, verdict.parameters.k) {
        let _ = writeln!(out, "window: j={j} k={k}");
    }
    if let Some(step) = verdict.parameters.unconstrained_alarm_violation {
        let _ = writeln!(
            out,
            "note: the fault-free circuit raises its alarm by step {step} under this \
             test alone; later steps were not searched"
        );
    }
    if verdict.findings.is_empty() {
        let _ = writeln!(out, "findings: none");
    } else {
        let _ = writeln!(out, "findings: {}", verdict.findings.len());
        for finding in &verdict.findings {
            match &finding.witness {
                Some(witness) => {
                    let _ = writeln!(
                        out,
                        "  {}: {} (fault at step {}, run of {} steps)",
                        finding.latch,
                        finding.kind.label(),
                        witness.fault_step,
                        witness.inputs.len()
                    );
                }
                None => {
                    let _ = writeln!(out, "  {}: {}", finding.latch, finding.kind.label());
                }
            }
        }
    }
    if !verdict.unclassified.is_empty() {
        let _ = writeln!(out, "unclassified: {}", verdict.unclassified.join(", "));
    }
    let timings: Vec<String> = verdict
        .timings_ms
        .iter()
        .map(|(phase, ms)| format!("{phase} {ms} ms"))
        .collect();
    if !timings.is_empty() {
        let _ = writeln!(out, "timings: {}", timings.join(", "));
    }
    out
}
