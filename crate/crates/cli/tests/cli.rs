//! End-to-end checks of the `softerr` binary: exit codes, report
//! formats, file handling, and the external-solver protocol spoken by
//! `solve-dimacs`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softerr_cli::report::{FindingKind, Verdict};
use softerr_core::aiger::parse_aiger;
use softerr_core::sat::{CdclSolver, ExternalSolver, Lit, SatBackend};

const PASSTHRU: &str = "aag 3 1 1 2 0\n2\n4 2\n4\n0\n";
const UNUSED_DMR: &str = "aag 6 1 2 2 3\n2\n4 2\n6 2\n0\n12\n8 4 6\n10 5 7\n12 9 11\n\
                          i0 i\nl0 L1\nl1 L2\no0 o\no1 alarm\n";

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_softerr")
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("the binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .current_dir(dir)
        .output()
        .expect("the binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is text")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is text")
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn help_exits_cleanly() {
    let output = run(&["--help"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("check"));
    assert!(text.contains("gen"));
    assert!(text.contains("bench"));
}

#[test]
fn usage_errors_exit_with_one() {
    let output = run(&["check", "vulnerable", "--no-such-flag"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("error"));

    // A check without any test case is a usage error too.
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "p.aag", PASSTHRU);
    let output = run(&["check", "vulnerable", "-c", circuit.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).starts_with("error:"));
}

#[test]
fn vulnerable_check_reports_the_escaping_latch_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "p.aag", PASSTHRU);
    let test = write(dir.path(), "t.tc", "1\n0\n");
    let output = run(&[
        "check",
        "vulnerable",
        "-c",
        circuit.to_str().unwrap(),
        "-t",
        test.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let verdict: Verdict = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(verdict.mode, "vulnerable");
    assert_eq!(verdict.parameters.variant.as_deref(), Some("stla"));
    assert_eq!(verdict.findings.len(), 1);
    let finding = &verdict.findings[0];
    assert_eq!(finding.latch, "latch0");
    assert_eq!(finding.kind, FindingKind::Vulnerable);
    let witness = finding.witness.as_ref().unwrap();
    assert!(witness.fault_step >= 2);
    assert!(!witness.inputs.is_empty());
    assert!(verdict.timings_ms.contains_key("total"));
}

#[test]
fn all_variants_agree_on_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "p.aag", PASSTHRU);
    let test = write(dir.path(), "t.tc", "1\n?\n");
    let mut latches: Vec<Vec<String>> = Vec::new();
    for variant in ["stla", "sta", "sim"] {
        let output = run(&[
            "check",
            "vulnerable",
            "-c",
            circuit.to_str().unwrap(),
            "-t",
            test.to_str().unwrap(),
            "--variant",
            variant,
        ]);
        assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
        let verdict: Verdict = serde_json::from_str(&stdout(&output)).unwrap();
        latches.push(verdict.findings.iter().map(|f| f.latch.clone()).collect());
    }
    assert_eq!(latches[0], latches[1]);
    assert_eq!(latches[1], latches[2]);
}

#[test]
fn text_format_is_for_people() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "p.aag", PASSTHRU);
    let test = write(dir.path(), "t.tc", "1\n0\n");
    let output = run(&[
        "check",
        "vulnerable",
        "-c",
        circuit.to_str().unwrap(),
        "-t",
        test.to_str().unwrap(),
        "--format",
        "text",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("mode: vulnerable"));
    assert!(text.contains("latch0"));
    assert!(serde_json::from_str::<Verdict>(&text).is_err());
}

#[test]
fn unreadable_or_invalid_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(
        dir.path(),
        &["check", "vulnerable", "-c", "missing.aag", "--open-test", "2"],
    );
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).starts_with("error:"));

    let broken = write(dir.path(), "broken.aag", "aag 1 2 3\n");
    let output = run(&[
        "check",
        "vulnerable",
        "-c",
        broken.to_str().unwrap(),
        "--open-test",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).starts_with("error:"));

    let circuit = write(dir.path(), "p.aag", PASSTHRU);
    let bad_test = write(dir.path(), "bad.tc", "11\n");
    let output = run(&[
        "check",
        "vulnerable",
        "-c",
        circuit.to_str().unwrap(),
        "-t",
        bad_test.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).starts_with("error:"));
}

#[test]
fn simulation_budget_exhaustion_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "p.aag", PASSTHRU);
    let output = run(&[
        "check",
        "vulnerable",
        "-c",
        circuit.to_str().unwrap(),
        "--open-test",
        "25",
        "--variant",
        "sim",
    ]);
    assert_eq!(output.status.code(), Some(3));
    let message = stderr(&output);
    assert!(message.starts_with("error:"));
    assert!(message.contains("stla"));
}

#[test]
fn alarm_override_changes_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "p.aag", PASSTHRU);
    let test = write(dir.path(), "t.tc", "1\n0\n");
    // Treating the data output as the alarm leaves only the constant
    // false output as data, which no fault can disturb.
    let output = run(&[
        "check",
        "vulnerable",
        "-c",
        circuit.to_str().unwrap(),
        "-t",
        test.to_str().unwrap(),
        "--alarm-output",
        "0",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let verdict: Verdict = serde_json::from_str(&stdout(&output)).unwrap();
    assert!(verdict.findings.is_empty());
}

#[test]
fn latch_list_files_select_the_fault_sites() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "u.aag", UNUSED_DMR);
    let test = write(dir.path(), "t.tc", "1\n0\n0\n");
    let only_second = write(dir.path(), "keep.list", "# fault sites\nL2\n");
    let output = run(&[
        "check",
        "spurious",
        "-c",
        circuit.to_str().unwrap(),
        "-t",
        test.to_str().unwrap(),
        "--include-latches",
        only_second.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let verdict: Verdict = serde_json::from_str(&stdout(&output)).unwrap();
    let latches: Vec<&str> = verdict.findings.iter().map(|f| f.latch.as_str()).collect();
    assert_eq!(latches, vec!["L2"]);
    assert_eq!(verdict.findings[0].kind, FindingKind::SpuriousAlarm);

    let everything = write(dir.path(), "all.list", "L1\n1\n");
    let output = run(&[
        "check",
        "spurious",
        "-c",
        circuit.to_str().unwrap(),
        "-t",
        test.to_str().unwrap(),
        "--exclude-latches",
        everything.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).starts_with("error:"));

    let unknown = write(dir.path(), "unknown.list", "no_such_latch\n");
    let output = run(&[
        "check",
        "spurious",
        "-c",
        circuit.to_str().unwrap(),
        "-t",
        test.to_str().unwrap(),
        "--include-latches",
        unknown.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("no_such_latch"));
}

#[test]
fn protection_check_classifies_redundant_banks() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = dir.path().join("tmr.aag");
    let output = run(&[
        "gen",
        "tmr",
        "--width",
        "1",
        "--delay",
        "0",
        "-o",
        circuit.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let output = run(&[
        "check",
        "protected",
        "-c",
        circuit.to_str().unwrap(),
        "-j",
        "1",
        "-k",
        "1",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let verdict: Verdict = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(verdict.mode, "protected");
    assert_eq!(verdict.parameters.j, Some(1));
    assert_eq!(verdict.parameters.k, Some(1));
    assert!(!verdict.findings.is_empty());
    assert!(verdict
        .findings
        .iter()
        .all(|finding| finding.kind == FindingKind::Protected));
    assert!(verdict.unclassified.is_empty());
}

#[test]
fn miter_export_writes_a_valid_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(dir.path(), "p.aag", PASSTHRU);
    let test = write(dir.path(), "t.tc", "1\n0\n");
    let miter_path = dir.path().join("miter.aag");
    let output = run(&[
        "check",
        "vulnerable",
        "-c",
        circuit.to_str().unwrap(),
        "-t",
        test.to_str().unwrap(),
        "--export-miter",
        miter_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = std::fs::read_to_string(&miter_path).unwrap();
    let miter = parse_aiger(&text).unwrap();
    let original = parse_aiger(PASSTHRU).unwrap();
    assert_eq!(
        miter.inputs.len(),
        original.inputs.len() + original.latches.len() + 1
    );
    assert_eq!(miter.output_name(0), "vuln_check");
}

#[test]
fn generators_are_deterministic_and_valid() {
    let first = run(&["gen", "random", "--seed", "7", "--latches", "5"]);
    let second = run(&["gen", "random", "--seed", "7", "--latches", "5"]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&second));
    let circuit = parse_aiger(&stdout(&first)).unwrap();
    assert_eq!(circuit.latches.len(), 5);

    let gated = run(&["gen", "parity", "--width", "3", "--gated"]);
    assert_eq!(gated.status.code(), Some(0));
    parse_aiger(&stdout(&gated)).unwrap();

    let zero = run(&["gen", "parity", "--width", "0"]);
    assert_eq!(zero.status.code(), Some(1));
    assert!(stderr(&zero).starts_with("error:"));
}

#[test]
fn bench_prints_a_csv_sweep() {
    let dir = tempfile::tempdir().unwrap();
    for (name, width) in [("a.aag", "2"), ("b.aag", "3")] {
        let path = dir.path().join(name);
        let output = run(&[
            "gen",
            "parity",
            "--width",
            width,
            "-o",
            path.to_str().unwrap(),
        ]);
        assert_eq!(output.status.code(), Some(0));
    }
    let output = run(&[
        "bench",
        dir.path().to_str().unwrap(),
        "--open-bits",
        "0,1",
        "--length",
        "3",
        "--variants",
        "stla,sim",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = stdout(&output);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("variant,open_bits,wall_ms"));
    let rows: Vec<Vec<&str>> = lines.map(|line| line.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row.len(), 3);
        assert!(["stla", "sim"].contains(&row[0]));
        row[1].parse::<usize>().unwrap();
        row[2].parse::<u64>().unwrap();
    }

    let empty = tempfile::tempdir().unwrap();
    let output = run(&["bench", empty.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn the_binary_speaks_the_external_solver_protocol() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x50f7e88);
    for round in 0..25 {
        let num_vars = rng.gen_range(3..=8);
        let num_clauses = rng.gen_range(2..=24);
        let clauses: Vec<Vec<(usize, bool)>> = (0..num_clauses)
            .map(|_| {
                (0..3)
                    .map(|_| (rng.gen_range(0..num_vars), rng.gen()))
                    .collect()
            })
            .collect();

        let mut embedded = CdclSolver::new();
        let mut external =
            ExternalSolver::new(vec![binary().to_string(), "solve-dimacs".to_string()]);
        let embedded_vars: Vec<Lit> = (0..num_vars)
            .map(|_| embedded.new_var().positive())
            .collect();
        let external_vars: Vec<Lit> = (0..num_vars)
            .map(|_| external.new_var().positive())
            .collect();
        for clause in &clauses {
            let lits = |vars: &[Lit]| -> Vec<Lit> {
                clause
                    .iter()
                    .map(|&(var, neg)| if neg { !vars[var] } else { vars[var] })
                    .collect()
            };
            embedded.add_clause(&lits(&embedded_vars));
            external.add_clause(&lits(&external_vars));
        }
        let ours = embedded.solve(&[]);
        let theirs = external.solve(&[]);
        assert_eq!(ours.status, theirs.status, "round {round}");
        if let Some(model) = theirs.model {
            for clause in &clauses {
                assert!(
                    clause.iter().any(|&(var, neg)| {
                        let lit = external_vars[var];
                        model.value(if neg { !lit } else { lit })
                    }),
                    "round {round}: external model violates a clause"
                );
            }
        }
    }
}
