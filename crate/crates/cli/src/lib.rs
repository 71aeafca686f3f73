//! Command-line front end for the soft-error analysis toolkit.
//!
//! `run_cli` is the whole program: `main` forwards `argv` and exits with
//! the returned code.  Exit codes are part of the contract — 0 when an
//! analysis completed (with or without findings), 1 for usage errors,
//! 2 for unreadable or invalid inputs, 3 when a resource limit stopped
//! the run.  Failures are printed to standard error as `error: ...`.

pub mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use softerr_core::aiger::{parse_aiger, AlarmSpec, Circuit};
use softerr_core::analysis::miter::export_composed_miter;
use softerr_core::analysis::protected::{find_protected, ProtectionQuery};
use softerr_core::analysis::spurious::find_spurious;
use softerr_core::analysis::vulnerable::find_vulnerable;
use softerr_core::analysis::{all_latches, AnalysisError, Variant};
use softerr_core::corpus::{gen_parity_protected, gen_random_aig, gen_random_testcase, gen_tmr};
use softerr_core::sat::{CdclSolver, Lit, SatBackend, SolveStatus};
use softerr_core::testcase::{parse_testcase, TestCase};

use crate::report::{
    protection_verdict, spurious_verdict, vulnerability_verdict, write_report, Parameters,
    ReportFormat,
};

#[derive(Parser)]
#[command(
    name = "softerr",
    version,
    about = "Soft-error analysis for sequential AIGER circuits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify the latches of a circuit
    #[command(subcommand)]
    Check(CheckCommand),
    /// Emit benchmark circuits
    #[command(subcommand)]
    Gen(GenCommand),
    /// Time analysis variants over a circuit corpus and print CSV
    Bench(BenchArgs),
    /// Decide a DIMACS CNF file with the embedded solver
    SolveDimacs(SolveDimacsArgs),
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Find latches whose faults can corrupt outputs undetected
    Vulnerable(VulnerableArgs),
    /// Find latches whose faults can raise the alarm without damage
    Spurious(SpuriousArgs),
    /// Prove latches protected within a bounded window
    Protected(ProtectedArgs),
}

#[derive(Args)]
struct CircuitOpts {
    /// AIGER ASCII circuit file
    #[arg(short, long, value_name = "FILE")]
    circuit: PathBuf,
    /// Alarm output override: a symbol name or an output index
    #[arg(long, value_name = "NAME|INDEX")]
    alarm_output: Option<String>,
    /// File of latch names/indices to analyze, one per line
    #[arg(long, value_name = "FILE")]
    include_latches: Option<PathBuf>,
    /// File of latch names/indices to skip, one per line
    #[arg(long, value_name = "FILE")]
    exclude_latches: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Args)]
struct StimulusOpts {
    /// Test-case file; repeat for several test cases
    #[arg(short, long, value_name = "FILE")]
    test: Vec<PathBuf>,
    /// Add an all-open test case of this many steps
    #[arg(long, value_name = "LENGTH")]
    open_test: Option<usize>,
    /// Environment circuit whose single output gates valid inputs
    #[arg(short, long, value_name = "FILE")]
    env: Option<PathBuf>,
}

#[derive(Args)]
struct VulnerableArgs {
    #[command(flatten)]
    circuit: CircuitOpts,
    #[command(flatten)]
    stimulus: StimulusOpts,
    /// Search strategy
    #[arg(long, value_enum, default_value_t = VariantArg::Stla)]
    variant: VariantArg,
    /// Enumeration budget for the sim variant
    #[arg(long, value_name = "N", default_value_t = 1 << 20)]
    max_expansions: u64,
    /// Also write the self-composed check circuit to this file
    #[arg(long, value_name = "FILE")]
    export_miter: Option<PathBuf>,
}

#[derive(Args)]
struct SpuriousArgs {
    #[command(flatten)]
    circuit: CircuitOpts,
    #[command(flatten)]
    stimulus: StimulusOpts,
    /// Search strategy (the sim variant does not apply here)
    #[arg(long, value_enum, default_value_t = VariantArg::Stla)]
    variant: VariantArg,
}

#[derive(Args)]
struct ProtectedArgs {
    #[command(flatten)]
    circuit: CircuitOpts,
    /// Start-state bound: reachable within j steps, or j alarm-free
    /// steps from anywhere; 0 admits every state
    #[arg(short, default_value_t = 0)]
    j: usize,
    /// Window length in steps
    #[arg(short, default_value_t = 1)]
    k: usize,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random well-formed circuit, deterministic in the seed
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        inputs: usize,
        #[arg(long, default_value_t = 4)]
        latches: usize,
        #[arg(long, default_value_t = 12)]
        ands: usize,
        /// Write here instead of standard output
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Parity-protected register file with optional alarm gating
    Parity {
        #[arg(long)]
        width: usize,
        /// Gate the alarm behind an enable input
        #[arg(long)]
        gated: bool,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Triple-redundant register bank with a delayed mismatch alarm
    Tmr {
        #[arg(long)]
        width: usize,
        #[arg(long, default_value_t = 0)]
        delay: usize,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Directory containing .aag circuits
    corpus: PathBuf,
    /// Open-bit counts to sweep
    #[arg(long, value_delimiter = ',', default_value = "0,2,4,6,8")]
    open_bits: Vec<usize>,
    /// Test length in steps
    #[arg(long, default_value_t = 15)]
    length: usize,
    /// Variants to time
    #[arg(long, value_enum, value_delimiter = ',', default_value = "sim,stla")]
    variants: Vec<VariantArg>,
}

#[derive(Args)]
struct SolveDimacsArgs {
    /// DIMACS CNF file
    file: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Stla,
    Sta,
    Sim,
}

impl VariantArg {
    fn label(self) -> &'static str {
        match self {
            VariantArg::Stla => "stla",
            VariantArg::Sta => "sta",
            VariantArg::Sim => "sim",
        }
    }
}

impl From<VariantArg> for Variant {
    fn from(arg: VariantArg) -> Variant {
        match arg {
            VariantArg::Stla => Variant::Stla,
            VariantArg::Sta => Variant::Sta,
            VariantArg::Sim => Variant::Sim,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

impl From<FormatArg> for ReportFormat {
    fn from(arg: FormatArg) -> ReportFormat {
        match arg {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Text => ReportFormat::Text,
        }
    }
}

/// A failed command: the process exit code it maps to and the message
/// printed after the `error:` prefix.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

fn usage_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        message: message.into(),
    }
}

fn input_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

impl From<AnalysisError> for CliError {
    fn from(error: AnalysisError) -> CliError {
        let code = match error {
            AnalysisError::BudgetExceeded { .. } => 3,
            _ => 2,
        };
        CliError {
            code,
            message: error.to_string(),
        }
    }
}

/// Parses `argv` (program name first), runs the requested command and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(error) => {
            return match error.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{error}");
                    0
                }
                // clap renders these with its own `error:` prefix.
                _ => {
                    eprint!("{error}");
                    1
                }
            };
        }
    };
    let outcome = match cli.command {
        Command::Check(CheckCommand::Vulnerable(args)) => check_vulnerable(args),
        Command::Check(CheckCommand::Spurious(args)) => check_spurious(args),
        Command::Check(CheckCommand::Protected(args)) => check_protected(args),
        Command::Gen(command) => generate(command),
        Command::Bench(args) => {
            let variants: Vec<Variant> = args.variants.iter().map(|&v| v.into()).collect();
            bench_scaling(&args.corpus, &args.open_bits, args.length, &variants)
        }
        Command::SolveDimacs(args) => solve_dimacs(&args.file),
    };
    match outcome {
        Ok(stdout_text) => {
            print!("{stdout_text}");
            0
        }
        Err(error) => {
            eprintln!("error: {}", error.message);
            error.code
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|error| input_error(format!("{}: {error}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|error| input_error(format!("{}: {error}", path.display())))
}

fn load_circuit(path: &Path, alarm_output: Option<&str>) -> Result<Circuit, CliError> {
    let text = read_file(path)?;
    let mut circuit =
        parse_aiger(&text).map_err(|error| input_error(format!("{}: {error}", path.display())))?;
    if let Some(key) = alarm_output {
        let spec = match key.parse::<usize>() {
            Ok(index) => AlarmSpec::Index(index),
            Err(_) => AlarmSpec::Name(key.to_string()),
        };
        circuit
            .designate_alarm(Some(&spec))
            .map_err(|error| input_error(format!("{}: {error}", path.display())))?;
    }
    Ok(circuit)
}

fn parse_latch_list(path: &Path, circuit: &Circuit) -> Result<BTreeSet<usize>, CliError> {
    let text = read_file(path)?;
    let mut latches = BTreeSet::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let latch = circuit.find_latch(line).ok_or_else(|| {
            input_error(format!("{}: unknown latch {line:?}", path.display()))
        })?;
        latches.insert(latch);
    }
    Ok(latches)
}

fn injectable_latches(circuit: &Circuit, opts: &CircuitOpts) -> Result<BTreeSet<usize>, CliError> {
    let mut latches = match &opts.include_latches {
        Some(path) => parse_latch_list(path, circuit)?,
        None => all_latches(circuit.latches.len()),
    };
    if let Some(path) = &opts.exclude_latches {
        let skipped = parse_latch_list(path, circuit)?;
        latches = latches.difference(&skipped).copied().collect();
    }
    Ok(latches)
}

fn load_stimulus(
    opts: &StimulusOpts,
    circuit: &Circuit,
) -> Result<(Vec<TestCase>, Vec<String>, Option<Circuit>), CliError> {
    let width = circuit.inputs.len();
    let mut tests = Vec::new();
    let mut labels = Vec::new();
    for path in &opts.test {
        let text = read_file(path)?;
        let test = parse_testcase(&text, width)
            .map_err(|error| input_error(format!("{}: {error}", path.display())))?;
        tests.push(test);
        labels.push(path.display().to_string());
    }
    if let Some(length) = opts.open_test {
        tests.push(TestCase::all_open(width, length));
        labels.push(format!("open:{length}"));
    }
    if tests.is_empty() {
        return Err(usage_error(
            "a test case is required: pass --test FILE or --open-test LENGTH",
        ));
    }
    let env = match &opts.env {
        Some(path) => Some(load_circuit(path, None)?),
        None => None,
    };
    Ok((tests, labels, env))
}

fn timing_table(parse_ms: u64, analysis_ms: u64, total: Instant) -> BTreeMap<String, u64> {
    [
        ("parse".to_string(), parse_ms),
        ("analysis".to_string(), analysis_ms),
        ("total".to_string(), total.elapsed().as_millis() as u64),
    ]
    .into_iter()
    .collect()
}

fn check_vulnerable(args: VulnerableArgs) -> Result<String, CliError> {
    let total = Instant::now();
    let circuit = load_circuit(&args.circuit.circuit, args.circuit.alarm_output.as_deref())?;
    let (tests, test_labels, env) = load_stimulus(&args.stimulus, &circuit)?;
    let injectable = injectable_latches(&circuit, &args.circuit)?;
    let parse_ms = total.elapsed().as_millis() as u64;
    if let Some(path) = &args.export_miter {
        let length = tests.iter().map(TestCase::len).max();
        let miter = export_composed_miter(&circuit, length)?;
        write_file(path, &miter.to_aiger())?;
    }
    let analysis = Instant::now();
    let found = find_vulnerable(
        &circuit,
        &tests,
        env.as_ref(),
        &injectable,
        args.variant.into(),
        u128::from(args.max_expansions),
    )?;
    let analysis_ms = analysis.elapsed().as_millis() as u64;
    let parameters = Parameters {
        variant: Some(args.variant.label().to_string()),
        tests: test_labels,
        environment: args.stimulus.env.as_ref().map(|p| p.display().to_string()),
        max_expansions: (args.variant == VariantArg::Sim).then_some(args.max_expansions),
        ..Parameters::default()
    };
    let verdict = vulnerability_verdict(
        &circuit,
        &args.circuit.circuit.display().to_string(),
        parameters,
        &found,
        timing_table(parse_ms, analysis_ms, total),
    );
    Ok(write_report(&verdict, args.circuit.format.into()))
}

fn check_spurious(args: SpuriousArgs) -> Result<String, CliError> {
    let total = Instant::now();
    let circuit = load_circuit(&args.circuit.circuit, args.circuit.alarm_output.as_deref())?;
    let (tests, test_labels, env) = load_stimulus(&args.stimulus, &circuit)?;
    let injectable = injectable_latches(&circuit, &args.circuit)?;
    let parse_ms = total.elapsed().as_millis() as u64;
    let analysis = Instant::now();
    let found = find_spurious(
        &circuit,
        &tests,
        env.as_ref(),
        &injectable,
        args.variant.into(),
    )?;
    let analysis_ms = analysis.elapsed().as_millis() as u64;
    let parameters = Parameters {
        variant: Some(args.variant.label().to_string()),
        tests: test_labels,
        environment: args.stimulus.env.as_ref().map(|p| p.display().to_string()),
        ..Parameters::default()
    };
    let verdict = spurious_verdict(
        &circuit,
        &args.circuit.circuit.display().to_string(),
        parameters,
        &found,
        timing_table(parse_ms, analysis_ms, total),
    );
    Ok(write_report(&verdict, args.circuit.format.into()))
}

fn check_protected(args: ProtectedArgs) -> Result<String, CliError> {
    let total = Instant::now();
    let circuit = load_circuit(&args.circuit.circuit, args.circuit.alarm_output.as_deref())?;
    let injectable = injectable_latches(&circuit, &args.circuit)?;
    let parse_ms = total.elapsed().as_millis() as u64;
    let analysis = Instant::now();
    let query = ProtectionQuery {
        j: args.j,
        k: args.k,
        injectable,
        deadline: None,
    };
    let found = find_protected(&circuit, &query)?;
    let analysis_ms = analysis.elapsed().as_millis() as u64;
    let parameters = Parameters {
        j: Some(args.j),
        k: Some(args.k),
        ..Parameters::default()
    };
    let verdict = protection_verdict(
        &circuit,
        &args.circuit.circuit.display().to_string(),
        parameters,
        &found,
        timing_table(parse_ms, analysis_ms, total),
    );
    Ok(write_report(&verdict, args.circuit.format.into()))
}

fn generate(command: GenCommand) -> Result<String, CliError> {
    let (circuit, output) = match command {
        GenCommand::Random {
            seed,
            inputs,
            latches,
            ands,
            output,
        } => (gen_random_aig(seed, inputs, latches, ands), output),
        GenCommand::Parity {
            width,
            gated,
            output,
        } => {
            if width == 0 {
                return Err(usage_error("--width must be at least 1"));
            }
            (gen_parity_protected(width, gated), output)
        }
        GenCommand::Tmr {
            width,
            delay,
            output,
        } => {
            if width == 0 {
                return Err(usage_error("--width must be at least 1"));
            }
            (gen_tmr(width, delay), output)
        }
    };
    let text = circuit.to_aiger();
    match output {
        Some(path) => {
            write_file(&path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

/// Times `find_vulnerable` per (variant, open-bit count) over every
/// circuit in `corpus_dir`, returning `variant,open_bits,wall_ms` CSV
/// rows for plotting.  Each circuit gets one deterministic random test
/// of `length` steps with the requested number of opened bits.
pub fn bench_scaling(
    corpus_dir: &Path,
    open_bits: &[usize],
    length: usize,
    variants: &[Variant],
) -> Result<String, CliError> {
    let entries = fs::read_dir(corpus_dir)
        .map_err(|error| input_error(format!("{}: {error}", corpus_dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|entry| entry.path()))
        .filter(|path| path.extension().is_some_and(|ext| ext == "aag"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(input_error(format!(
            "{}: no .aag circuits found",
            corpus_dir.display()
        )));
    }
    let mut circuits = Vec::new();
    for path in &paths {
        circuits.push(load_circuit(path, None)?);
    }
    let mut csv = String::from("variant,open_bits,wall_ms\n");
    for &variant in variants {
        for &bits in open_bits {
            let started = Instant::now();
            for (index, circuit) in circuits.iter().enumerate() {
                let width = circuit.inputs.len();
                let open = bits.min(width * length);
                let test = gen_random_testcase(index as u64, width, length, open);
                let injectable = all_latches(circuit.latches.len());
                find_vulnerable(circuit, &[test], None, &injectable, variant, u128::MAX)?;
            }
            let wall_ms = started.elapsed().as_millis() as u64;
            let label = match variant {
                Variant::Stla => "stla",
                Variant::Sta => "sta",
                Variant::Sim => "sim",
            };
            csv.push_str(&format!("{label},{bits},{wall_ms}\n"));
        }
    }
    Ok(csv)
}

fn parse_dimacs(text: &str) -> Result<(usize, Vec<Vec<i64>>), String> {
    let mut num_vars: Option<usize> = None;
    let mut clauses = Vec::new();
    let mut current: Vec<i64> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() != 3 || fields[0] != "cnf" {
                return Err("malformed problem line".to_string());
            }
            num_vars = Some(
                fields[1]
                    .parse()
                    .map_err(|_| "malformed variable count".to_string())?,
            );
            continue;
        }
        for token in line.split_whitespace() {
            let value: i64 = token
                .parse()
                .map_err(|_| format!("bad literal {token:?}"))?;
            if value == 0 {
                clauses.push(std::mem::take(&mut current));
            } else {
                current.push(value);
            }
        }
    }
    let num_vars = num_vars.ok_or_else(|| "missing problem line".to_string())?;
    if !current.is_empty() {
        clauses.push(current);
    }
    for clause in &clauses {
        for &code in clause {
            if code.unsigned_abs() as usize > num_vars {
                return Err(format!("literal {code} exceeds variable count {num_vars}"));
            }
        }
    }
    Ok((num_vars, clauses))
}

fn solve_dimacs(path: &Path) -> Result<String, CliError> {
    let text = read_file(path)?;
    let (num_vars, clauses) = parse_dimacs(&text)
        .map_err(|message| input_error(format!("{}: {message}", path.display())))?;
    let mut solver = CdclSolver::new();
    let lits: Vec<Lit> = (0..num_vars).map(|_| solver.new_var().positive()).collect();
    for clause in &clauses {
        let mapped: Vec<Lit> = clause
            .iter()
            .map(|&code| {
                let lit = lits[code.unsigned_abs() as usize - 1];
                if code < 0 {
                    !lit
                } else {
                    lit
                }
            })
            .collect();
        solver.add_clause(&mapped);
    }
    let result = solver.solve(&[]);
    let mut out = String::new();
    match result.status {
        SolveStatus::Satisfiable => {
            out.push_str("s SATISFIABLE\nv");
            let model = result.model.expect("satisfiable results carry a model");
            for (index, &lit) in lits.iter().enumerate() {
                let code = index as i64 + 1;
                let signed = if model.value(lit) { code } else { -code };
                out.push_str(&format!(" {signed}"));
            }
            out.push_str(" 0\n");
        }
        SolveStatus::Unsatisfiable => out.push_str("s UNSATISFIABLE\n"),
    }
    Ok(out)
}
