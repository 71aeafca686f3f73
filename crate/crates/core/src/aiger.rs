//! Reading, writing and validating sequential circuits in the ASCII AIGER
//! (`aag`) format.
//!
//! A circuit is an and-inverter graph: primary inputs, latches (one-bit
//! registers), two-input AND gates, and outputs, where any edge may be
//! inverted.  Literals follow the AIGER convention: literal `2*v` is
//! variable `v`, literal `2*v + 1` is its negation, and the two constants
//! are literal `0` (false) and `1` (true).
//!
//! One output per circuit is designated as the *alarm* — the signal a
//! self-checking circuit raises to announce an internal fault.  The
//! remaining outputs are the *data outputs*.  Resolution order for the
//! alarm: an explicit caller override, then an output whose symbol name is
//! `alarm` (case-insensitive), then the last output in file order.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// An AIGER literal: a variable index with an optional negation bit.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal(pub u32);

impl Literal {
    /// The constant-false literal (`0`).
    pub const FALSE: Literal = Literal(0);
    /// The constant-true literal (`1`).
    pub const TRUE: Literal = Literal(1);

    /// Builds a literal from a variable index and a negation flag.
    pub fn from_var(var: u32, negated: bool) -> Literal {
        Literal(var * 2 + u32::from(negated))
    }

    /// The variable this literal refers to (variable `0` is the constant).
    pub fn var(self) -> u32 {
        self.0 / 2
    }

    /// Whether the literal is negated.
    pub fn is_negated(self) -> bool {
        self.0 & 1 == 1
    }

    /// The same variable with the opposite sign.
    pub fn negated(self) -> Literal {
        Literal(self.0 ^ 1)
    }

    /// Whether this is one of the two constant literals.
    pub fn is_constant(self) -> bool {
        self.var() == 0
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Literal({})", self.0)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The value a latch assumes before the first step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reset {
    /// Starts at 0 (the AIGER default).
    Zero,
    /// Starts at 1.
    One,
    /// Uninitialized: the latch may start at either value.
    Free,
}

/// A one-bit register: its current-state literal, next-state function and
/// reset value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Latch {
    /// Positive even literal naming the latch output.
    pub current: Literal,
    /// Literal giving the value loaded at the end of each step.
    pub next: Literal,
    /// Initial value.
    pub reset: Reset,
}

/// A two-input AND gate; the output literal `lhs` is always positive even.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AndGate {
    pub lhs: Literal,
    pub rhs0: Literal,
    pub rhs1: Literal,
}

/// Names attached to inputs, latches and outputs by position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    pub inputs: BTreeMap<usize, String>,
    pub latches: BTreeMap<usize, String>,
    pub outputs: BTreeMap<usize, String>,
}

impl Symbols {
    fn is_empty(&self) -> bool {
        self.inputs.is_empty() && self.latches.is_empty() && self.outputs.is_empty()
    }
}

/// What a variable index is defined as, used for lookup during evaluation
/// and encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarDef {
    /// The constant variable `0`.
    Constant,
    /// Primary input with the given position.
    Input(usize),
    /// Latch with the given position.
    Latch(usize),
    /// AND gate with the given position.
    And(usize),
    /// Declared by the header bound but never defined.
    Undefined,
}

/// A parsed and validated sequential AIG.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    /// Header bound on variable indices (may exceed the number of
    /// variables actually defined).
    pub max_var: u32,
    /// Primary inputs, each a positive even literal.
    pub inputs: Vec<Literal>,
    /// Latches in declaration order.
    pub latches: Vec<Latch>,
    /// Outputs in declaration order; any literal may appear.
    pub outputs: Vec<Literal>,
    /// AND gates in topological (declaration) order.
    pub ands: Vec<AndGate>,
    /// Optional names by position.
    pub symbols: Symbols,
    /// Index into `outputs` of the designated alarm, if any output exists.
    pub alarm: Option<usize>,
}

/// Caller override for which output is the alarm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlarmSpec {
    /// Match an output symbol name exactly.
    Name(String),
    /// Output position in declaration order.
    Index(usize),
}

/// Why a circuit failed to parse or validate, tagged with the 1-based line.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unexpected end of file: {0}")]
    UnexpectedEof(String),
    #[error("malformed {section} line: {detail}")]
    MalformedLine {
        section: &'static str,
        detail: String,
    },
    #[error("literal {0} out of range for maximum variable index {1}")]
    LiteralOutOfRange(u32, u32),
    #[error("{section} literal {literal} must be a positive even literal")]
    InvalidDefinitionLiteral {
        section: &'static str,
        literal: u32,
    },
    #[error("variable {0} defined more than once")]
    DoubleDefinition(u32),
    #[error("literal {0} references variable {1} which is never defined")]
    UndefinedVariable(u32, u32),
    #[error("AND gate literal {0} references variable {1} before its definition (combinational cycle or forward reference)")]
    ForwardAndReference(u32, u32),
    #[error("invalid reset value {0}: must be 0, 1 or the latch literal itself")]
    InvalidReset(String),
    #[error("invalid symbol entry: {0}")]
    InvalidSymbol(String),
    #[error("duplicate symbol for {0}")]
    DuplicateSymbol(String),
}

/// Why alarm designation failed.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlarmError {
    #[error("no output named {0:?}")]
    UnknownName(String),
    #[error("alarm output index {index} out of range: circuit has {outputs} outputs")]
    IndexOutOfRange { index: usize, outputs: usize },
    #[error("circuit has no outputs, so no alarm can be designated")]
    NoOutputs,
}

/// Parses the ASCII AIGER text into a validated [`Circuit`].
///
/// Validation enforces the format invariants: literals stay within the
/// header bound, inputs / latches / AND gates define each variable exactly
/// once, AND gates only reference constants, inputs, latches or
/// earlier-defined gates, and latch next-state functions and outputs only
/// reference defined variables.  The alarm output defaults to an output
/// named `alarm` (case-insensitive) when present, otherwise to the last
/// output.
pub fn parse_aiger(text: &str) -> Result<Circuit, ParseError> {
    let mut lines = text.lines().enumerate();
    let err = |line: usize, kind: ParseErrorKind| ParseError { line: line + 1, kind };

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| err(0, ParseErrorKind::MalformedHeader("empty input".into())))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&"aag") {
        return Err(err(
            header_line,
            ParseErrorKind::MalformedHeader("expected an \"aag\" header".into()),
        ));
    }
    if fields.len() != 6 {
        return Err(err(
            header_line,
            ParseErrorKind::MalformedHeader(format!(
                "expected \"aag M I L O A\", found {} fields",
                fields.len()
            )),
        ));
    }
    let mut counts = [0u32; 5];
    for (slot, field) in counts.iter_mut().zip(&fields[1..]) {
        *slot = field.parse().map_err(|_| {
            err(
                header_line,
                ParseErrorKind::MalformedHeader(format!("invalid count {field:?}")),
            )
        })?;
    }
    let [max_var, num_inputs, num_latches, num_outputs, num_ands] = counts;
    let declared = num_inputs as u64 + num_latches as u64 + num_ands as u64;
    if declared > max_var as u64 {
        return Err(err(
            header_line,
            ParseErrorKind::MalformedHeader(format!(
                "maximum variable index {max_var} cannot hold {declared} definitions"
            )),
        ));
    }

    let max_literal = max_var * 2 + 1;
    let check_range = |line: usize, lit: u32| -> Result<Literal, ParseError> {
        if lit > max_literal {
            Err(err(line, ParseErrorKind::LiteralOutOfRange(lit, max_var)))
        } else {
            Ok(Literal(lit))
        }
    };

    // Definition table: which variable is defined by what, used both for
    // the double-definition check and for deferred reference validation.
    let mut defs: Vec<VarDef> = vec![VarDef::Undefined; max_var as usize + 1];
    defs[0] = VarDef::Constant;
    fn define(
        defs: &mut [VarDef],
        line: usize,
        lit: Literal,
        def: VarDef,
        section: &'static str,
    ) -> Result<(), ParseError> {
        let fail = |kind| ParseError {
            line: line + 1,
            kind,
        };
        if lit.is_negated() || lit.is_constant() {
            return Err(fail(ParseErrorKind::InvalidDefinitionLiteral {
                section,
                literal: lit.0,
            }));
        }
        let var = lit.var() as usize;
        if defs[var] != VarDef::Undefined {
            return Err(fail(ParseErrorKind::DoubleDefinition(lit.var())));
        }
        defs[var] = def;
        Ok(())
    }

    let mut take_line = |section: &'static str| -> Result<(usize, &str), ParseError> {
        lines.next().ok_or_else(|| {
            err(
                usize::MAX - 1, // reported 1-based below
                ParseErrorKind::UnexpectedEof(format!("missing {section} line")),
            )
        })
    };

    let mut inputs = Vec::with_capacity(num_inputs as usize);
    for position in 0..num_inputs as usize {
        let (line, text) = take_line("input").map_err(|mut e| {
            e.line = position + 2;
            e
        })?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        let [field] = fields[..] else {
            return Err(err(
                line,
                ParseErrorKind::MalformedLine {
                    section: "input",
                    detail: format!("expected one literal, found {text:?}"),
                },
            ));
        };
        let raw: u32 = field.parse().map_err(|_| {
            err(
                line,
                ParseErrorKind::MalformedLine {
                    section: "input",
                    detail: format!("invalid literal {field:?}"),
                },
            )
        })?;
        let lit = check_range(line, raw)?;
        define(&mut defs, line, lit, VarDef::Input(position), "input")?;
        inputs.push(lit);
    }

    // Latch next-state references may legally point at AND gates defined
    // further down the file, so they are validated after all sections.
    let mut latches = Vec::with_capacity(num_latches as usize);
    let mut deferred: Vec<(usize, Literal)> = Vec::new();
    for position in 0..num_latches as usize {
        let (line, text) = take_line("latch").map_err(|mut e| {
            e.line = num_inputs as usize + position + 2;
            e
        })?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(err(
                line,
                ParseErrorKind::MalformedLine {
                    section: "latch",
                    detail: format!("expected \"current next [reset]\", found {text:?}"),
                },
            ));
        }
        let mut nums = [0u32; 2];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                err(
                    line,
                    ParseErrorKind::MalformedLine {
                        section: "latch",
                        detail: format!("invalid literal {field:?}"),
                    },
                )
            })?;
        }
        let current = check_range(line, nums[0])?;
        let next = check_range(line, nums[1])?;
        define(&mut defs, line, current, VarDef::Latch(position), "latch")?;
        let reset = match fields.get(2) {
            None => Reset::Zero,
            Some(&"0") => Reset::Zero,
            Some(&"1") => Reset::One,
            Some(field) if field.parse() == Ok(current.0) => Reset::Free,
            Some(field) => {
                return Err(err(line, ParseErrorKind::InvalidReset((*field).into())));
            }
        };
        deferred.push((line, next));
        latches.push(Latch {
            current,
            next,
            reset,
        });
    }

    let mut outputs = Vec::with_capacity(num_outputs as usize);
    for position in 0..num_outputs as usize {
        let (line, text) = take_line("output").map_err(|mut e| {
            e.line = (num_inputs + num_latches) as usize + position + 2;
            e
        })?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        let [field] = fields[..] else {
            return Err(err(
                line,
                ParseErrorKind::MalformedLine {
                    section: "output",
                    detail: format!("expected one literal, found {text:?}"),
                },
            ));
        };
        let raw: u32 = field.parse().map_err(|_| {
            err(
                line,
                ParseErrorKind::MalformedLine {
                    section: "output",
                    detail: format!("invalid literal {field:?}"),
                },
            )
        })?;
        let lit = check_range(line, raw)?;
        deferred.push((line, lit));
        outputs.push(lit);
    }

    let mut ands = Vec::with_capacity(num_ands as usize);
    for position in 0..num_ands as usize {
        let (line, text) = take_line("and").map_err(|mut e| {
            e.line = (num_inputs + num_latches + num_outputs) as usize + position + 2;
            e
        })?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(
                line,
                ParseErrorKind::MalformedLine {
                    section: "and",
                    detail: format!("expected \"lhs rhs0 rhs1\", found {text:?}"),
                },
            ));
        }
        let mut nums = [0u32; 3];
        for (slot, field) in nums.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                err(
                    line,
                    ParseErrorKind::MalformedLine {
                        section: "and",
                        detail: format!("invalid literal {field:?}"),
                    },
                )
            })?;
        }
        let lhs = check_range(line, nums[0])?;
        let rhs0 = check_range(line, nums[1])?;
        let rhs1 = check_range(line, nums[2])?;
        define(&mut defs, line, lhs, VarDef::And(position), "and")?;
        // Both operands must already be defined: this single check rules
        // out combinational cycles and forward references at once.
        for rhs in [rhs0, rhs1] {
            match defs[rhs.var() as usize] {
                VarDef::Undefined => {
                    return Err(err(
                        line,
                        ParseErrorKind::ForwardAndReference(rhs.0, rhs.var()),
                    ));
                }
                VarDef::And(defined) if defined >= position => {
                    return Err(err(
                        line,
                        ParseErrorKind::ForwardAndReference(rhs.0, rhs.var()),
                    ));
                }
                _ => {}
            }
        }
        ands.push(AndGate { lhs, rhs0, rhs1 });
    }

    for (line, lit) in deferred {
        if defs[lit.var() as usize] == VarDef::Undefined {
            return Err(err(
                line,
                ParseErrorKind::UndefinedVariable(lit.0, lit.var()),
            ));
        }
    }

    // Symbol table and trailing comment section.
    let mut symbols = Symbols::default();
    for (line, text) in lines {
        let text = text.trim_end();
        if text == "c" || text.starts_with("c ") {
            break; // the rest of the file is a free-form comment
        }
        if text.is_empty() {
            continue;
        }
        let invalid = |detail: &str| err(line, ParseErrorKind::InvalidSymbol(detail.into()));
        let (kind, rest) = text.split_at(1);
        let (pos_text, name) = rest
            .split_once(char::is_whitespace)
            .ok_or_else(|| invalid(text))?;
        let position: usize = pos_text.parse().map_err(|_| invalid(text))?;
        let (table, bound) = match kind {
            "i" => (&mut symbols.inputs, num_inputs as usize),
            "l" => (&mut symbols.latches, num_latches as usize),
            "o" => (&mut symbols.outputs, num_outputs as usize),
            _ => return Err(invalid(text)),
        };
        if position >= bound {
            return Err(invalid(&format!("position {position} out of range")));
        }
        if table.insert(position, name.to_string()).is_some() {
            return Err(err(
                line,
                ParseErrorKind::DuplicateSymbol(format!("{kind}{position}")),
            ));
        }
    }

    let alarm = default_alarm(num_outputs as usize, &symbols);
    Ok(Circuit {
        max_var,
        inputs,
        latches,
        outputs,
        ands,
        symbols,
        alarm,
    })
}

/// Default alarm resolution: an output named `alarm` (case-insensitive),
/// else the last output, else none.
fn default_alarm(num_outputs: usize, symbols: &Symbols) -> Option<usize> {
    symbols
        .outputs
        .iter()
        .find(|(_, name)| name.eq_ignore_ascii_case("alarm"))
        .map(|(&position, _)| position)
        .or_else(|| num_outputs.checked_sub(1))
}

impl Circuit {
    /// Serializes back to ASCII AIGER text.  Structure (including symbol
    /// names) is preserved; a re-parse yields an equal circuit.  The alarm
    /// designation itself has no AIGER syntax, so a non-default choice
    /// survives a round trip only if the chosen output carries the symbol
    /// name `alarm`.
    pub fn to_aiger(&self) -> String {
        use std::fmt::Write;

        let mut out = String::new();
        let _ = writeln!(
            out,
            "aag {} {} {} {} {}",
            self.max_var,
            self.inputs.len(),
            self.latches.len(),
            self.outputs.len(),
            self.ands.len()
        );
        for input in &self.inputs {
            let _ = writeln!(out, "{input}");
        }
        for latch in &self.latches {
            match latch.reset {
                Reset::Zero => {
                    let _ = writeln!(out, "{} {}", latch.current, latch.next);
                }
                Reset::One => {
                    let _ = writeln!(out, "{} {} 1", latch.current, latch.next);
                }
                Reset::Free => {
                    let _ = writeln!(out, "{} {} {}", latch.current, latch.next, latch.current);
                }
            }
        }
        for output in &self.outputs {
            let _ = writeln!(out, "{output}");
        }
        for and in &self.ands {
            let _ = writeln!(out, "{} {} {}", and.lhs, and.rhs0, and.rhs1);
        }
        if !self.symbols.is_empty() {
            for (position, name) in &self.symbols.inputs {
                let _ = writeln!(out, "i{position} {name}");
            }
            for (position, name) in &self.symbols.latches {
                let _ = writeln!(out, "l{position} {name}");
            }
            for (position, name) in &self.symbols.outputs {
                let _ = writeln!(out, "o{position} {name}");
            }
        }
        out
    }

    /// Re-resolves the alarm output, honoring an explicit override before
    /// the `alarm` symbol name and the last-output default.
    pub fn designate_alarm(&mut self, spec: Option<&AlarmSpec>) -> Result<(), AlarmError> {
        let index = match spec {
            Some(AlarmSpec::Index(index)) => {
                if *index >= self.outputs.len() {
                    return Err(AlarmError::IndexOutOfRange {
                        index: *index,
                        outputs: self.outputs.len(),
                    });
                }
                *index
            }
            Some(AlarmSpec::Name(name)) => self
                .symbols
                .outputs
                .iter()
                .find(|(_, candidate)| candidate.as_str() == name)
                .map(|(&position, _)| position)
                .ok_or_else(|| AlarmError::UnknownName(name.clone()))?,
            None => default_alarm(self.outputs.len(), &self.symbols)
                .ok_or(AlarmError::NoOutputs)?,
        };
        self.alarm = Some(index);
        Ok(())
    }

    /// The literal driving the designated alarm output.
    pub fn alarm_literal(&self) -> Option<Literal> {
        self.alarm.map(|index| self.outputs[index])
    }

    /// Output positions that are not the alarm, in declaration order.
    pub fn data_output_indices(&self) -> Vec<usize> {
        (0..self.outputs.len())
            .filter(|index| Some(*index) != self.alarm)
            .collect()
    }

    /// Lookup table from variable index to definition.
    pub fn var_defs(&self) -> Vec<VarDef> {
        let mut defs = vec![VarDef::Undefined; self.max_var as usize + 1];
        defs[0] = VarDef::Constant;
        for (position, input) in self.inputs.iter().enumerate() {
            defs[input.var() as usize] = VarDef::Input(position);
        }
        for (position, latch) in self.latches.iter().enumerate() {
            defs[latch.current.var() as usize] = VarDef::Latch(position);
        }
        for (position, and) in self.ands.iter().enumerate() {
            defs[and.lhs.var() as usize] = VarDef::And(position);
        }
        defs
    }

    /// The name of latch `position`: its symbol if present, else
    /// `latch<position>`.
    pub fn latch_name(&self, position: usize) -> String {
        self.symbols
            .latches
            .get(&position)
            .cloned()
            .unwrap_or_else(|| format!("latch{position}"))
    }

    /// The name of output `position`: its symbol if present, else
    /// `output<position>`.
    pub fn output_name(&self, position: usize) -> String {
        self.symbols
            .outputs
            .get(&position)
            .cloned()
            .unwrap_or_else(|| format!("output{position}"))
    }

    /// The name of input `position`: its symbol if present, else
    /// `input<position>`.
    pub fn input_name(&self, position: usize) -> String {
        self.symbols
            .inputs
            .get(&position)
            .cloned()
            .unwrap_or_else(|| format!("input{position}"))
    }

    /// Resolves a latch by symbol name or decimal position.
    pub fn find_latch(&self, key: &str) -> Option<usize> {
        if let Some((&position, _)) = self
            .symbols
            .latches
            .iter()
            .find(|(_, name)| name.as_str() == key)
        {
            return Some(position);
        }
        match key.parse::<usize>() {
            Ok(position) if position < self.latches.len() => Some(position),
            _ => None,
        }
    }
}
