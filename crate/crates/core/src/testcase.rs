//! Test cases: per-step input stimuli over the alphabet `0`, `1`, `?`.
//!
//! A test case fixes the primary-input values for a bounded run of the
//! circuit.  A `?` marks an *open* bit that the analysis is free to
//! choose; symbolic analyses leave open bits unconstrained, enumerating
//! ones expand them into all concrete combinations.
//!
//! File format: one line per step, one character per input in declaration
//! order.  Whitespace inside a line is ignored, blank lines are skipped,
//! and `#` starts a line comment.

use std::fmt;

use thiserror::Error;

/// One stimulus bit: fixed to a value or left open.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriBit {
    Zero,
    One,
    Open,
}

impl TriBit {
    /// The concrete value, if fixed.
    pub fn value(self) -> Option<bool> {
        match self {
            TriBit::Zero => Some(false),
            TriBit::One => Some(true),
            TriBit::Open => None,
        }
    }
}

impl fmt::Display for TriBit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriBit::Zero => "0",
            TriBit::One => "1",
            TriBit::Open => "?",
        })
    }
}

/// A bounded input stimulus: `steps[t][i]` is the bit driven into input
/// `i` at step `t` (0-based here; steps are 1-based in reports).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    width: usize,
    steps: Vec<Vec<TriBit>>,
}

/// Why a test case failed to parse.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TestCaseError {
    #[error("line {line}: invalid character {found:?}, expected '0', '1' or '?'")]
    InvalidCharacter { line: usize, found: char },
    #[error("line {line}: expected {expected} bits, found {found}")]
    WidthMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
}

impl TestCase {
    /// Builds a test case from already-validated rows.
    ///
    /// # Panics
    /// Panics if any row's width differs from `width`.
    pub fn new(width: usize, steps: Vec<Vec<TriBit>>) -> TestCase {
        assert!(
            steps.iter().all(|row| row.len() == width),
            "all test-case rows must have the declared width"
        );
        TestCase { width, steps }
    }

    /// An all-open stimulus of the given shape: every bit is `?`.
    pub fn all_open(width: usize, length: usize) -> TestCase {
        TestCase {
            width,
            steps: vec![vec![TriBit::Open; width]; length],
        }
    }

    /// Number of bits per step.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// Whether the stimulus has zero steps.
    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The bits of step `step` (0-based).
    pub fn step(&self, step: usize) -> &[TriBit] {
        &self.steps[step]
    }

    /// All steps in order.
    pub fn steps(&self) -> &[Vec<TriBit>] {
        &self.steps
    }

    /// Positions of open bits in row-major `(step, input)` order.
    pub fn open_positions(&self) -> Vec<(usize, usize)> {
        let mut positions = Vec::new();
        for (step, row) in self.steps.iter().enumerate() {
            for (input, bit) in row.iter().enumerate() {
                if *bit == TriBit::Open {
                    positions.push((step, input));
                }
            }
        }
        positions
    }

    /// How many concrete stimuli the open bits expand to: `2^open`,
    /// saturating at `u128::MAX` for more than 127 open bits.
    pub fn count_open_assignments(&self) -> u128 {
        let open = self.open_positions().len();
        if open >= 128 {
            u128::MAX
        } else {
            1u128 << open
        }
    }

    /// The concrete stimulus obtained by filling open bit `p` (row-major)
    /// with bit `p` of `index`.
    ///
    /// # Panics
    /// Panics if `index` does not fit in the number of open bits.
    pub fn materialize(&self, index: u128) -> Vec<Vec<bool>> {
        let positions = self.open_positions();
        assert!(
            positions.len() >= 128 || index < (1u128 << positions.len()),
            "assignment index out of range"
        );
        let mut rows: Vec<Vec<bool>> = self
            .steps
            .iter()
            .map(|row| row.iter().map(|bit| bit.value().unwrap_or(false)).collect())
            .collect();
        for (bit_index, (step, input)) in positions.into_iter().enumerate() {
            rows[step][input] = (index >> bit_index) & 1 == 1;
        }
        rows
    }

    /// Iterates every concrete expansion in binary-counting order.
    pub fn expansions(&self) -> impl Iterator<Item = Vec<Vec<bool>>> + '_ {
        let total = self.count_open_assignments();
        (0..total).map(|index| self.materialize(index))
    }

    /// Renders back to the file format.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        for row in &self.steps {
            for bit in row {
                let _ = write!(out, "{bit}");
            }
            out.push('\n');
        }
        out
    }
}

/// Parses the test-case file format, validating every line against the
/// circuit's input count.
pub fn parse_testcase(text: &str, width: usize) -> Result<TestCase, TestCaseError> {
    let mut steps = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = match line.split_once('#') {
            Some((before, _)) => before,
            None => line,
        };
        let mut row = Vec::with_capacity(width);
        for ch in line.chars() {
            match ch {
                '0' => row.push(TriBit::Zero),
                '1' => row.push(TriBit::One),
                '?' => row.push(TriBit::Open),
                ch if ch.is_whitespace() => {}
                ch => {
                    return Err(TestCaseError::InvalidCharacter {
                        line: index + 1,
                        found: ch,
                    });
                }
            }
        }
        if row.is_empty() {
            continue; // blank or comment-only line
        }
        if row.len() != width {
            return Err(TestCaseError::WidthMismatch {
                line: index + 1,
                expected: width,
                found: row.len(),
            });
        }
        steps.push(row);
    }
    Ok(TestCase { width, steps })
}
