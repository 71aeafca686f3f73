//! Deterministic circuit generators and the named toy circuits used
//! throughout the test suite.
//!
//! The generators cover three shapes: unconstrained random AIGs (fuel for
//! differential tests against the exhaustive oracle), parity-protected
//! register files with an optional alarm gate (the scaling benchmark
//! workload), and triple-modular-redundant accumulators with a
//! configurable alarm delay (the protection-window sweep workload).
//! Everything is a pure function of its parameters, so fixed seeds give
//! byte-identical circuits across runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aiger::{parse_aiger, AndGate, Circuit, Latch, Literal, Reset, Symbols};
use crate::testcase::{TestCase, TriBit};

/// Incremental construction of a well-formed [`Circuit`].
///
/// Variables are allocated on demand; AND gates fold constants and
/// duplicate operands instead of emitting a gate.  Latches are created
/// first and wired later (`set_next`), which is what feedback needs.
#[derive(Default)]
pub struct CircuitBuilder {
    next_var: u32,
    inputs: Vec<Literal>,
    latches: Vec<Latch>,
    next_wired: Vec<bool>,
    ands: Vec<AndGate>,
    outputs: Vec<Literal>,
    symbols: Symbols,
}

impl CircuitBuilder {
    pub fn new() -> CircuitBuilder {
        CircuitBuilder {
            next_var: 1,
            ..CircuitBuilder::default()
        }
    }

    fn fresh(&mut self) -> Literal {
        let literal = Literal::from_var(self.next_var, false);
        self.next_var += 1;
        literal
    }

    pub fn input(&mut self, name: &str) -> Literal {
        self.symbols
            .inputs
            .insert(self.inputs.len(), name.to_string());
        self.unnamed_input()
    }

    pub fn unnamed_input(&mut self) -> Literal {
        let literal = self.fresh();
        self.inputs.push(literal);
        literal
    }

    pub fn latch(&mut self, name: &str, reset: Reset) -> Literal {
        self.symbols
            .latches
            .insert(self.latches.len(), name.to_string());
        self.unnamed_latch(reset)
    }

    pub fn unnamed_latch(&mut self, reset: Reset) -> Literal {
        let literal = self.fresh();
        self.latches.push(Latch {
            current: literal,
            next: Literal::FALSE,
            reset,
        });
        self.next_wired.push(false);
        literal
    }

    /// Wires the next-state function of a latch created earlier.
    ///
    /// # Panics
    /// Panics if `latch` is not a literal returned by a latch constructor.
    pub fn set_next(&mut self, latch: Literal, next: Literal) {
        let position = self
            .latches
            .iter()
            .position(|candidate| candidate.current == latch)
            .expect("set_next requires a latch literal");
        self.latches[position].next = next;
        self.next_wired[position] = true;
    }

    /// AND of two literals, folding constants, duplicates and
    /// complementary pairs.
    pub fn and(&mut self, a: Literal, b: Literal) -> Literal {
        if a == Literal::FALSE || b == Literal::FALSE || a == b.negated() {
            return Literal::FALSE;
        }
        if a == Literal::TRUE {
            return b;
        }
        if b == Literal::TRUE || a == b {
            return a;
        }
        let lhs = self.fresh();
        self.ands.push(AndGate { lhs, rhs0: a, rhs1: b });
        lhs
    }

    pub fn or(&mut self, a: Literal, b: Literal) -> Literal {
        self.and(a.negated(), b.negated()).negated()
    }

    pub fn xor(&mut self, a: Literal, b: Literal) -> Literal {
        let a_only = self.and(a, b.negated());
        let b_only = self.and(a.negated(), b);
        self.or(a_only, b_only)
    }

    /// `if sel { when_true } else { when_false }`.
    pub fn mux(&mut self, sel: Literal, when_true: Literal, when_false: Literal) -> Literal {
        let taken = self.and(sel, when_true);
        let skipped = self.and(sel.negated(), when_false);
        self.or(taken, skipped)
    }

    pub fn majority(&mut self, a: Literal, b: Literal, c: Literal) -> Literal {
        let ab = self.and(a, b);
        let ac = self.and(a, c);
        let bc = self.and(b, c);
        let either = self.or(ab, ac);
        self.or(either, bc)
    }

    /// XOR over any number of literals (false for none).
    pub fn parity(&mut self, literals: &[Literal]) -> Literal {
        literals
            .iter()
            .fold(Literal::FALSE, |acc, &lit| self.xor(acc, lit))
    }

    pub fn output(&mut self, name: &str, literal: Literal) {
        self.symbols
            .outputs
            .insert(self.outputs.len(), name.to_string());
        self.unnamed_output(literal);
    }

    pub fn unnamed_output(&mut self, literal: Literal) {
        self.outputs.push(literal);
    }

    /// Finishes the circuit and designates the alarm (an output named
    /// `alarm` if present, else the last output).
    ///
    /// # Panics
    /// Panics if some latch was never wired with `set_next`.
    pub fn build(self) -> Circuit {
        assert!(
            self.next_wired.iter().all(|&wired| wired),
            "every latch needs set_next before build"
        );
        let mut circuit = Circuit {
            max_var: self.next_var - 1,
            inputs: self.inputs,
            latches: self.latches,
            outputs: self.outputs,
            ands: self.ands,
            symbols: self.symbols,
            alarm: None,
        };
        if !circuit.outputs.is_empty() {
            circuit
                .designate_alarm(None)
                .expect("default designation cannot fail with outputs present");
        }
        circuit
    }
}

/// Single input feeding a single latch; the latch drives the data output
/// and the alarm is constant false.  Any flip escapes.
pub fn passthru() -> Circuit {
    parse_aiger(PASSTHRU_TEXT).expect("canonical circuit parses")
}

/// Canonical serialization of [`passthru`].
pub const PASSTHRU_TEXT: &str = "aag 3 1 1 2 0\n2\n4 2\n4\n0\n";

/// Two latches reloading the same input; the data output reads the first
/// latch and the alarm compares the two.  Any divergence rings the alarm
/// in the same step, so nothing escapes.
pub fn dmr() -> Circuit {
    let text = "aag 6 1 2 2 3\n2\n4 2\n6 2\n4\n12\n8 4 6\n10 5 7\n12 9 11\n\
                i0 i\nl0 L1\nl1 L2\no0 o\no1 alarm\n";
    parse_aiger(text).expect("canonical circuit parses")
}

/// As [`dmr`] but the data output is constant false: faults can only ever
/// ring the alarm spuriously.
pub fn unused_dmr() -> Circuit {
    let text = "aag 6 1 2 2 3\n2\n4 2\n6 2\n0\n12\n8 4 6\n10 5 7\n12 9 11\n\
                i0 i\nl0 L1\nl1 L2\no0 o\no1 alarm\n";
    parse_aiger(text).expect("canonical circuit parses")
}

fn pick(rng: &mut ChaCha8Rng, pool: &[Literal]) -> Literal {
    let literal = pool[rng.gen_range(0..pool.len())];
    if rng.gen() {
        literal.negated()
    } else {
        literal
    }
}

/// A random well-formed circuit: requested numbers of inputs, latches and
/// AND gates (constant folding may emit fewer gates), two outputs with
/// the second being the alarm.  Resets are mostly 0, sometimes 1,
/// occasionally unconstrained.
pub fn gen_random_aig(seed: u64, n_inputs: usize, n_latches: usize, n_ands: usize) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut builder = CircuitBuilder::new();
    let mut pool = vec![Literal::TRUE];
    for _ in 0..n_inputs {
        pool.push(builder.unnamed_input());
    }
    let mut latches = Vec::with_capacity(n_latches);
    for _ in 0..n_latches {
        let reset = match rng.gen_range(0..8u32) {
            0..=4 => Reset::Zero,
            5..=6 => Reset::One,
            _ => Reset::Free,
        };
        let latch = builder.unnamed_latch(reset);
        latches.push(latch);
        pool.push(latch);
    }
    for _ in 0..n_ands {
        let a = pick(&mut rng, &pool);
        let b = pick(&mut rng, &pool);
        pool.push(builder.and(a, b));
    }
    for &latch in &latches {
        let next = pick(&mut rng, &pool);
        builder.set_next(latch, next);
    }
    let data = pick(&mut rng, &pool);
    builder.unnamed_output(data);
    let alarm = pick(&mut rng, &pool);
    builder.unnamed_output(alarm);
    builder.build()
}

/// A register file of `width` data latches checked by one parity latch.
///
/// Inputs are the data word `d0..`, a path select `sel` (1 bypasses the
/// registers, 0 reads them) and, with gating, an `en` input that masks
/// the alarm.  The alarm compares the stored parity against the parity of
/// the stored word; over-gating (holding `en` low) disables it and turns
/// the data latches vulnerable.
pub fn gen_parity_protected(width: usize, with_gating: bool) -> Circuit {
    assert!(width >= 1, "need at least one data latch");
    let mut builder = CircuitBuilder::new();
    let data_in: Vec<Literal> = (0..width)
        .map(|i| builder.input(&format!("d{i}")))
        .collect();
    let sel = builder.input("sel");
    let enable = with_gating.then(|| builder.input("en"));
    let data_latches: Vec<Literal> = (0..width)
        .map(|i| builder.latch(&format!("D{i}"), Reset::Zero))
        .collect();
    let parity_latch = builder.latch("P", Reset::Zero);
    for (&latch, &input) in data_latches.iter().zip(&data_in) {
        builder.set_next(latch, input);
    }
    let input_parity = builder.parity(&data_in);
    builder.set_next(parity_latch, input_parity);
    let stored_parity = builder.parity(&data_latches);
    let mismatch = builder.xor(stored_parity, parity_latch);
    let alarm = match enable {
        Some(enable) => builder.and(mismatch, enable),
        None => mismatch,
    };
    for i in 0..width {
        let out = builder.mux(sel, data_in[i], data_latches[i]);
        builder.output(&format!("o{i}"), out);
    }
    builder.output("alarm", alarm);
    builder.build()
}

/// Three accumulator banks over a `width`-bit input with majority-voted
/// outputs; the alarm observes any pairwise bank mismatch through a shift
/// pipeline of `delay` stages (0 = combinational).
///
/// Bank latches accumulate (`bank ^= d`), so a flipped bit persists: the
/// majority keeps the outputs clean while the mismatch detector reports
/// it, `delay` steps late.  Latches are named `bank_a_0…`, `bank_b_…`,
/// `bank_c_…` and `pipe_1…`, letting callers restrict analyses to the
/// banks.
pub fn gen_tmr(width: usize, delay: usize) -> Circuit {
    assert!(width >= 1, "need at least one data bit");
    let mut builder = CircuitBuilder::new();
    let data_in: Vec<Literal> = (0..width)
        .map(|i| builder.input(&format!("d{i}")))
        .collect();
    let mut banks: Vec<Vec<Literal>> = Vec::with_capacity(3);
    for name in ["a", "b", "c"] {
        banks.push(
            (0..width)
                .map(|i| builder.latch(&format!("bank_{name}_{i}"), Reset::Zero))
                .collect(),
        );
    }
    for bank in &banks {
        for (&latch, &input) in bank.iter().zip(&data_in) {
            let accumulated = builder.xor(latch, input);
            builder.set_next(latch, accumulated);
        }
    }
    for i in 0..width {
        let voted = builder.majority(banks[0][i], banks[1][i], banks[2][i]);
        builder.output(&format!("o{i}"), voted);
    }
    let mut mismatch = Literal::FALSE;
    for i in 0..width {
        let ab = builder.xor(banks[0][i], banks[1][i]);
        let ac = builder.xor(banks[0][i], banks[2][i]);
        let bc = builder.xor(banks[1][i], banks[2][i]);
        let any = builder.or(ab, ac);
        let any = builder.or(any, bc);
        mismatch = builder.or(mismatch, any);
    }
    let mut alarm = mismatch;
    for stage in 1..=delay {
        let pipe = builder.latch(&format!("pipe_{stage}"), Reset::Zero);
        builder.set_next(pipe, alarm);
        alarm = pipe;
    }
    builder.output("alarm", alarm);
    builder.build()
}

/// A random test over `width` inputs and `length` steps with exactly
/// `open_bits` positions left open, the rest concrete at random.
pub fn gen_random_testcase(seed: u64, width: usize, length: usize, open_bits: usize) -> TestCase {
    assert!(open_bits <= width * length, "more open bits than positions");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<TriBit>> = (0..length)
        .map(|_| {
            (0..width)
                .map(|_| if rng.gen() { TriBit::One } else { TriBit::Zero })
                .collect()
        })
        .collect();
    if width * length > 0 {
        for position in rand::seq::index::sample(&mut rng, width * length, open_bits) {
            rows[position / width][position % width] = TriBit::Open;
        }
    }
    TestCase::new(width, rows)
}
