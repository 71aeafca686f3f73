//! Shared two-copy unrolling for the escape and spurious-alarm analyses.
//!
//! Both analyses unroll a fault-free and a faulty copy of the circuit in
//! lockstep over a test case, with one location variable per injectable
//! latch (exactly one true) and one fault-time variable per transition
//! taken (at most one true).  The fault-time variable allocated for the
//! transition into step `s` flips the faulty copy's state at the start of
//! step `s`; a transition into a step that is never unrolled cannot
//! manifest, so the variables are allocated lazily with each transition.
//!
//! Each unrolled step also pins the constraints every finding shares: the
//! environment accepts the step's inputs and the fault-free copy keeps
//! its alarm low.  When those alone are unsatisfiable the test itself
//! rings the alarm (or leaves the admissible input space) at that step,
//! and the analyses report the step instead of classifying further.

use std::collections::BTreeSet;

use crate::aiger::Circuit;
use crate::analysis::{bits_to_string, WitnessTrace};
use crate::cnf::{
    encode_exactly_one, encode_faulty_transition, encode_frame, initial_state_lits, model_values,
    testcase_step_lits, CnfContext, EnvUnroller, FaultVars, Frame, FrameCopy,
};
use crate::sat::{Lit, Model};
use crate::testcase::TestCase;

pub(crate) struct TwoCopyUnrolling<'a> {
    circuit: &'a Circuit,
    env: Option<&'a Circuit>,
    test: &'a TestCase,
    pub ctx: CnfContext,
    pub fault: FaultVars,
    /// `fault_times[idx]` selects the flip that lands at the start of
    /// step `idx + 2` (the transition out of step `idx + 1`).
    pub fault_times: Vec<Lit>,
    /// Shared initial state of both copies.
    pub init: Vec<Lit>,
    pub ff: Vec<Frame>,
    pub faulty: Vec<Frame>,
    env_unroller: Option<EnvUnroller>,
}

impl<'a> TwoCopyUnrolling<'a> {
    /// Sets up the solver with the one-hot location variables; no steps
    /// are unrolled yet.
    pub fn new(
        circuit: &'a Circuit,
        test: &'a TestCase,
        env: Option<&'a Circuit>,
        injectable: &BTreeSet<usize>,
    ) -> TwoCopyUnrolling<'a> {
        let mut ctx = CnfContext::embedded();
        let fault = FaultVars::new(&mut ctx, injectable);
        encode_exactly_one(&mut ctx, &fault.location_lits());
        let env_unroller = env.map(|env| EnvUnroller::new(&mut ctx, env, circuit.inputs.len()));
        TwoCopyUnrolling {
            circuit,
            env,
            test,
            ctx,
            fault,
            fault_times: Vec::new(),
            init: Vec::new(),
            ff: Vec::new(),
            faulty: Vec::new(),
            env_unroller,
        }
    }

    /// Number of steps unrolled so far.
    pub fn steps(&self) -> usize {
        self.ff.len()
    }

    /// Unrolls one more step of both copies over the test's input bits,
    /// then constrains the environment valid and the fault-free alarm low
    /// at that step.  Returns the new 1-based step number.
    pub fn advance(&mut self) -> usize {
        let step = self.ff.len() + 1;
        let inputs = testcase_step_lits(&mut self.ctx, self.test, step - 1);
        let (next_ff, next_faulty) = if step == 1 {
            self.init = initial_state_lits(&mut self.ctx, self.circuit);
            let ff = encode_frame(
                &mut self.ctx,
                self.circuit,
                1,
                FrameCopy::FaultFree,
                inputs.clone(),
                self.init.clone(),
            );
            let faulty = encode_frame(
                &mut self.ctx,
                self.circuit,
                1,
                FrameCopy::Faulty,
                inputs,
                self.init.clone(),
            );
            (ff, faulty)
        } else {
            let fault_now = self.ctx.fresh();
            for &earlier in &self.fault_times {
                self.ctx.add_clause(&[!fault_now, !earlier]);
            }
            self.fault_times.push(fault_now);
            let ff = encode_frame(
                &mut self.ctx,
                self.circuit,
                step,
                FrameCopy::FaultFree,
                inputs.clone(),
                self.ff[step - 2].next_latches.clone(),
            );
            let faulty = encode_faulty_transition(
                &mut self.ctx,
                self.circuit,
                &self.faulty[step - 2],
                &inputs,
                fault_now,
                &self.fault,
            );
            (ff, faulty)
        };
        if let Some(unroller) = &mut self.env_unroller {
            unroller.constrain_step(&mut self.ctx, self.env.unwrap(), &next_ff.inputs);
        }
        let ff_alarm = next_ff.alarm.expect("alarm designated before analysis");
        self.ctx.add_clause(&[!ff_alarm]);
        self.ff.push(next_ff);
        self.faulty.push(next_faulty);
        step
    }

    /// True when the constraints accumulated so far admit no fault-free
    /// run at all; the current step and everything after it are vacuous.
    pub fn vacuous(&mut self) -> bool {
        !self.ctx.solve(&[]).is_sat()
    }

    /// Reads a witness out of a model, covering steps 1 through
    /// `through_step`.
    pub fn witness(&self, model: &Model, fault_latch: usize, through_step: usize) -> WitnessTrace {
        let fault_step = self
            .fault_times
            .iter()
            .position(|&f| model.value(f))
            .map(|index| index + 2)
            .expect("a model demonstrating a finding selects a fault step");
        let collect_rows = |frames: &[Frame], pick: &dyn Fn(&Frame) -> Vec<Lit>| -> Vec<String> {
            frames[..through_step]
                .iter()
                .map(|frame| bits_to_string(&model_values(model, &pick(frame))))
                .collect()
        };
        let alarm_bits = |frames: &[Frame]| -> String {
            frames[..through_step]
                .iter()
                .map(|frame| {
                    let alarm = frame.alarm.expect("alarm designated before analysis");
                    if model.value(alarm) {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect()
        };
        WitnessTrace {
            fault_latch,
            fault_step,
            initial_state: bits_to_string(&model_values(model, &self.init)),
            inputs: collect_rows(&self.ff, &|frame| frame.inputs.clone()),
            outputs_ff: collect_rows(&self.ff, &|frame| frame.data_outputs.clone()),
            outputs_faulty: collect_rows(&self.faulty, &|frame| frame.data_outputs.clone()),
            alarm_ff: alarm_bits(&self.ff),
            alarm_faulty: alarm_bits(&self.faulty),
        }
    }
}
