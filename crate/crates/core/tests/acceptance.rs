//! End-to-end acceptance gate.  Each test checks one release criterion
//! over a freshly generated corpus and prints a single `PASS` line, so a
//! full run (`cargo test --test acceptance -- --nocapture`) reads as a
//! checklist.  Every expected value comes from an independent source:
//! the exhaustive oracles, the cycle-accurate simulator, or a structural
//! argument about a generated circuit family (parity and TMR designs).

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use softerr_core::aiger::Circuit;
use softerr_core::analysis::protected::{find_protected, ProtectionQuery};
use softerr_core::analysis::spurious::find_spurious;
use softerr_core::analysis::vulnerable::find_vulnerable;
use softerr_core::analysis::{all_latches, Variant};
use softerr_core::cnf::{encode_frame, model_values, CnfContext, FrameCopy};
use softerr_core::corpus::{
    gen_parity_protected, gen_random_aig, gen_random_testcase, gen_tmr,
};
use softerr_core::oracle::{
    brute_force_protected, brute_force_spurious, brute_force_vulnerable,
    validate_protection_counterexample, validate_spurious_witness, validate_vulnerable_witness,
};
use softerr_core::sim::{free_reset_count, initial_state, simulate};
use softerr_core::testcase::{TestCase, TriBit};

const BUDGET: u128 = 1 << 20;

/// The shared random-circuit family: 1–3 inputs, 1–6 latches, 0–40 AND
/// gates, drawn deterministically from the seed.
fn corpus_circuit(seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = rng.gen_range(1..=3);
    let latches = rng.gen_range(1..=6);
    let ands = rng.gen_range(0..=40);
    gen_random_aig(rng.gen(), inputs, latches, ands)
}

/// A random test for the corpus circuit with the same seed: length 1–6,
/// with `open_bits` positions left open (clamped to what fits).
fn corpus_test(seed: u64, width: usize, open_bits: usize) -> TestCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7E57_CA5E);
    let length = rng.gen_range(1..=6);
    gen_random_testcase(rng.gen(), width, length, open_bits.min(width * length))
}

fn median_millis(mut samples: Vec<Duration>) -> f64 {
    samples.sort();
    samples[samples.len() / 2].as_secs_f64() * 1e3
}

#[test]
fn a1_symbolic_vulnerable_set_matches_the_oracle() {
    for seed in 0..500u64 {
        let circuit = corpus_circuit(seed);
        let test = corpus_test(seed, circuit.inputs.len(), 0);
        let injectable = all_latches(circuit.latches.len());
        let report = find_vulnerable(
            &circuit,
            std::slice::from_ref(&test),
            None,
            &injectable,
            Variant::Stla,
            BUDGET,
        )
        .expect("analysis runs on every generated circuit");
        let oracle = brute_force_vulnerable(&circuit, &test, None, &injectable);
        assert_eq!(report.vulnerable, oracle.found, "seed {seed}");
        assert_eq!(
            report.unconstrained_alarm_violation, oracle.unconstrained_alarm_violation,
            "seed {seed}"
        );
    }
    println!("A1 vulnerable set == exhaustive oracle on 500 random circuits: PASS");
}

#[test]
fn a2_all_variants_agree_on_tests_with_open_bits() {
    for seed in 0..500u64 {
        let circuit = corpus_circuit(seed);
        let test = corpus_test(seed, circuit.inputs.len(), (seed % 4) as usize);
        let injectable = all_latches(circuit.latches.len());
        let tests = std::slice::from_ref(&test);
        let run = |variant| {
            find_vulnerable(&circuit, tests, None, &injectable, variant, BUDGET)
                .expect("analysis runs on every generated circuit")
        };
        let stla = run(Variant::Stla);
        let sta = run(Variant::Sta);
        let sim = run(Variant::Sim);
        assert_eq!(stla.vulnerable, sta.vulnerable, "seed {seed} (stla vs sta)");
        assert_eq!(stla.vulnerable, sim.vulnerable, "seed {seed} (stla vs sim)");
        assert_eq!(
            stla.unconstrained_alarm_violation, sim.unconstrained_alarm_violation,
            "seed {seed}"
        );
    }
    println!("A2 stla == sta == sim on 500 circuits with up to 3 open bits: PASS");
}

#[test]
fn a3_fully_open_test_equals_the_union_over_concrete_tests() {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA3_0000 + seed);
        let inputs = rng.gen_range(1..=2);
        let latches = rng.gen_range(1..=4);
        let ands = rng.gen_range(0..=25);
        let circuit = gen_random_aig(rng.gen(), inputs, latches, ands);
        let length = rng.gen_range(1..=6 / inputs + 2); // 1..=8 or 1..=5
        assert!(length * inputs <= 10);
        let injectable = all_latches(circuit.latches.len());

        let open = TestCase::all_open(inputs, length);
        let symbolic = find_vulnerable(
            &circuit,
            std::slice::from_ref(&open),
            None,
            &injectable,
            Variant::Stla,
            BUDGET,
        )
        .expect("open analysis runs");

        let mut union = BTreeSet::new();
        for rows in open.expansions() {
            let steps = rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|&bit| if bit { TriBit::One } else { TriBit::Zero })
                        .collect()
                })
                .collect();
            let concrete = TestCase::new(inputs, steps);
            let report = find_vulnerable(
                &circuit,
                std::slice::from_ref(&concrete),
                None,
                &injectable,
                Variant::Stla,
                BUDGET,
            )
            .expect("concrete analysis runs");
            union.extend(report.vulnerable);
        }
        assert_eq!(symbolic.vulnerable, union, "seed {seed}");
    }
    println!("A3 all-open analysis == union of every concrete test on 100 circuits: PASS");
}

#[test]
fn a4_spurious_alarm_set_matches_the_oracle() {
    for seed in 0..500u64 {
        let circuit = corpus_circuit(seed);
        let test = corpus_test(seed, circuit.inputs.len(), 0);
        let injectable = all_latches(circuit.latches.len());
        let report = find_spurious(
            &circuit,
            std::slice::from_ref(&test),
            None,
            &injectable,
            Variant::Stla,
        )
        .expect("analysis runs on every generated circuit");
        let oracle = brute_force_spurious(&circuit, &test, None, &injectable);
        assert_eq!(report.spurious, oracle.found, "seed {seed}");
        assert_eq!(
            report.unconstrained_alarm_violation, oracle.unconstrained_alarm_violation,
            "seed {seed}"
        );
    }
    println!("A4 spurious-alarm set == exhaustive oracle on 500 random circuits: PASS");
}

#[test]
fn a5_protection_is_sound_and_monotone_in_the_window() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA5_0000 + seed);
        let inputs = rng.gen_range(1..=3);
        let latches = rng.gen_range(1..=5);
        let ands = rng.gen_range(0..=30);
        let circuit = gen_random_aig(rng.gen(), inputs, latches, ands);
        let injectable = all_latches(circuit.latches.len());
        let j = (seed % 2) as usize;

        let mut previous: Option<BTreeSet<usize>> = None;
        for k in 1..=3 {
            let query = ProtectionQuery {
                j,
                k,
                injectable: injectable.clone(),
                deadline: None,
            };
            let reported = find_protected(&circuit, &query)
                .expect("analysis runs on every generated circuit")
                .protected_latches;
            let oracle = brute_force_protected(&circuit, j, k, &injectable);
            assert!(
                reported.is_subset(&oracle),
                "seed {seed} j {j} k {k}: unsound report {reported:?} vs oracle {oracle:?}"
            );
            if let Some(previous) = &previous {
                assert!(
                    previous.is_subset(&reported),
                    "seed {seed} j {j} k {k}: protection not monotone in the window"
                );
            }
            previous = Some(reported);
        }
    }
    println!("A5 protection sound vs oracle and monotone over k=1..3 on 200 circuits: PASS");
}

#[test]
fn a6_open_bits_scale_simulation_but_not_the_symbolic_variant() {
    let circuit = gen_parity_protected(32, false);
    let width = circuit.inputs.len();
    let injectable = all_latches(circuit.latches.len());
    let sweep = [0usize, 2, 4, 6, 8];
    let mut times = Vec::new();
    for &bits in &sweep {
        let test = gen_random_testcase(0xA6 + bits as u64, width, 15, bits);
        let tests = std::slice::from_ref(&test);
        let timed = |variant| {
            let samples = (0..3)
                .map(|_| {
                    let started = Instant::now();
                    let report =
                        find_vulnerable(&circuit, tests, None, &injectable, variant, BUDGET)
                            .expect("the sweep stays within budget");
                    assert!(
                        report.vulnerable.is_empty(),
                        "the ungated parity design must stay invulnerable ({bits} open bits)"
                    );
                    started.elapsed()
                })
                .collect();
            median_millis(samples)
        };
        let sim = timed(Variant::Sim);
        let stla = timed(Variant::Stla);
        println!("A6 open bits {bits:>2}: sim {sim:>10.2} ms   stla {stla:>8.2} ms");
        times.push((sim, stla));
    }
    let sim_first = times.first().expect("sweep is non-empty").0;
    let sim_last = times.last().expect("sweep is non-empty").0;
    let stla_max = times.iter().map(|&(_, t)| t).fold(f64::MIN, f64::max);
    let stla_min = times.iter().map(|&(_, t)| t).fold(f64::MAX, f64::min);
    assert!(
        sim_last >= 10.0 * sim_first,
        "sim at 8 open bits ({sim_last:.2} ms) not 10x sim at 0 ({sim_first:.2} ms)"
    );
    assert!(
        stla_max <= 3.0 * stla_min,
        "stla spread too wide: {stla_min:.2} ms .. {stla_max:.2} ms"
    );
    println!(
        "A6 sim grows {:.0}x over the sweep, stla spread {:.1}x (limit 3x): PASS",
        sim_last / sim_first,
        stla_max / stla_min
    );
}

#[test]
fn a7_every_emitted_witness_replays_in_the_simulator() {
    let mut vulnerable = 0usize;
    let mut spurious = 0usize;
    let mut counterexamples = 0usize;
    for seed in 0..500u64 {
        let circuit = corpus_circuit(seed);
        let test = corpus_test(seed, circuit.inputs.len(), (seed % 3) as usize);
        let injectable = all_latches(circuit.latches.len());
        let tests = std::slice::from_ref(&test);

        let report = find_vulnerable(&circuit, tests, None, &injectable, Variant::Stla, BUDGET)
            .expect("analysis runs");
        for (latch, witness) in &report.witnesses {
            validate_vulnerable_witness(&circuit, None, witness)
                .unwrap_or_else(|err| panic!("seed {seed} latch {latch}: {err}"));
            vulnerable += 1;
        }

        let report = find_spurious(&circuit, tests, None, &injectable, Variant::Stla)
            .expect("analysis runs");
        for (latch, witness) in &report.witnesses {
            validate_spurious_witness(&circuit, None, witness)
                .unwrap_or_else(|err| panic!("seed {seed} latch {latch}: {err}"));
            spurious += 1;
        }

        let query = ProtectionQuery {
            j: (seed % 2) as usize,
            k: 1 + (seed % 3) as usize,
            injectable,
            deadline: None,
        };
        let report = find_protected(&circuit, &query).expect("analysis runs");
        for (latch, witness) in &report.counterexamples {
            validate_protection_counterexample(&circuit, query.j, query.k, witness)
                .unwrap_or_else(|err| panic!("seed {seed} latch {latch}: {err}"));
            counterexamples += 1;
        }
    }
    assert!(
        vulnerable >= 50 && spurious >= 20 && counterexamples >= 100,
        "corpus too tame to exercise replay: {vulnerable}/{spurious}/{counterexamples}"
    );
    println!(
        "A7 replayed {vulnerable} vulnerability, {spurious} spurious-alarm and \
         {counterexamples} protection witnesses, all valid: PASS"
    );
}

#[test]
fn a8_solver_models_match_the_simulator_bit_for_bit() {
    for trial in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xA8_0000 + trial);
        let inputs = rng.gen_range(1..=3);
        let latches = rng.gen_range(1..=5);
        let ands = rng.gen_range(0..=30);
        let circuit = gen_random_aig(rng.gen(), inputs, latches, ands);
        let steps = rng.gen_range(1..=5);
        let rows: Vec<Vec<bool>> = (0..steps)
            .map(|_| (0..inputs).map(|_| rng.gen()).collect())
            .collect();
        let choices: Vec<bool> = (0..free_reset_count(&circuit)).map(|_| rng.gen()).collect();
        let init = initial_state(&circuit, &choices);
        let flip = (rng.gen_range(0..latches), rng.gen_range(1..=steps));

        let trace = simulate(&circuit, &init, &rows, Some(flip));

        let mut ctx = CnfContext::embedded();
        let mut state: Vec<_> = init.iter().map(|&bit| ctx.constant(bit)).collect();
        let mut frames = Vec::with_capacity(steps);
        for step in 1..=steps {
            if flip.1 == step {
                state[flip.0] = !state[flip.0];
            }
            let input_lits = rows[step - 1].iter().map(|&bit| ctx.constant(bit)).collect();
            let frame = encode_frame(
                &mut ctx,
                &circuit,
                step,
                FrameCopy::FaultFree,
                input_lits,
                state,
            );
            state = frame.next_latches.clone();
            frames.push(frame);
        }
        let model = ctx
            .solve(&[])
            .model
            .expect("a fully constant-driven unrolling is satisfiable");
        for (frame, step) in frames.iter().zip(1..) {
            assert_eq!(
                model_values(&model, &frame.latches),
                trace.states[step - 1],
                "trial {trial} step {step}: state"
            );
            assert_eq!(
                model_values(&model, &frame.outputs),
                trace.outputs[step - 1],
                "trial {trial} step {step}: outputs"
            );
            assert_eq!(
                model_values(&model, &frame.data_outputs),
                trace.data_outputs[step - 1],
                "trial {trial} step {step}: data outputs"
            );
            let alarm = frame.alarm.expect("generated circuits designate an alarm");
            assert_eq!(
                model.value(alarm),
                trace.alarms[step - 1],
                "trial {trial} step {step}: alarm"
            );
        }
        assert_eq!(
            model_values(&model, &state),
            trace.states[steps],
            "trial {trial}: final state"
        );
    }
    println!("A8 solver valuations == simulator on 1000 random fault injections: PASS");
}

#[test]
fn a9_tmr_banks_are_protected_exactly_beyond_the_alarm_delay() {
    for delay in 0..=2usize {
        let circuit = gen_tmr(2, delay);
        let banks: BTreeSet<usize> = (0..circuit.latches.len())
            .filter(|&index| circuit.latch_name(index).starts_with("bank_"))
            .collect();
        assert_eq!(banks.len(), 6);
        for k in 1..=delay + 1 {
            let query = ProtectionQuery {
                j: 1,
                k,
                injectable: banks.clone(),
                deadline: None,
            };
            let started = Instant::now();
            let report = find_protected(&circuit, &query).expect("analysis runs");
            let elapsed = started.elapsed().as_secs_f64() * 1e3;
            println!(
                "A9 delay {delay} window {k}: {}/{} banks protected in {elapsed:.2} ms",
                report.protected_latches.len(),
                banks.len()
            );
            if k == delay + 1 {
                assert_eq!(
                    report.protected_latches, banks,
                    "delay {delay}: banks must be protected at k = delay + 1"
                );
            } else {
                assert!(
                    report.protected_latches.is_empty(),
                    "delay {delay} window {k}: no bank is protected before the alarm lands"
                );
            }
        }

        // Cross-check the same shape against the exhaustive oracle on the
        // width-1 variant, which is small enough to enumerate.
        let small = gen_tmr(1, delay);
        let small_banks: BTreeSet<usize> = (0..small.latches.len())
            .filter(|&index| small.latch_name(index).starts_with("bank_"))
            .collect();
        for k in 1..=delay + 1 {
            let query = ProtectionQuery {
                j: 1,
                k,
                injectable: small_banks.clone(),
                deadline: None,
            };
            let report = find_protected(&small, &query).expect("analysis runs");
            let oracle = brute_force_protected(&small, 1, k, &small_banks);
            assert_eq!(
                report.protected_latches, oracle,
                "width-1 oracle disagrees at delay {delay} window {k}"
            );
        }
    }
    println!("A9 TMR banks protected exactly at k = delay + 1 for delays 0..=2: PASS");
}
