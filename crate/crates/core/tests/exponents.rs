mod common;

use common::{binary_instance, brute_force, channel, dmc_evaluator, random_channel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sideinfo::exponents::{objective_at, Objective};
use sideinfo::{Evaluator, Execution, Mode, Penalty};

fn erasure(rate: f64, threshold: f64, alpha: f64) -> Penalty {
    Penalty {
        mode: Mode::Erasure,
        rate,
        threshold,
        alpha,
    }
}

fn list(rate: f64, threshold: f64, alpha: f64) -> Penalty {
    Penalty {
        mode: Mode::List,
        rate,
        threshold,
        alpha,
    }
}

fn assert_close(a: f64, b: f64, what: &str) {
    assert!((a == b) || (a - b).abs() < 1e-12, "{what}: search {a} vs oracle {b}");
}

#[test]
fn matches_oracle_on_binary_instance() {
    let ch = binary_instance();
    let pens = [
        erasure(0.1, 0.0, 1.0),
        erasure(0.3, 0.2, 2.0),
        list(0.2, -0.1, 0.5),
        list(0.05, 0.3, 0.25),
    ];
    let oracle = brute_force(&ch, 2, 3, &pens);
    let ev = Evaluator::new(&ch, 2, 3).unwrap();
    for (pen, (o1, o2)) in pens.iter().zip(oracle) {
        let got = ev.evaluate(pen).unwrap();
        assert_close(got.e1.value, o1, "E1");
        assert_close(got.e2.value, o2, "E2");
    }
}

#[test]
fn matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (ns, nx, ny) in [(2, 2, 2), (1, 2, 3), (2, 1, 2), (3, 1, 2)] {
        let ch = random_channel(&mut rng, ns, nx, ny);
        let pens = [erasure(0.15, 0.05, 1.5), list(0.1, -0.2, 0.7)];
        let oracle = brute_force(&ch, 2, 2, &pens);
        let ev = Evaluator::new(&ch, 2, 2).unwrap();
        for (pen, (o1, o2)) in pens.iter().zip(oracle) {
            let got = ev.evaluate(pen).unwrap();
            assert_close(got.e1.value, o1, "E1");
            assert_close(got.e2.value, o2, "E2");
        }
    }
}

#[test]
fn channel_with_zero_transitions_matches_oracle() {
    let ch = channel(
        vec![0.5, 0.5],
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5], vec![0.2, 0.8]],
        2,
    );
    let pens = [erasure(0.2, 0.1, 1.0), list(0.3, 0.0, 0.5)];
    let oracle = brute_force(&ch, 2, 3, &pens);
    let ev = Evaluator::new(&ch, 2, 3).unwrap();
    for (pen, (o1, o2)) in pens.iter().zip(oracle) {
        let got = ev.evaluate(pen).unwrap();
        assert_close(got.e1.value, o1, "E1");
        assert_close(got.e2.value, o2, "E2");
    }
}

#[test]
fn single_state_matches_channel_without_state() {
    let w = vec![vec![0.8, 0.2], vec![0.3, 0.7]];
    let ch = channel(vec![1.0], w.clone(), 2);
    for pen in [erasure(0.2, 0.1, 1.0), list(0.1, -0.2, 0.5)] {
        let got = Evaluator::new(&ch, 3, 3).unwrap().evaluate(&pen).unwrap();
        let (o1, o2) = dmc_evaluator(&w, 3, 3, &pen);
        assert_close(got.e1.value, o1, "E1");
        assert_close(got.e2.value, o2, "E2");
    }
}

#[test]
fn results_are_reproducible_bit_for_bit() {
    let ch = binary_instance();
    let pen = list(0.2, 0.0, 0.5);
    let a = Evaluator::new(&ch, 2, 4).unwrap().evaluate(&pen).unwrap();
    let b = Evaluator::new(&ch, 2, 4)
        .unwrap()
        .with_execution(Execution::Sequential)
        .evaluate(&pen)
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.e1.value.to_bits(), b.e1.value.to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn erasure_monotone_in_threshold(seed in 0u64..1000, t in 0.0f64..0.6, dt in 0.0f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, 2, 2, 2);
        let ev = Evaluator::new(&ch, 2, 2).unwrap();
        let lo = ev.evaluate(&erasure(0.2, t, 1.3)).unwrap();
        let hi = ev.evaluate(&erasure(0.2, t + dt, 1.3)).unwrap();
        prop_assert!(hi.e1.value <= lo.e1.value);
        prop_assert!(hi.e2.value >= lo.e2.value);
    }

    #[test]
    fn e2_monotone_in_rate(seed in 0u64..1000, r in 0.0f64..0.8, dr in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, 2, 2, 2);
        let ev = Evaluator::new(&ch, 2, 2).unwrap();
        for (lo, hi) in [
            (erasure(r, 0.1, 1.0), erasure(r + dr, 0.1, 1.0)),
            (list(r, 0.1, 0.5), list(r + dr, 0.1, 0.5)),
        ] {
            prop_assert!(ev.evaluate(&hi).unwrap().e2.value <= ev.evaluate(&lo).unwrap().e2.value);
        }
    }

    #[test]
    fn unit_alpha_zero_threshold_collapses(seed in 0u64..1000, r in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, 2, 2, 2);
        let got = Evaluator::new(&ch, 2, 3).unwrap().evaluate(&erasure(r, 0.0, 1.0)).unwrap();
        prop_assert!((got.e1.value - got.e2.value).abs() < 1e-12);
    }

    #[test]
    fn witness_reproduces_value(seed in 0u64..1000, list_mode in any::<bool>(), r in 0.0f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(&mut rng, 2, 2, 2);
        let pen = if list_mode { list(r, -0.1, 0.6) } else { erasure(r, 0.1, 1.2) };
        let got = Evaluator::new(&ch, 2, 3).unwrap().evaluate(&pen).unwrap();
        let e1 = objective_at(&ch, &got.e1.witness, &pen, Objective::E1(got.e1.branch.unwrap())).unwrap();
        let e2 = objective_at(&ch, &got.e2.witness, &pen, Objective::E2).unwrap();
        prop_assert!((e1 - got.e1.value).abs() < 1e-12);
        prop_assert!((e2 - got.e2.value).abs() < 1e-12);
    }
}
