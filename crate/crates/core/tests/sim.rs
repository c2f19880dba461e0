mod common;

use common::channel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sideinfo::codec::{metric, qualifiers};
use sideinfo::sim::{check_accounting, run_trials_with};
use sideinfo::{
    build_codebook, run_trials, simulate_trial, CodeParams, CodebookPolicy, ConditionalDistribution, Decision,
    DecoderConfig, Execution, MessagePolicy, Mode, TrialConfig,
};

fn xor_design() -> ConditionalDistribution {
    ConditionalDistribution::from_rows(vec![vec![0.5, 0.0, 0.0, 0.5], vec![0.0, 0.5, 0.5, 0.0]]).unwrap()
}

fn binary_config(n: usize, rate: f64, decoder: DecoderConfig, trials: u64) -> TrialConfig {
    let ch = channel(
        vec![0.5, 0.5],
        vec![vec![0.9, 0.1], vec![0.1, 0.9], vec![0.8, 0.2], vec![0.15, 0.85]],
        2,
    );
    TrialConfig {
        channel: ch,
        code: CodeParams {
            n,
            rate,
            epsilon: 0.25,
            design: xor_design(),
            s_size: 2,
            u_size: 2,
            x_size: 2,
            y_size: 2,
            seed: 5,
        },
        decoder,
        trials,
        batch_size: 1000,
        message_policy: MessagePolicy::Fixed,
        codebook_policy: CodebookPolicy::FreshPerBatch,
        seed: 17,
    }
}

#[test]
fn noiseless_channel_has_no_undetected_errors() {
    let ch = channel(vec![1.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]], 2);
    let identity = ConditionalDistribution::from_rows(vec![vec![0.5, 0.0, 0.0, 0.5]]).unwrap();
    let code = CodeParams {
        n: 6,
        rate: 1.0 / 6.0,
        epsilon: 0.25,
        design: identity,
        s_size: 1,
        u_size: 2,
        x_size: 2,
        y_size: 2,
        seed: 1,
    };
    let cb = build_codebook(&code).unwrap();
    assert_eq!(cb.messages(), 2);
    let dec = DecoderConfig::new(Mode::Erasure, 0.0, 1.0).unwrap();
    let sampler = ch.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut e2 = 0;
    for _ in 0..10_000 {
        let rec = simulate_trial(&cb, &sampler, &dec, 0, &mut rng).unwrap();
        // Exhaustive re-decode from the stored codewords.
        let sub = &cb.subcodes()[0];
        let scores: Vec<f64> = (0..2)
            .map(|m| {
                (0..sub.rows)
                    .map(|l| metric(sub.codeword(m, l), &rec.y, 2, 2, sub.i_star).unwrap())
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        for (a, b) in scores.iter().zip(&rec.decode.scores) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(qualifiers(&scores, &dec).len() <= 1);
        if matches!(rec.decode.decision, Decision::Decoded(m) if m != 0) {
            e2 += 1;
        }
    }
    assert_eq!(e2, 0);
}

#[test]
fn single_trial_is_reproducible() {
    let cfg = binary_config(8, 0.25, DecoderConfig::new(Mode::Erasure, 0.1, 1.0).unwrap(), 1);
    assert_eq!(run_trials(&cfg).unwrap(), run_trials(&cfg).unwrap());
}

#[test]
fn execution_mode_does_not_change_counts() {
    let mut cfg = binary_config(8, 0.25, DecoderConfig::new(Mode::List, 0.0, 0.5).unwrap(), 3500);
    cfg.message_policy = MessagePolicy::Uniform;
    let a = run_trials_with(&cfg, Execution::Sequential).unwrap();
    let b = run_trials_with(&cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.n_trials, 3500);
}

#[test]
fn very_low_threshold_lists_every_message() {
    let t = -(2f64).log2() - 1.0;
    let cfg = binary_config(8, 0.25, DecoderConfig::new(Mode::List, t, 0.01).unwrap(), 500);
    let st = run_trials(&cfg).unwrap();
    assert_eq!(st.sum_incorrect_list, 500 * 3);
    assert_eq!(st.mean_incorrect_list(), 3.0);
    assert_eq!(st.count_e1, st.count_encoding_error);
}

#[test]
fn accounting_invariants_hold() {
    for (dec, policy) in [
        (
            DecoderConfig::new(Mode::Erasure, 0.0, 1.0).unwrap(),
            CodebookPolicy::FreshPerBatch,
        ),
        (
            DecoderConfig::new(Mode::Erasure, 0.3, 2.0).unwrap(),
            CodebookPolicy::Fixed,
        ),
        (
            DecoderConfig::new(Mode::List, -0.2, 0.5).unwrap(),
            CodebookPolicy::FreshPerBatch,
        ),
        (
            DecoderConfig::new(Mode::List, 0.2, 0.75).unwrap(),
            CodebookPolicy::Fixed,
        ),
    ] {
        let mut cfg = binary_config(8, 0.25, dec, 2000);
        cfg.codebook_policy = policy;
        let st = run_trials(&cfg).unwrap();
        check_accounting(&st, dec.mode(), 4).unwrap();
        assert!(st.mean_incorrect_list() <= 3.0);
    }
}

#[test]
fn time_permutation_leaves_decisions_unchanged() {
    let cfg = binary_config(8, 0.25, DecoderConfig::new(Mode::List, 0.0, 0.5).unwrap(), 1);
    let cb = build_codebook(&cfg.code).unwrap();
    let sampler = cfg.channel.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let rec = simulate_trial(&cb, &sampler, &cfg.decoder, 1, &mut rng).unwrap();
        let mut perm: Vec<usize> = (0..8).collect();
        for i in (1..8).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let moved = cb.permuted(&perm).unwrap();
        let mut y = vec![0u8; 8];
        for (i, &p) in perm.iter().enumerate() {
            y[p] = rec.y[i];
        }
        let again = moved.decode(&y, &cfg.decoder).unwrap();
        assert_eq!(again.decision, rec.decode.decision);
        for (a, b) in again.scores.iter().zip(&rec.decode.scores) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn raising_threshold_shrinks_the_qualifier_set() {
    let cfg = binary_config(8, 0.5, DecoderConfig::new(Mode::List, 0.0, 0.5).unwrap(), 1);
    let cb = build_codebook(&cfg.code).unwrap();
    let sampler = cfg.channel.sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..300 {
        let rec = simulate_trial(&cb, &sampler, &cfg.decoder, 0, &mut rng).unwrap();
        let lo_t: f64 = rng.random_range(-1.0..0.5);
        let hi_t = lo_t + rng.random_range(0.0..0.5);
        let lo = qualifiers(&rec.decode.scores, &DecoderConfig::new(Mode::List, lo_t, 0.5).unwrap());
        let hi = qualifiers(&rec.decode.scores, &DecoderConfig::new(Mode::List, hi_t, 0.5).unwrap());
        assert!(hi.iter().all(|m| lo.contains(m)));
    }
}

fn multinomial(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    let lf = |k: u32| (1..=k).map(|i| f64::from(i).ln()).sum::<f64>();
    (lf(n) - counts.iter().map(|&c| lf(c)).sum::<f64>()).exp()
}

/// Ensemble-average encoding failure probability, from the sub-code
/// parameters: a uniform draw from the marginal type class has the target
/// joint type with `s` with probability
/// `prod_s multinomial(N(., s)) / multinomial(T*_U)`, and rows are drawn
/// independently.
fn exact_encoding_failure(cfg: &TrialConfig) -> f64 {
    let cb = build_codebook(&cfg.code).unwrap();
    let p_s = cfg.channel.p_s().probs();
    cb.subcodes()
        .iter()
        .map(|sub| {
            let p_type = multinomial(&sub.state_type)
                * sub
                    .state_type
                    .iter()
                    .zip(p_s)
                    .map(|(&c, &p)| p.powi(c as i32))
                    .product::<f64>();
            let hit =
                sub.us_counts.chunks(cfg.code.u_size).map(multinomial).product::<f64>() / multinomial(&sub.u_counts);
            p_type * (1.0 - hit).powi(sub.rows as i32)
        })
        .sum()
}

#[test]
fn encoding_failure_rate_matches_exact_value() {
    let cfg = binary_config(8, 0.25, DecoderConfig::new(Mode::Erasure, 0.1, 1.0).unwrap(), 100_000);
    let st = run_trials(&cfg).unwrap();
    let p = exact_encoding_failure(&cfg);
    let est = st.count_encoding_error as f64 / st.n_trials as f64;
    let sigma = (p * (1.0 - p) / st.n_trials as f64).sqrt();
    assert!((est - p).abs() < 5.0 * sigma, "estimate {est}, exact {p}");
}

#[test]
#[ignore = "fails at n = 8, epsilon = 0.25: the rate is about 3e-2 in expectation over the ensemble"]
fn encoding_failure_rate_below_one_in_a_thousand() {
    let cfg = binary_config(8, 0.25, DecoderConfig::new(Mode::Erasure, 0.1, 1.0).unwrap(), 100_000);
    let st = run_trials(&cfg).unwrap();
    let est = st.count_encoding_error as f64 / st.n_trials as f64;
    assert!(est < 1e-3, "measured {est}");
}
