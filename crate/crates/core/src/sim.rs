//! Monte Carlo estimation of decoding error probabilities for the binning
//! code, and comparison of the resulting empirical exponents with
//! computed bounds.
//!
//! Trials run in batches. Batch `b` draws from its own ChaCha8 stream of
//! the run seed, and under [`CodebookPolicy::FreshPerBatch`] also uses its
//! own codebook, so results do not depend on how batches are scheduled.

use std::ops::Add;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channel, ChannelSampler};
use crate::codec::{build_codebook, CodeParams, Codebook, Decision, DecodeOutput, DecoderConfig};
use crate::error::{Error, Result};
use crate::exponents::Mode;
use crate::par::{map_reduce, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessagePolicy {
    /// Always send message 0.
    #[default]
    Fixed,
    /// Draw the message uniformly per trial.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookPolicy {
    /// A new random codebook for every batch: estimates the ensemble
    /// average.
    #[default]
    FreshPerBatch,
    /// One codebook for the whole run.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub channel: Channel,
    pub code: CodeParams,
    pub decoder: DecoderConfig,
    pub trials: u64,
    /// Trials per batch, and per codebook under the fresh policy.
    pub batch_size: u64,
    pub message_policy: MessagePolicy,
    pub codebook_policy: CodebookPolicy,
    pub seed: u64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter("batch size must be >= 1".into()));
        }
        let c = &self.code;
        if (c.s_size, c.x_size, c.y_size) != (self.channel.s_size(), self.channel.x_size(), self.channel.y_size()) {
            return Err(Error::ShapeMismatch("code alphabets do not match the channel".into()));
        }
        c.validate()
    }
}

/// Event counts of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimStats {
    pub n_trials: u64,
    /// Sent message not decoded (erasure mode) or not on the list.
    pub count_e1: u64,
    /// Erasure mode: a wrong message was declared.
    pub count_e2: u64,
    /// List mode: total number of wrong messages on the lists.
    pub sum_incorrect_list: u64,
    /// Erasures, or empty lists.
    pub count_erased: u64,
    pub count_encoding_error: u64,
}

impl Add for SimStats {
    type Output = SimStats;

    fn add(self, o: SimStats) -> SimStats {
        SimStats {
            n_trials: self.n_trials + o.n_trials,
            count_e1: self.count_e1 + o.count_e1,
            count_e2: self.count_e2 + o.count_e2,
            sum_incorrect_list: self.sum_incorrect_list + o.sum_incorrect_list,
            count_erased: self.count_erased + o.count_erased,
            count_encoding_error: self.count_encoding_error + o.count_encoding_error,
        }
    }
}

impl SimStats {
    /// Estimated average number of wrong messages on the list.
    pub fn mean_incorrect_list(&self) -> f64 {
        self.sum_incorrect_list as f64 / self.n_trials as f64
    }

    /// Counts of a single trial. An encoding failure always counts as a
    /// decoding failure of the sent message.
    pub fn of_trial(record: &TrialRecord) -> SimStats {
        let mut st = SimStats {
            n_trials: 1,
            ..SimStats::default()
        };
        let m = record.message;
        st.count_encoding_error = u64::from(record.encoding_error);
        let missed = match &record.decode.decision {
            Decision::Decoded(d) => {
                if *d != m {
                    st.count_e2 = 1;
                }
                *d != m
            }
            Decision::Erased => {
                st.count_erased = 1;
                true
            }
            Decision::Listed(list) => {
                st.count_erased = u64::from(list.is_empty());
                st.sum_incorrect_list = list.iter().filter(|&&k| k != m).count() as u64;
                !list.contains(&m)
            }
        };
        st.count_e1 = u64::from(missed || record.encoding_error);
        st
    }
}

/// Everything observed in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub message: usize,
    pub s: Vec<u8>,
    pub u: Vec<u8>,
    pub x: Vec<u8>,
    pub y: Vec<u8>,
    pub encoding_error: bool,
    pub decode: DecodeOutput,
}

/// Runs one trial: draws a state sequence, encodes `message`, transmits
/// and decodes.
pub fn simulate_trial<R: Rng + ?Sized>(
    codebook: &Codebook,
    sampler: &ChannelSampler,
    decoder: &DecoderConfig,
    message: usize,
    rng: &mut R,
) -> Result<TrialRecord> {
    let s = sampler.states(codebook.params().n, rng);
    let enc = codebook.encode(message, &s, rng)?;
    let y = sampler.transmit(&enc.x, &s, rng);
    let decode = codebook.decode(&y, decoder)?;
    Ok(TrialRecord {
        message,
        s,
        u: enc.u,
        x: enc.x,
        y,
        encoding_error: enc.encoding_error,
        decode,
    })
}

/// Seed of the codebook used by `batch` under the fresh policy.
pub fn batch_codebook_seed(code_seed: u64, batch: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(code_seed);
    rng.set_stream(batch);
    rng.next_u64()
}

pub fn run_trials(cfg: &TrialConfig) -> Result<SimStats> {
    run_trials_with(cfg, Execution::default())
}

pub fn run_trials_with(cfg: &TrialConfig, exec: Execution) -> Result<SimStats> {
    cfg.validate()?;
    let sampler = cfg.channel.sampler();
    let batches = cfg.trials.div_ceil(cfg.batch_size);
    let shared = match cfg.codebook_policy {
        CodebookPolicy::Fixed => Some(build_codebook(&cfg.code)?),
        CodebookPolicy::FreshPerBatch => None,
    };
    if shared.is_none() {
        // Surface construction errors before fanning out.
        cfg.code.validate()?;
        cfg.code.messages()?;
    }
    map_reduce(
        exec,
        batches,
        || Ok(SimStats::default()),
        |b| {
            let fresh;
            let codebook = match &shared {
                Some(cb) => cb,
                None => {
                    fresh = build_codebook(&CodeParams {
                        seed: batch_codebook_seed(cfg.code.seed, b),
                        ..cfg.code.clone()
                    })?;
                    &fresh
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b);
            let len = cfg.batch_size.min(cfg.trials - b * cfg.batch_size);
            let mut acc = SimStats::default();
            for _ in 0..len {
                let m = match cfg.message_policy {
                    MessagePolicy::Fixed => 0,
                    MessagePolicy::Uniform => rng.random_range(0..codebook.messages()),
                };
                let record = simulate_trial(codebook, &sampler, &cfg.decoder, m, &mut rng)?;
                acc = acc + SimStats::of_trial(&record);
            }
            Ok(acc)
        },
        |a, b| Ok(a? + b?),
    )
}

/// `-(1/n) log2` of an estimated probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalExponent {
    /// `None` when no event was observed.
    pub point: Option<f64>,
    /// Equals `point` when events were observed; otherwise the exponent
    /// of the rule-of-three bound `min(1, 3/trials)`.
    pub lower_conf: f64,
    pub censored: bool,
}

impl EmpiricalExponent {
    /// The value compared against a bound.
    pub fn effective(&self) -> f64 {
        self.point.unwrap_or(self.lower_conf)
    }
}

pub fn empirical_exponent(count: u64, trials: u64, n: usize) -> Result<EmpiricalExponent> {
    if trials == 0 || n == 0 {
        return Err(Error::InvalidParameter("trials and n must be >= 1".into()));
    }
    let n = n as f64;
    Ok(if count > 0 {
        let point = -(count as f64 / trials as f64).log2() / n;
        EmpiricalExponent {
            point: Some(point),
            lower_conf: point,
            censored: false,
        }
    } else {
        let bound = (3.0 / trials as f64).min(1.0);
        EmpiricalExponent {
            point: None,
            lower_conf: -bound.log2() / n,
            censored: true,
        }
    })
}

/// `|U||S||X||Y| log2(n + 1) / n`.
pub fn default_slack(sizes: [usize; 4], n: usize) -> f64 {
    let prod: usize = sizes.iter().product();
    prod as f64 * ((n + 1) as f64).log2() / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Sent message missed.
    E1,
    /// Undetected error.
    E2,
    /// Average number of wrong messages on the list.
    IncorrectList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub quantity: Quantity,
    pub empirical: EmpiricalExponent,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Checks `empirical >= bound - slack` for one quantity.
pub fn compare_to_bound(stats: &SimStats, quantity: Quantity, bound: f64, n: usize, slack: f64) -> Result<Comparison> {
    let count = match quantity {
        Quantity::E1 => stats.count_e1,
        Quantity::E2 => stats.count_e2,
        Quantity::IncorrectList => stats.sum_incorrect_list,
    };
    let empirical = empirical_exponent(count, stats.n_trials, n)?;
    let pass = empirical.effective() >= bound - slack;
    Ok(Comparison {
        quantity,
        empirical,
        bound,
        slack,
        pass,
    })
}

/// Checks the counting invariants of a run.
pub fn check_accounting(stats: &SimStats, mode: Mode, messages: usize) -> Result<()> {
    let t = stats.n_trials;
    let bounded = [
        stats.count_e1,
        stats.count_e2,
        stats.count_erased,
        stats.count_encoding_error,
    ]
    .iter()
    .all(|&c| c <= t);
    let ok = bounded
        && match mode {
            Mode::Erasure => stats.count_e2 <= stats.count_e1 && stats.sum_incorrect_list == 0,
            Mode::List => stats.count_e2 == 0 && stats.sum_incorrect_list <= t * (messages as u64 - 1),
        };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "inconsistent counts for {mode:?} mode: {stats:?}"
        )))
    }
}
