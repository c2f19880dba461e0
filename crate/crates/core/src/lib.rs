//! Erasure and list decoding error exponents for channels whose encoder
//! knows the channel state non-causally, together with a random-binning
//! code that attains them and a Monte Carlo simulator.
//!
//! All information quantities are in bits.

pub mod channel;
pub mod cli;
pub mod codec;
pub mod error;
pub mod exponents;
pub mod par;
pub mod sim;
pub mod types;

pub use channel::{Channel, ChannelSampler};
pub use codec::{
    build_codebook, check_unambiguous, quantize_design, CodeParams, Codebook, Decision, DecodeOutput, DecoderConfig,
    Encoded,
};
pub use error::{Error, Result};
pub use exponents::{
    e1_erasure, e1_list, e2_erasure, e2_list, evaluate, ordinary_decoding_exponent, sweep, Branch, Evaluator,
    ExponentPair, ExponentQuery, ExponentResult, Mode, Penalty, SweepAxis,
};
pub use par::Execution;
pub use sim::{
    compare_to_bound, empirical_exponent, run_trials, simulate_trial, CodebookPolicy, MessagePolicy, SimStats,
    TrialConfig,
};
pub use types::{Alphabet, ConditionalDistribution, Distribution, JointSystem, SequenceType};
