//! State-dependent memoryless channel `W(y|x,s)` with an i.i.d. state source.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ConditionalDistribution, Distribution};

/// A finite state-dependent channel: state law `P_S` and transition law
/// `W(y|x,s)` stored with one row per `s * |X| + x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    p_s: Distribution,
    w: ConditionalDistribution,
    x_size: usize,
}

impl Channel {
    pub fn new(p_s: Distribution, w: ConditionalDistribution, x_size: usize) -> Result<Self> {
        if x_size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if w.num_rows() != p_s.len() * x_size {
            return Err(Error::ShapeMismatch(format!(
                "W has {} rows, expected |S||X| = {}",
                w.num_rows(),
                p_s.len() * x_size
            )));
        }
        Ok(Channel { p_s, w, x_size })
    }

    pub fn p_s(&self) -> &Distribution {
        &self.p_s
    }

    pub fn w(&self) -> &ConditionalDistribution {
        &self.w
    }

    pub fn s_size(&self) -> usize {
        self.p_s.len()
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.w.num_cols()
    }

    /// `W(.|x,s)`.
    pub fn row(&self, x: usize, s: usize) -> &Distribution {
        self.w.row(s * self.x_size + x)
    }

    pub fn sampler(&self) -> ChannelSampler {
        let weighted =
            |p: &Distribution| WeightedIndex::new(p.probs().iter().copied()).expect("validated distribution");
        ChannelSampler {
            states: weighted(&self.p_s),
            outputs: self.w.rows().iter().map(weighted).collect(),
            x_size: self.x_size,
        }
    }
}

/// Precomputed samplers for drawing state sequences and channel outputs.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    states: WeightedIndex<f64>,
    outputs: Vec<WeightedIndex<f64>>,
    x_size: usize,
}

impl ChannelSampler {
    /// Draws `n` i.i.d. states from `P_S`.
    pub fn states<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u8> {
        (0..n).map(|_| self.states.sample(rng) as u8).collect()
    }

    /// Passes `x` through the memoryless channel in state `s`.
    pub fn transmit<R: Rng + ?Sized>(&self, x: &[u8], s: &[u8], rng: &mut R) -> Vec<u8> {
        x.iter()
            .zip(s)
            .map(|(&xi, &si)| self.outputs[usize::from(si) * self.x_size + usize::from(xi)].sample(rng) as u8)
            .collect()
    }
}
