//! Random binning code with conditionally constant composition codewords,
//! its two-step encoder, and the threshold decoder with erasure or list
//! output.
//!
//! Messages are indexed from 0. Symbols are stored as `u8`, so every
//! alphabet holds at most 256 symbols.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{check_regime, clip_plus, Mode};
use crate::types::{enumerate_types, mutual_information_of, Alphabet, ConditionalDistribution, SequenceType};

/// Codebooks larger than this many stored symbols are refused.
pub const MAX_CODEBOOK_SYMBOLS: u128 = 1 << 28;

const MAGIC: &[u8; 4] = b"SIBC";
const FORMAT_VERSION: u16 = 1;

/// Parameters of a random binning code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    /// Blocklength.
    pub n: usize,
    /// Bits per channel use.
    pub rate: f64,
    /// Bin-depth slack, in bits.
    pub epsilon: f64,
    /// Design law `P*(u, x | s)`, one row per state, `u`-major.
    pub design: ConditionalDistribution,
    pub s_size: usize,
    pub u_size: usize,
    pub x_size: usize,
    pub y_size: usize,
    pub seed: u64,
}

impl CodeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "blocklength must be >= 1, got {}",
                self.n
            )));
        }
        if !self.rate.is_finite() || self.rate < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rate must be finite and >= 0, got {}",
                self.rate
            )));
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        for (name, size) in [
            ("S", self.s_size),
            ("U", self.u_size),
            ("X", self.x_size),
            ("Y", self.y_size),
        ] {
            if size == 0 || size > 256 {
                return Err(Error::InvalidParameter(format!(
                    "|{name}| must lie in 1..=256, got {size}"
                )));
            }
        }
        if self.design.num_rows() != self.s_size || self.design.num_cols() != self.u_size * self.x_size {
            return Err(Error::ShapeMismatch(format!(
                "design must have {} rows of {} entries, got {} x {}",
                self.s_size,
                self.u_size * self.x_size,
                self.design.num_rows(),
                self.design.num_cols()
            )));
        }
        Ok(())
    }

    /// `floor(2^(nR))`.
    pub fn messages(&self) -> Result<usize> {
        let bits = self.n as f64 * self.rate;
        if bits >= 40.0 {
            return Err(Error::InvalidParameter(format!(
                "n * R = {bits} bits is too many messages"
            )));
        }
        Ok((bits.exp2() + 1e-9).floor() as usize)
    }
}

/// The design law rounded to counts compatible with one state type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedDesign {
    /// Joint counts `N(u, x | s)` indexed `s * |U||X| + u * |X| + x`;
    /// each state's block sums to that state's count.
    pub counts: Vec<u32>,
    pub u_size: usize,
    pub x_size: usize,
}

impl QuantizedDesign {
    /// `N(u, s)` indexed `s * |U| + u`.
    pub fn us_counts(&self) -> Vec<u32> {
        let ux = self.u_size * self.x_size;
        self.counts
            .chunks(ux)
            .flat_map(|row| row.chunks(self.x_size).map(|b| b.iter().sum::<u32>()))
            .collect()
    }

    /// Marginal `U` type `T*_U`.
    pub fn u_counts(&self) -> Vec<u32> {
        let us = self.us_counts();
        let mut out = vec![0u32; self.u_size];
        for (i, c) in us.iter().enumerate() {
            out[i % self.u_size] += c;
        }
        out
    }

    /// `I(U;S)` of the quantized joint type, in bits.
    pub fn i_star(&self) -> f64 {
        let us = self.us_counts();
        let ns = us.len() / self.u_size;
        let n: u32 = us.iter().sum();
        // Reorder to u-major for the helper.
        let mut joint = vec![0.0; us.len()];
        for s in 0..ns {
            for u in 0..self.u_size {
                joint[u * ns + s] = f64::from(us[s * self.u_size + u]) / f64::from(n);
            }
        }
        mutual_information_of(&joint, self.u_size, ns)
    }
}

/// Rounds `p_star` to integer counts per state with the state's count as
/// denominator, by largest remainders. This minimizes the total variation
/// per row. Ties go to the lower index. States absent from `state_type`
/// get all-zero rows.
pub fn quantize_design(
    p_star: &ConditionalDistribution,
    state_type: &SequenceType,
    u_size: usize,
) -> Result<QuantizedDesign> {
    if p_star.num_rows() != state_type.counts().len() || u_size == 0 || !p_star.num_cols().is_multiple_of(u_size) {
        return Err(Error::ShapeMismatch(
            "design rows must match the state alphabet and |U| must divide the row length".into(),
        ));
    }
    let x_size = p_star.num_cols() / u_size;
    let mut counts = Vec::with_capacity(p_star.num_rows() * p_star.num_cols());
    for (row, &n_s) in p_star.rows().iter().zip(state_type.counts()) {
        counts.extend(round_row(row.probs(), n_s));
    }
    Ok(QuantizedDesign { counts, u_size, x_size })
}

fn round_row(p: &[f64], total: u32) -> Vec<u32> {
    let scaled: Vec<f64> = p.iter().map(|&q| q * f64::from(total)).collect();
    let mut out: Vec<u32> = scaled.iter().map(|v| v.floor() as u32).collect();
    let assigned: u32 = out.iter().sum();
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

/// One sub-code: the codewords used when the state sequence has type λ.
#[derive(Debug, Clone, PartialEq)]
pub struct SubCode {
    pub state_type: Vec<u32>,
    pub design: QuantizedDesign,
    /// `N(u, s)` indexed `s * |U| + u`.
    pub us_counts: Vec<u32>,
    pub u_counts: Vec<u32>,
    pub i_star: f64,
    pub rows: usize,
    /// Codeword `(m, l)` occupies `words[(m * rows + l) * n ..][.. n]`.
    words: Vec<u8>,
}

impl SubCode {
    pub fn codeword(&self, m: usize, l: usize) -> &[u8] {
        let n = self.n();
        let start = (m * self.rows + l) * n;
        &self.words[start..start + n]
    }

    fn n(&self) -> usize {
        self.state_type.iter().sum::<u32>() as usize
    }
}

/// A random binning codebook: one sub-code per state type.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    params: CodeParams,
    messages: usize,
    subcodes: Vec<SubCode>,
    by_type: HashMap<Vec<u32>, usize>,
}

/// `ceil(2^(n (I* + epsilon)))`, guarded against rounding up exact powers.
fn row_count(n: usize, i_star: f64, epsilon: f64) -> f64 {
    ((n as f64 * (i_star + epsilon)).exp2() - 1e-9).ceil().max(1.0)
}

/// Draws a codebook. Deterministic in `params.seed`; each sub-code uses
/// its own stream.
pub fn build_codebook(params: &CodeParams) -> Result<Codebook> {
    params.validate()?;
    let messages = params.messages()?;
    let n = params.n;
    let mut plan = Vec::new();
    let mut total: u128 = 0;
    for t in enumerate_types(n as u32, Alphabet::new(params.s_size)?) {
        let design = quantize_design(&params.design, &t, params.u_size)?;
        let i_star = design.i_star();
        let rows = row_count(n, i_star, params.epsilon);
        if rows > 1e15 {
            return Err(Error::Construction(format!(
                "sub-code depth 2^{:.1} is too large",
                n as f64 * (i_star + params.epsilon)
            )));
        }
        total += messages as u128 * rows as u128 * n as u128;
        if total > MAX_CODEBOOK_SYMBOLS {
            return Err(Error::Construction(format!(
                "codebook needs more than {MAX_CODEBOOK_SYMBOLS} stored symbols; reduce n, R or epsilon"
            )));
        }
        plan.push((t, design, i_star, rows as usize));
    }
    let mut subcodes = Vec::with_capacity(plan.len());
    let mut by_type = HashMap::with_capacity(plan.len());
    for (index, (t, design, i_star, rows)) in plan.into_iter().enumerate() {
        let u_counts = design.u_counts();
        let base: Vec<u8> = u_counts
            .iter()
            .enumerate()
            .flat_map(|(u, &c)| std::iter::repeat_n(u as u8, c as usize))
            .collect();
        if base.len() != n {
            return Err(Error::Construction(
                "quantized design does not realize a U type of length n".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(index as u64);
        let mut words = Vec::with_capacity(messages * rows * n);
        let mut word = base.clone();
        for _ in 0..messages * rows {
            word.copy_from_slice(&base);
            word.shuffle(&mut rng);
            words.extend_from_slice(&word);
        }
        by_type.insert(t.counts().to_vec(), index);
        subcodes.push(SubCode {
            state_type: t.counts().to_vec(),
            us_counts: design.us_counts(),
            u_counts,
            design,
            i_star,
            rows,
            words,
        });
    }
    Ok(Codebook {
        params: params.clone(),
        messages,
        subcodes,
        by_type,
    })
}

/// Output of the encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub u: Vec<u8>,
    pub x: Vec<u8>,
    /// Row of the chosen codeword, `None` on fallback.
    pub row: Option<usize>,
    /// No row of the message's bin had the target joint type with `s`.
    pub encoding_error: bool,
}

/// Parameters of the threshold decoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    threshold: f64,
    alpha: f64,
    mode: Mode,
}

impl DecoderConfig {
    pub fn new(mode: Mode, threshold: f64, alpha: f64) -> Result<Self> {
        if !threshold.is_finite() || !alpha.is_finite() {
            return Err(Error::InvalidParameter("threshold and alpha must be finite".into()));
        }
        check_regime(mode, alpha, threshold)?;
        Ok(DecoderConfig { threshold, alpha, mode })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Whether a message with score `score` beats the best competing
    /// score `competitor` (`-inf` when there is none).
    pub fn qualifies(&self, score: f64, competitor: f64) -> bool {
        score > self.threshold + self.alpha * clip_plus(competitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Erased,
    Decoded(usize),
    /// Every qualifying message, ascending; may be empty.
    Listed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    pub decision: Decision,
    /// Best metric per message.
    pub scores: Vec<f64>,
}

/// Messages whose score beats the best competing score, ascending.
pub fn qualifiers(scores: &[f64], config: &DecoderConfig) -> Vec<usize> {
    let mut top = f64::NEG_INFINITY;
    let mut top_at = usize::MAX;
    let mut second = f64::NEG_INFINITY;
    for (m, &s) in scores.iter().enumerate() {
        if s > top {
            second = top;
            top = s;
            top_at = m;
        } else if s > second {
            second = s;
        }
    }
    scores
        .iter()
        .enumerate()
        .filter(|&(m, &s)| config.qualifies(s, if m == top_at { second } else { top }))
        .map(|(m, _)| m)
        .collect()
}

/// Number of qualifying messages. At most 1 whenever `alpha >= 1` and
/// `T >= 0`.
pub fn check_unambiguous(scores: &[f64], config: &DecoderConfig) -> usize {
    qualifiers(scores, config).len()
}

/// Empirical `I(u; y) - i_star` in bits.
pub fn metric(u: &[u8], y: &[u8], u_size: usize, y_size: usize, i_star: f64) -> Result<f64> {
    if u.len() != y.len() {
        return Err(Error::LengthMismatch(u.len(), y.len()));
    }
    let mut joint = vec![0.0; u_size * y_size];
    let n = u.len() as f64;
    for (position, (&a, &b)) in u.iter().zip(y).enumerate() {
        let (a, b) = (usize::from(a), usize::from(b));
        if a >= u_size || b >= y_size {
            return Err(Error::SymbolOutOfRange {
                symbol: if a >= u_size { a } else { b },
                position,
                size: if a >= u_size { u_size } else { y_size },
            });
        }
        joint[a * y_size + b] += 1.0 / n;
    }
    Ok(mutual_information_of(&joint, u_size, y_size) - i_star)
}

impl Codebook {
    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// `M`.
    pub fn messages(&self) -> usize {
        self.messages
    }

    pub fn subcodes(&self) -> &[SubCode] {
        &self.subcodes
    }

    pub fn subcode(&self, state_type: &[u32]) -> Option<&SubCode> {
        self.by_type.get(state_type).map(|&i| &self.subcodes[i])
    }

    fn state_type(&self, s: &[u8]) -> Result<Vec<u32>> {
        if s.len() != self.params.n {
            return Err(Error::LengthMismatch(s.len(), self.params.n));
        }
        let mut counts = vec![0u32; self.params.s_size];
        for (position, &si) in s.iter().enumerate() {
            let si = usize::from(si);
            if si >= self.params.s_size {
                return Err(Error::SymbolOutOfRange {
                    symbol: si,
                    position,
                    size: self.params.s_size,
                });
            }
            counts[si] += 1;
        }
        Ok(counts)
    }

    /// Encodes message `m` for state sequence `s`. Ties among suitable
    /// rows and the channel-input draw use `rng`.
    pub fn encode<R: Rng + ?Sized>(&self, m: usize, s: &[u8], rng: &mut R) -> Result<Encoded> {
        if m >= self.messages {
            return Err(Error::InvalidParameter(format!(
                "message {m} out of range 0..{}",
                self.messages
            )));
        }
        let lambda = self.state_type(s)?;
        let sub = self.subcode(&lambda).expect("every state type has a sub-code");
        let (nu, nx) = (self.params.u_size, self.params.x_size);

        let mut matches = Vec::new();
        let mut joint = vec![0u32; sub.us_counts.len()];
        for l in 0..sub.rows {
            joint.iter_mut().for_each(|c| *c = 0);
            for (&ui, &si) in sub.codeword(m, l).iter().zip(s) {
                joint[usize::from(si) * nu + usize::from(ui)] += 1;
            }
            if joint == sub.us_counts {
                matches.push(l);
            }
        }
        let (u, row, encoding_error) = if matches.is_empty() {
            (self.draw_given(s, &sub.us_counts, nu, rng), None, true)
        } else {
            let l = matches[rng.random_range(0..matches.len())];
            (sub.codeword(m, l).to_vec(), Some(l), false)
        };

        // x uniform over sequences with the design joint type given (u, s).
        let keys: Vec<usize> = u
            .iter()
            .zip(s)
            .map(|(&ui, &si)| usize::from(si) * nu + usize::from(ui))
            .collect();
        let group_counts: Vec<u32> = sub.design.counts.clone();
        let x = self.draw_given_keys(&keys, &group_counts, nx, rng);
        Ok(Encoded {
            u,
            x,
            row,
            encoding_error,
        })
    }

    /// A uniform draw of `u` with `N(u, s) = us_counts`.
    fn draw_given<R: Rng + ?Sized>(&self, s: &[u8], us_counts: &[u32], nu: usize, rng: &mut R) -> Vec<u8> {
        let keys: Vec<usize> = s.iter().map(|&si| usize::from(si)).collect();
        self.draw_given_keys(&keys, us_counts, nu, rng)
    }

    /// For each group key `g`, fills the positions with key `g` by a
    /// uniformly shuffled multiset holding `counts[g * k + v]` copies of
    /// symbol `v`.
    fn draw_given_keys<R: Rng + ?Sized>(&self, keys: &[usize], counts: &[u32], k: usize, rng: &mut R) -> Vec<u8> {
        let groups = counts.len() / k;
        let mut pools: Vec<Vec<u8>> = (0..groups)
            .map(|g| {
                (0..k)
                    .flat_map(|v| std::iter::repeat_n(v as u8, counts[g * k + v] as usize))
                    .collect()
            })
            .collect();
        for pool in &mut pools {
            pool.shuffle(rng);
        }
        let mut cursor = vec![0usize; groups];
        keys.iter()
            .map(|&g| {
                let v = pools[g][cursor[g]];
                cursor[g] += 1;
                v
            })
            .collect()
    }

    /// Best metric per message over all sub-codes and rows.
    pub fn scores(&self, y: &[u8]) -> Result<Vec<f64>> {
        let n = self.params.n;
        if y.len() != n {
            return Err(Error::LengthMismatch(y.len(), n));
        }
        let (nu, ny) = (self.params.u_size, self.params.y_size);
        let clogc: Vec<f64> = (0..=n)
            .map(|c| if c == 0 { 0.0 } else { c as f64 * (c as f64).log2() })
            .collect();
        let mut y_counts = vec![0usize; ny];
        for (position, &yi) in y.iter().enumerate() {
            let yi = usize::from(yi);
            if yi >= ny {
                return Err(Error::SymbolOutOfRange {
                    symbol: yi,
                    position,
                    size: ny,
                });
            }
            y_counts[yi] += 1;
        }
        let y_term: f64 = y_counts.iter().map(|&c| clogc[c]).sum();
        let nf = n as f64;
        let mut scores = vec![f64::NEG_INFINITY; self.messages];
        let mut joint = vec![0usize; nu * ny];
        for sub in &self.subcodes {
            let u_term: f64 = sub.u_counts.iter().map(|&c| clogc[c as usize]).sum();
            let base = clogc[n] - u_term - y_term;
            for (m, score) in scores.iter_mut().enumerate() {
                for l in 0..sub.rows {
                    joint.iter_mut().for_each(|c| *c = 0);
                    for (&ui, &yi) in sub.codeword(m, l).iter().zip(y) {
                        joint[usize::from(ui) * ny + usize::from(yi)] += 1;
                    }
                    let uy: f64 = joint.iter().map(|&c| clogc[c]).sum();
                    let mi = ((uy + base) / nf).max(0.0);
                    let value = mi - sub.i_star;
                    if value > *score {
                        *score = value;
                    }
                }
            }
        }
        Ok(scores)
    }

    pub fn decode(&self, y: &[u8], config: &DecoderConfig) -> Result<DecodeOutput> {
        let scores = self.scores(y)?;
        let decision = decide(&scores, config);
        Ok(DecodeOutput { decision, scores })
    }

    /// The same code with time index `i` of every codeword moved to
    /// position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Codebook> {
        let n = self.params.n;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter("not a permutation of the time indices".into()));
        }
        let mut out = self.clone();
        for sub in &mut out.subcodes {
            for word in sub.words.chunks_mut(n) {
                let old = word.to_vec();
                for (i, &p) in perm.iter().enumerate() {
                    word[p] = old[i];
                }
            }
        }
        Ok(out)
    }

    /// Versioned little-endian binary layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let p = &self.params;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(p.n as u64).to_le_bytes());
        out.extend_from_slice(&p.rate.to_le_bytes());
        out.extend_from_slice(&p.epsilon.to_le_bytes());
        out.extend_from_slice(&p.seed.to_le_bytes());
        for size in [p.s_size, p.u_size, p.x_size, p.y_size] {
            out.extend_from_slice(&(size as u32).to_le_bytes());
        }
        for row in p.design.rows() {
            for &v in row.probs() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.messages as u64).to_le_bytes());
        out.extend_from_slice(&(self.subcodes.len() as u64).to_le_bytes());
        for sub in &self.subcodes {
            for &c in sub.state_type.iter().chain(&sub.design.counts) {
                out.extend_from_slice(&c.to_le_bytes());
            }
            out.extend_from_slice(&sub.i_star.to_le_bytes());
            out.extend_from_slice(&(sub.rows as u64).to_le_bytes());
            out.extend_from_slice(&sub.words);
        }
        out
    }

    /// Parses [`Codebook::to_bytes`] output, checking every stored
    /// codeword's composition.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, at: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n = r.u64()? as usize;
        let rate = r.f64()?;
        let epsilon = r.f64()?;
        let seed = r.u64()?;
        let mut sizes = [0usize; 4];
        for s in &mut sizes {
            *s = r.u32()? as usize;
        }
        let [s_size, u_size, x_size, y_size] = sizes;
        if sizes.iter().any(|&s| s == 0 || s > 256) {
            return Err(Error::Format("alphabet size out of range".into()));
        }
        let mut rows = Vec::with_capacity(s_size);
        for _ in 0..s_size {
            rows.push((0..u_size * x_size).map(|_| r.f64()).collect::<Result<Vec<f64>>>()?);
        }
        let design = ConditionalDistribution::from_rows(rows)?;
        let params = CodeParams {
            n,
            rate,
            epsilon,
            design,
            s_size,
            u_size,
            x_size,
            y_size,
            seed,
        };
        params.validate()?;
        let messages = r.u64()? as usize;
        let count = r.u64()? as usize;
        let mut subcodes = Vec::new();
        let mut by_type = HashMap::new();
        for index in 0..count {
            let state_type = (0..s_size).map(|_| r.u32()).collect::<Result<Vec<u32>>>()?;
            let counts = (0..s_size * u_size * x_size)
                .map(|_| r.u32())
                .collect::<Result<Vec<u32>>>()?;
            let design = QuantizedDesign { counts, u_size, x_size };
            let i_star = r.f64()?;
            let rows = r.u64()? as usize;
            if state_type.iter().map(|&c| c as usize).sum::<usize>() != n {
                return Err(Error::Format("state type does not sum to n".into()));
            }
            let len = messages
                .checked_mul(rows)
                .and_then(|v| v.checked_mul(n))
                .ok_or_else(|| Error::Format("sub-code size overflows".into()))?;
            let words = r.take(len)?.to_vec();
            let u_counts = design.u_counts();
            for word in words.chunks(n.max(1)) {
                let mut seen = vec![0u32; u_size];
                for &u in word {
                    let u = usize::from(u);
                    if u >= u_size {
                        return Err(Error::Format("codeword symbol out of range".into()));
                    }
                    seen[u] += 1;
                }
                if seen != u_counts {
                    return Err(Error::Format("codeword composition differs from its sub-code".into()));
                }
            }
            by_type.insert(state_type.clone(), index);
            subcodes.push(SubCode {
                state_type,
                us_counts: design.us_counts(),
                u_counts,
                design,
                i_star,
                rows,
                words,
            });
        }
        if r.at != bytes.len() {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(Codebook {
            params,
            messages,
            subcodes,
            by_type,
        })
    }
}

/// Applies the decision rule to per-message scores.
pub fn decide(scores: &[f64], config: &DecoderConfig) -> Decision {
    let q = qualifiers(scores, config);
    match config.mode() {
        Mode::List => Decision::Listed(q),
        Mode::Erasure => match q.as_slice() {
            [m] => Decision::Decoded(*m),
            [] => Decision::Erased,
            _ => unreachable!("two qualifiers with alpha >= 1 and T >= 0"),
        },
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .at
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated".into()))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}
