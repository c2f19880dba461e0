//! Finite-alphabet probability objects, empirical types and information
//! measures.
//!
//! Every information quantity is in bits. Product alphabets are flattened
//! row-major with the state coordinate slowest: `(s, u, x, y)` maps to
//! `((s * |U| + u) * |X| + x) * |Y| + y`, and sub-products keep the same
//! relative order (`(u, x)` is u-major, a `Y | X,S` kernel has one row per
//! `s * |X| + x`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`Distribution`].
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A finite alphabet `{0, .., size - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet(usize);

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        Ok(Alphabet(size))
    }

    /// The default auxiliary alphabet for input alphabet `x` and state
    /// alphabet `s`: `|X| * |S| + 1` symbols.
    pub fn auxiliary(x: Alphabet, s: Alphabet) -> Self {
        Alphabet(x.0 * s.0 + 1)
    }

    pub fn size(self) -> usize {
        self.0
    }

    /// The product alphabet `self × other`, flattened row-major.
    pub fn product(self, other: Alphabet) -> Self {
        Alphabet(self.0 * other.0)
    }
}

/// A probability vector over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Validates that every entry is a finite nonnegative number and that the
    /// entries sum to one within [`SUM_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidProbability { index, value });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized(total));
        }
        Ok(Distribution { probs })
    }

    /// Accepts entries whose sum is within `tolerance` of one and divides
    /// them by their sum. Returns the distribution and whether any rescaling
    /// happened.
    pub fn renormalized(probs: Vec<f64>, tolerance: f64) -> Result<(Self, bool)> {
        if probs.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidProbability { index, value });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tolerance {
            return Err(Error::NotNormalized(total));
        }
        if total == 1.0 {
            return Ok((Distribution { probs }, false));
        }
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok((Distribution::new(probs)?, true))
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.size();
        Distribution {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(alphabet: Alphabet, symbol: usize) -> Result<Self> {
        if symbol >= alphabet.size() {
            return Err(Error::SymbolOutOfRange {
                symbol,
                position: 0,
                size: alphabet.size(),
            });
        }
        let mut probs = vec![0.0; alphabet.size()];
        probs[symbol] = 1.0;
        Ok(Distribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.probs.len())
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Distribution::new(probs)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

/// A stochastic kernel: one [`Distribution`] per conditioning cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Distribution>", into = "Vec<Distribution>")]
pub struct ConditionalDistribution {
    rows: Vec<Distribution>,
}

impl ConditionalDistribution {
    pub fn new(rows: Vec<Distribution>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::ShapeMismatch("conditional distribution has no rows".into()));
        };
        let width = first.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::ShapeMismatch(format!(
                "row {i} has {} entries, expected {width}",
                row.len()
            )));
        }
        Ok(ConditionalDistribution { rows })
    }

    /// Builds a kernel from raw rows, validating each one.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows.into_iter().map(Distribution::new).collect::<Result<Vec<_>>>()?;
        ConditionalDistribution::new(rows)
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }

    pub fn row(&self, cell: usize) -> &Distribution {
        &self.rows[cell]
    }

    /// Number of conditioning cells.
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Size of the alphabet each row is defined over.
    pub fn num_cols(&self) -> usize {
        self.rows[0].len()
    }
}

impl TryFrom<Vec<Distribution>> for ConditionalDistribution {
    type Error = Error;

    fn try_from(rows: Vec<Distribution>) -> Result<Self> {
        ConditionalDistribution::new(rows)
    }
}

impl From<ConditionalDistribution> for Vec<Distribution> {
    fn from(c: ConditionalDistribution) -> Self {
        c.rows
    }
}

/// An empirical distribution with integer counts and denominator `n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SequenceType {
    counts: Vec<u32>,
    n: u32,
}

impl SequenceType {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyAlphabet);
        }
        let n = counts.iter().map(|&c| u64::from(c)).sum::<u64>();
        let n = u32::try_from(n).map_err(|_| Error::InvalidParameter(format!("type denominator {n} too large")))?;
        Ok(SequenceType { counts, n })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn denominator(&self) -> u32 {
        self.n
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet(self.counts.len())
    }

    /// The induced distribution `counts / n`.
    pub fn to_distribution(&self) -> Result<Distribution> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("type with denominator 0".into()));
        }
        let n = f64::from(self.n);
        Ok(Distribution {
            probs: self.counts.iter().map(|&c| f64::from(c) / n).collect(),
        })
    }
}

/// The triple `(P_S, P_{UX|S}, P_{Y|XS})` describing a joint law over
/// `(S, U, X, Y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSystem {
    pub p_s: Distribution,
    /// One row per state, over `U × X` (u-major).
    pub p_ux_given_s: ConditionalDistribution,
    /// One row per `(s, x)` (s-major), over `Y`.
    pub p_y_given_xs: ConditionalDistribution,
    pub u_size: usize,
    pub x_size: usize,
}

impl JointSystem {
    pub fn new(
        p_s: Distribution,
        p_ux_given_s: ConditionalDistribution,
        p_y_given_xs: ConditionalDistribution,
        u_size: usize,
        x_size: usize,
    ) -> Result<Self> {
        let s_size = p_s.len();
        if u_size == 0 || x_size == 0 {
            return Err(Error::EmptyAlphabet);
        }
        if p_ux_given_s.num_rows() != s_size || p_ux_given_s.num_cols() != u_size * x_size {
            return Err(Error::ShapeMismatch(format!(
                "P(u,x|s) is {}x{}, expected {}x{}",
                p_ux_given_s.num_rows(),
                p_ux_given_s.num_cols(),
                s_size,
                u_size * x_size
            )));
        }
        if p_y_given_xs.num_rows() != s_size * x_size {
            return Err(Error::ShapeMismatch(format!(
                "P(y|x,s) has {} rows, expected {}",
                p_y_given_xs.num_rows(),
                s_size * x_size
            )));
        }
        let sys = JointSystem {
            p_s,
            p_ux_given_s,
            p_y_given_xs,
            u_size,
            x_size,
        };
        let total: f64 = sys.joint().iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized(total));
        }
        Ok(sys)
    }

    pub fn s_size(&self) -> usize {
        self.p_s.len()
    }

    pub fn y_size(&self) -> usize {
        self.p_y_given_xs.num_cols()
    }

    /// The joint law over `(s, u, x, y)`, flattened row-major.
    pub fn joint(&self) -> Vec<f64> {
        let (ns, nu, nx, ny) = (self.s_size(), self.u_size, self.x_size, self.y_size());
        let mut out = Vec::with_capacity(ns * nu * nx * ny);
        for s in 0..ns {
            let ps = self.p_s.probs()[s];
            let ux = self.p_ux_given_s.row(s).probs();
            for u in 0..nu {
                for x in 0..nx {
                    let pux = ps * ux[u * nx + x];
                    let py = self.p_y_given_xs.row(s * nx + x).probs();
                    out.extend(py.iter().map(|&p| pux * p));
                }
            }
        }
        out
    }

    /// Joint law of `(U, Y)`, u-major.
    pub fn uy_marginal(&self) -> Vec<f64> {
        let (ns, nu, nx, ny) = (self.s_size(), self.u_size, self.x_size, self.y_size());
        let joint = self.joint();
        let mut out = vec![0.0; nu * ny];
        for s in 0..ns {
            for u in 0..nu {
                for x in 0..nx {
                    let base = ((s * nu + u) * nx + x) * ny;
                    for y in 0..ny {
                        out[u * ny + y] += joint[base + y];
                    }
                }
            }
        }
        out
    }

    /// Joint law of `(U, S)`, u-major.
    pub fn us_marginal(&self) -> Vec<f64> {
        let (ns, nu, nx) = (self.s_size(), self.u_size, self.x_size);
        let mut out = vec![0.0; nu * ns];
        for s in 0..ns {
            let ps = self.p_s.probs()[s];
            let ux = self.p_ux_given_s.row(s).probs();
            for u in 0..nu {
                out[u * ns + s] += ps * ux[u * nx..(u + 1) * nx].iter().sum::<f64>();
            }
        }
        out
    }
}

/// Counts each symbol of `seq`.
pub fn empirical_type(seq: &[usize], alphabet: Alphabet) -> Result<SequenceType> {
    let mut counts = vec![0u32; alphabet.size()];
    for (position, &symbol) in seq.iter().enumerate() {
        if symbol >= alphabet.size() {
            return Err(Error::SymbolOutOfRange {
                symbol,
                position,
                size: alphabet.size(),
            });
        }
        counts[symbol] += 1;
    }
    SequenceType::new(counts)
}

/// Joint type of two equal-length sequences over `a × b`, flattened a-major.
pub fn joint_empirical_type(seq_a: &[usize], seq_b: &[usize], a: Alphabet, b: Alphabet) -> Result<SequenceType> {
    if seq_a.len() != seq_b.len() {
        return Err(Error::LengthMismatch(seq_a.len(), seq_b.len()));
    }
    let paired = seq_a
        .iter()
        .zip(seq_b)
        .enumerate()
        .map(|(i, (&sa, &sb))| {
            if sa >= a.size() {
                Err(Error::SymbolOutOfRange {
                    symbol: sa,
                    position: i,
                    size: a.size(),
                })
            } else if sb >= b.size() {
                Err(Error::SymbolOutOfRange {
                    symbol: sb,
                    position: i,
                    size: b.size(),
                })
            } else {
                Ok(sa * b.size() + sb)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    empirical_type(&paired, a.product(b))
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(p: &Distribution) -> f64 {
    entropy_of(p.probs())
}

pub(crate) fn entropy_of(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// Mutual information of a joint law over `a × b` (a-major), in bits.
pub fn mutual_information(joint: &Distribution, a: Alphabet, b: Alphabet) -> Result<f64> {
    if joint.len() != a.size() * b.size() {
        return Err(Error::ShapeMismatch(format!(
            "joint has {} entries, expected {}x{}",
            joint.len(),
            a.size(),
            b.size()
        )));
    }
    Ok(mutual_information_of(joint.probs(), a.size(), b.size()))
}

pub(crate) fn mutual_information_of(joint: &[f64], na: usize, nb: usize) -> f64 {
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for i in 0..na {
        for j in 0..nb {
            let p = joint[i * nb + j];
            pa[i] += p;
            pb[j] += p;
        }
    }
    // A variable supported on one symbol carries no information.
    let support = |m: &[f64]| m.iter().filter(|&&p| p > 0.0).count();
    if support(&pa) <= 1 || support(&pb) <= 1 {
        return 0.0;
    }
    let mut mi = 0.0;
    for i in 0..na {
        for j in 0..nb {
            let p = joint[i * nb + j];
            if p > 0.0 {
                mi += p * (p / (pa[i] * pb[j])).log2();
            }
        }
    }
    mi.max(0.0)
}

/// `D(p || q)` in bits; `+inf` when `p` puts mass where `q` has none.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    Ok(kl_of(p.probs(), q.probs()))
}

pub(crate) fn kl_of(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            d += pi * (pi / qi).log2();
        }
    }
    d.max(0.0)
}

/// `sum_c weights(c) * D(p(.|c) || q(.|c))`. Cells with zero weight
/// contribute nothing, even if their rows have disjoint supports.
pub fn conditional_kl(
    p_cond: &ConditionalDistribution,
    q_cond: &ConditionalDistribution,
    weights: &Distribution,
) -> Result<f64> {
    if p_cond.num_rows() != q_cond.num_rows() || p_cond.num_rows() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} and {} rows with {} weights",
            p_cond.num_rows(),
            q_cond.num_rows(),
            weights.len()
        )));
    }
    if p_cond.num_cols() != q_cond.num_cols() {
        return Err(Error::LengthMismatch(p_cond.num_cols(), q_cond.num_cols()));
    }
    let mut total = 0.0;
    for ((p, q), &w) in p_cond.rows().iter().zip(q_cond.rows()).zip(weights.probs()) {
        if w > 0.0 {
            total += w * kl_of(p.probs(), q.probs());
        }
    }
    Ok(total)
}

/// `I(U;Y) - I(U;S)` under the joint law of `sys`.
pub fn j_functional(sys: &JointSystem) -> f64 {
    let i_uy = mutual_information_of(&sys.uy_marginal(), sys.u_size, sys.y_size());
    let i_us = mutual_information_of(&sys.us_marginal(), sys.u_size, sys.s_size());
    i_uy - i_us
}

/// `I(U;S)` under `p_s(s) * p_u_given_s(u|s)`.
pub fn i_star_us(p_s: &Distribution, p_u_given_s: &ConditionalDistribution) -> Result<f64> {
    if p_u_given_s.num_rows() != p_s.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} conditional rows for {} states",
            p_u_given_s.num_rows(),
            p_s.len()
        )));
    }
    let ns = p_s.len();
    let nu = p_u_given_s.num_cols();
    let mut joint = vec![0.0; ns * nu];
    for s in 0..ns {
        for u in 0..nu {
            joint[s * nu + u] = p_s.probs()[s] * p_u_given_s.row(s).probs()[u];
        }
    }
    Ok(mutual_information_of(&joint, ns, nu))
}

/// Iterator over all count vectors of length `|A|` summing to `n`, in
/// ascending lexicographic order (`[0, .., 0, n]` first, `[n, 0, .., 0]`
/// last).
#[derive(Debug, Clone)]
pub struct TypeIter {
    current: Option<Vec<u32>>,
}

impl Iterator for TypeIter {
    type Item = SequenceType;

    fn next(&mut self) -> Option<SequenceType> {
        let current = self.current.take()?;
        let out = SequenceType {
            n: current.iter().sum(),
            counts: current.clone(),
        };
        let k = current.len();
        // Successor: bump the entry just left of the last nonzero one and
        // move the rest of that entry's mass to the final slot.
        if let Some(j) = (1..k).rev().find(|&j| current[j] > 0) {
            let mut next = current;
            let moved = next[j] - 1;
            next[j] = 0;
            next[j - 1] += 1;
            next[k - 1] = moved;
            self.current = Some(next);
        }
        Some(out)
    }
}

/// Every type of denominator `n` over `alphabet`, each exactly once.
pub fn enumerate_types(n: u32, alphabet: Alphabet) -> TypeIter {
    let mut first = vec![0u32; alphabet.size()];
    first[alphabet.size() - 1] = n;
    TypeIter { current: Some(first) }
}

/// Raw count vectors of [`enumerate_types`], collected.
pub(crate) fn type_lattice(n: u32, size: usize) -> Vec<Vec<u32>> {
    enumerate_types(n, Alphabet(size)).map(|t| t.counts).collect()
}

/// `C(n + k - 1, k - 1)`, the number of types of denominator `n` over `k`
/// symbols.
pub fn num_types(n: u32, k: usize) -> u128 {
    binomial(u128::from(n) + k as u128 - 1, k as u128 - 1).unwrap_or(u128::MAX)
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

fn log2_factorial(n: u32) -> f64 {
    (2..=n).map(|k| f64::from(k).log2()).sum()
}

/// `log2 |T(t)|` computed from log-factorials.
pub fn log_type_class_size_exact(t: &SequenceType) -> f64 {
    let denom: f64 = t.counts.iter().map(|&c| log2_factorial(c)).sum();
    (log2_factorial(t.n) - denom).max(0.0)
}

/// The first-order approximation `n * H(t)` of [`log_type_class_size_exact`].
pub fn log_type_class_size_asymptotic(t: &SequenceType) -> f64 {
    match t.to_distribution() {
        Ok(d) => f64::from(t.n) * entropy(&d),
        Err(_) => 0.0,
    }
}

/// `|T(t)| = n! / prod(counts!)` in integer arithmetic, `None` on overflow.
pub fn type_class_size(t: &SequenceType) -> Option<u128> {
    let mut placed: u128 = 0;
    let mut acc: u128 = 1;
    for &c in &t.counts {
        placed += u128::from(c);
        acc = acc.checked_mul(binomial(placed, u128::from(c))?)?;
    }
    Some(acc)
}
