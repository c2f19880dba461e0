//! Erasure and list decoding exponents by exhaustive search over
//! type-lattice points.
//!
//! Both exponents have the shape
//!
//! ```text
//! min_{P~_S}  max_{P~_{UX|S}}  min_{P~_{Y|XS}}  objective(P~_S, P~_{UX|S}, P~_{Y|XS})
//! ```
//!
//! where every distribution ranges over lattice points with denominator `d`
//! (`P~_{UX|S}` and `P~_{Y|XS}` as independent lattice rows per conditioning
//! cell). The search visits the lattice in the written min-max-min order and
//! returns the exact lattice optimum; pruning only discards candidates that
//! are provably worse by more than [`PRUNE_MARGIN`], so every reported value
//! and witness is the same one a plain triple loop would produce (up to
//! floating-point summation order).
//!
//! Ties between equal-valued witnesses go to the lexicographically smallest
//! count vector, with `P~_S` compared first, then the `P~_{UX|S}` rows in
//! state order, then the `P~_{Y|XS}` rows in `(s, x)` order.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::par::{map_reduce, Execution};
use crate::types::{
    self, conditional_kl, j_functional, kl_of, mutual_information_of, ConditionalDistribution, Distribution,
    JointSystem,
};

/// Slack added to the threshold in the constrained branch `J <= T`.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-12;

/// Candidates are only discarded when provably worse by more than this.
pub const PRUNE_MARGIN: f64 = 1e-9;

/// Upper bound on the number of `P~_{UX|S}` combinations per state law.
const MAX_COMBINATIONS: u128 = 1 << 40;

/// Largest number of `(s, x)` cells the search supports.
pub const MAX_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Erasure,
    List,
}

/// Which inner minimum of `E_1` attained the reported value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Divergence minimized subject to `J <= T`.
    Constrained,
    /// Divergence plus the rate penalty, unconstrained.
    Penalized,
}

/// The decoder-side parameters that enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub mode: Mode,
    pub rate: f64,
    pub threshold: f64,
    pub alpha: f64,
}

impl Penalty {
    pub fn validate(&self) -> Result<()> {
        if !self.rate.is_finite() || self.rate < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "rate must be finite and >= 0, got {}",
                self.rate
            )));
        }
        if !self.threshold.is_finite() || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter("threshold and alpha must be finite".into()));
        }
        check_regime(self.mode, self.alpha, self.threshold)
    }

    fn constraint_holds(&self, j: f64) -> bool {
        j <= self.threshold + CONSTRAINT_TOLERANCE
    }

    fn e1_penalized(&self, d_full: f64, d_cond: f64, j: f64) -> f64 {
        let base = match self.mode {
            Mode::Erasure => d_full,
            Mode::List => d_cond,
        };
        base + clip_plus((j - self.threshold) / self.alpha - self.rate)
    }

    /// `(value, branch)` of the `E_1` objective at one point; the
    /// constrained branch wins ties.
    fn e1(&self, d_full: f64, d_cond: f64, j: f64) -> (f64, Branch) {
        let penalized = self.e1_penalized(d_full, d_cond, j);
        if self.constraint_holds(j) && d_full <= penalized {
            (d_full, Branch::Constrained)
        } else {
            (penalized, Branch::Penalized)
        }
    }

    fn e2(&self, d_full: f64, j: f64) -> f64 {
        let boosted = self.threshold + self.alpha * clip_plus(j);
        match self.mode {
            Mode::Erasure => d_full + clip_plus(boosted - self.rate),
            Mode::List => d_full + clip_plus(boosted) - self.rate,
        }
    }

    /// Lower bounds on the two objectives given a lower bound on the full
    /// and conditional divergences.
    fn lower_bounds(&self, d_full: f64, d_cond: f64) -> [f64; 2] {
        match self.mode {
            Mode::Erasure => [d_full, d_full],
            Mode::List => [d_cond, d_full - self.rate],
        }
    }
}

/// Checks the (alpha, T) regime of a decoding mode.
pub fn check_regime(mode: Mode, alpha: f64, threshold: f64) -> Result<()> {
    match mode {
        Mode::Erasure if alpha < 1.0 || threshold < 0.0 => Err(Error::Regime(format!(
            "erasure mode requires alpha >= 1 and T >= 0 (got alpha = {alpha}, T = {threshold})"
        ))),
        Mode::List if !(alpha > 0.0 && alpha < 1.0) => Err(Error::Regime(format!(
            "list mode requires 0 < alpha < 1 (got alpha = {alpha})"
        ))),
        _ => Ok(()),
    }
}

/// `max(0, t)`.
pub fn clip_plus(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// A fully specified exponent computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentQuery {
    pub channel: Channel,
    /// Auxiliary alphabet size, at most `|X||S| + 1`.
    pub u_size: usize,
    pub rate: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub mode: Mode,
    /// Lattice denominator `d`.
    pub lattice: u32,
}

impl ExponentQuery {
    pub fn penalty(&self) -> Penalty {
        Penalty {
            mode: self.mode,
            rate: self.rate,
            threshold: self.threshold,
            alpha: self.alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_lattice(&self.channel, self.u_size, self.lattice)?;
        self.penalty().validate()
    }
}

fn validate_lattice(channel: &Channel, u_size: usize, lattice: u32) -> Result<()> {
    if lattice < 2 {
        return Err(Error::InvalidParameter(format!(
            "lattice denominator must be >= 2, got {lattice}"
        )));
    }
    let default_u = channel.x_size() * channel.s_size() + 1;
    if u_size == 0 || u_size > default_u {
        return Err(Error::InvalidParameter(format!(
            "|U| must lie in 1..={default_u}, got {u_size}"
        )));
    }
    if channel.s_size() * channel.x_size() > MAX_CELLS {
        return Err(Error::InvalidParameter(format!(
            "|S||X| = {} exceeds the supported {MAX_CELLS} cells",
            channel.s_size() * channel.x_size()
        )));
    }
    let rows = types::num_types(lattice, u_size * channel.x_size());
    let combos = rows.checked_pow(channel.s_size() as u32).unwrap_or(u128::MAX);
    if combos > MAX_COMBINATIONS {
        return Err(Error::InvalidParameter(format!(
            "lattice d = {lattice} gives {combos} auxiliary kernels per state law; reduce d or |U|"
        )));
    }
    Ok(())
}

/// An optimized exponent and the lattice point attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    /// In bits; `+inf` is possible, negative only for list-mode `E_2`.
    pub value: f64,
    pub lattice: u32,
    pub witness: JointSystem,
    /// Active inner minimum; `None` for `E_2`.
    pub branch: Option<Branch>,
}

/// `E_1` and `E_2` of the same query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub e1: ExponentResult,
    pub e2: ExponentResult,
}

/// The objective being re-evaluated by [`objective_at`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    E1(Branch),
    E2,
}

/// Evaluates one objective at a given joint system, from its definition.
/// The constrained branch is `+inf` where `J > T`.
pub fn objective_at(channel: &Channel, sys: &JointSystem, penalty: &Penalty, objective: Objective) -> Result<f64> {
    let reference = JointSystem::new(
        channel.p_s().clone(),
        sys.p_ux_given_s.clone(),
        channel.w().clone(),
        sys.u_size,
        sys.x_size,
    )?;
    let d_full = kl_of(&sys.joint(), &reference.joint());
    let j = j_functional(sys);
    Ok(match objective {
        Objective::E1(Branch::Constrained) => {
            if penalty.constraint_holds(j) {
                d_full
            } else {
                f64::INFINITY
            }
        }
        Objective::E1(Branch::Penalized) => {
            let (ns, nx, nu) = (sys.s_size(), sys.x_size, sys.u_size);
            let mut weights = vec![0.0; ns * nx];
            for s in 0..ns {
                let row = sys.p_ux_given_s.row(s).probs();
                for x in 0..nx {
                    let px: f64 = (0..nu).map(|u| row[u * nx + x]).sum();
                    weights[s * nx + x] = sys.p_s.probs()[s] * px;
                }
            }
            let weights = Distribution::renormalized(weights, 1e-9)?.0;
            let d_cond = conditional_kl(&sys.p_y_given_xs, channel.w(), &weights)?;
            penalty.e1_penalized(d_full, d_cond, j)
        }
        Objective::E2 => penalty.e2(d_full, j),
    })
}

/// Result of the inner minimizations at a fixed `(P~_S, P~_{UX|S})`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerMinima {
    pub e1: f64,
    pub e1_branch: Branch,
    pub e2: f64,
}

/// Precomputed lattice for one channel, auxiliary size and denominator.
/// Reusable across penalties (rate, threshold, alpha, mode).
#[derive(Debug, Clone)]
pub struct Evaluator {
    channel: Channel,
    u_size: usize,
    d: u32,
    exec: Execution,
    reduce_symmetry: bool,
    ps_points: Vec<Vec<u32>>,
    ux_rows: Vec<Vec<u32>>,
    ux_probs: Vec<Vec<f64>>,
    y_probs: Vec<Vec<f64>>,
    /// `D(row || W(.|cell))` per `(s, x)` cell and `Y` lattice row.
    cell_kl: Vec<Vec<f64>>,
    /// Finite-divergence rows per cell, sorted by divergence then index.
    cell_order: Vec<Vec<u32>>,
    cell_min_kl: Vec<f64>,
}

impl Evaluator {
    pub fn new(channel: &Channel, u_size: usize, lattice: u32) -> Result<Self> {
        validate_lattice(channel, u_size, lattice)?;
        let (ns, nx, ny) = (channel.s_size(), channel.x_size(), channel.y_size());
        let d = f64::from(lattice);
        let to_probs = |rows: &[Vec<u32>]| -> Vec<Vec<f64>> {
            rows.iter()
                .map(|r| r.iter().map(|&c| f64::from(c) / d).collect())
                .collect()
        };
        let ps_points = types::type_lattice(lattice, ns);
        let ux_rows = types::type_lattice(lattice, u_size * nx);
        let y_rows = types::type_lattice(lattice, ny);
        let ux_probs = to_probs(&ux_rows);
        let y_probs = to_probs(&y_rows);
        let mut cell_kl = Vec::with_capacity(ns * nx);
        let mut cell_order = Vec::with_capacity(ns * nx);
        let mut cell_min_kl = Vec::with_capacity(ns * nx);
        for cell in 0..ns * nx {
            let w = channel.w().row(cell).probs();
            let kls: Vec<f64> = y_probs.iter().map(|row| kl_of(row, w)).collect();
            let mut order: Vec<u32> = (0..kls.len() as u32).filter(|&r| kls[r as usize].is_finite()).collect();
            order.sort_by(|&a, &b| {
                kls[a as usize]
                    .partial_cmp(&kls[b as usize])
                    .unwrap_or(Ordering::Equal)
                    .then(a.cmp(&b))
            });
            cell_min_kl.push(order.first().map_or(f64::INFINITY, |&r| kls[r as usize]));
            cell_order.push(order);
            cell_kl.push(kls);
        }
        Ok(Evaluator {
            channel: channel.clone(),
            u_size,
            d: lattice,
            exec: Execution::default(),
            reduce_symmetry: true,
            ps_points,
            ux_rows,
            ux_probs,
            y_probs,
            cell_kl,
            cell_order,
            cell_min_kl,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    /// Enables or disables skipping auxiliary kernels that are relabelings
    /// of an earlier one. Disabling it only costs time.
    pub fn with_symmetry_reduction(mut self, on: bool) -> Self {
        self.reduce_symmetry = on;
        self
    }

    pub fn lattice(&self) -> u32 {
        self.d
    }

    pub fn u_size(&self) -> usize {
        self.u_size
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    /// Computes `E_1` and `E_2` for one penalty.
    pub fn evaluate(&self, penalty: &Penalty) -> Result<ExponentPair> {
        penalty.validate()?;
        let ns = self.channel.s_size();
        let nd = f64::from(self.d);
        let p_s = self.channel.p_s().probs();

        // Visit state laws closest to P_S first so the running minimum
        // tightens early; ties are resolved by lattice index below.
        let mut order: Vec<(f64, usize)> = self
            .ps_points
            .iter()
            .enumerate()
            .map(|(i, pt)| {
                let probs: Vec<f64> = pt.iter().map(|&c| f64::from(c) / nd).collect();
                (kl_of(&probs, p_s), i)
            })
            .filter(|(d, _)| d.is_finite())
            .collect();
        order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1)));

        let mut best: [Option<OuterBest>; 2] = [None, None];
        for &(d_s, ps_index) in &order {
            let bounds = [
                best[0].as_ref().map_or(f64::INFINITY, |b| b.value),
                best[1].as_ref().map_or(f64::INFINITY, |b| b.value),
            ];
            let maxima = self.maximize(penalty, ps_index, d_s, bounds);
            for k in 0..2 {
                let Some(cand) = &maxima[k] else { continue };
                let replace = match &best[k] {
                    None => true,
                    Some(cur) => cand.value < cur.value || (cand.value == cur.value && ps_index < cur.ps_index),
                };
                if replace {
                    best[k] = Some(OuterBest {
                        value: cand.value,
                        ps_index,
                        ux: cand.ux.clone(),
                        y: cand.y.clone(),
                        branch: cand.branch,
                    });
                }
            }
        }
        let [Some(b1), Some(b2)] = best else {
            return Err(Error::InvalidParameter(
                "no state law on the lattice has finite divergence from P_S".into(),
            ));
        };
        debug_assert_eq!(b1.ux.len(), ns);
        Ok(ExponentPair {
            e1: self.result(&b1, Some(b1.branch))?,
            e2: self.result(&b2, None)?,
        })
    }

    fn result(&self, best: &OuterBest, branch: Option<Branch>) -> Result<ExponentResult> {
        Ok(ExponentResult {
            value: best.value,
            lattice: self.d,
            witness: self.witness(best.ps_index, &best.ux, &best.y)?,
            branch,
        })
    }

    fn witness(&self, ps_index: usize, ux: &[u32], y: &[u32]) -> Result<JointSystem> {
        let nd = f64::from(self.d);
        let p_s = Distribution::new(self.ps_points[ps_index].iter().map(|&c| f64::from(c) / nd).collect())?;
        let p_ux = ConditionalDistribution::from_rows(ux.iter().map(|&r| self.ux_probs[r as usize].clone()).collect())?;
        let p_y = ConditionalDistribution::from_rows(y.iter().map(|&r| self.y_probs[r as usize].clone()).collect())?;
        JointSystem::new(p_s, p_ux, p_y, self.u_size, self.channel.x_size())
    }

    /// The max over auxiliary kernels at one state law, for both
    /// objectives. `bounds` are the current outer minima: once an
    /// objective's running maximum exceeds its bound (plus margin) this
    /// state law cannot be the minimizer and the objective is abandoned.
    fn maximize(&self, penalty: &Penalty, ps_index: usize, d_s: f64, bounds: [f64; 2]) -> [Option<MaxCandidate>; 2] {
        let ns = self.channel.s_size();
        let nd = f64::from(self.d);
        let ps_counts = &self.ps_points[ps_index];
        let ps: Vec<f64> = ps_counts.iter().map(|&c| f64::from(c) / nd).collect();
        let relevant: Vec<usize> = (0..ns).filter(|&s| ps_counts[s] > 0).collect();
        let n_rows = self.ux_rows.len() as u64;
        let total = n_rows.pow(relevant.len() as u32);
        let running = [AtomicF64::new(f64::NEG_INFINITY), AtomicF64::new(f64::NEG_INFINITY)];

        let reduced = map_reduce(
            self.exec,
            total,
            || [None, None],
            |index| {
                let mut rows = vec![0u32; ns];
                let mut rest = index;
                for &s in relevant.iter().rev() {
                    rows[s] = (rest % n_rows) as u32;
                    rest /= n_rows;
                }
                if self.reduce_symmetry && !self.is_canonical(&rows, &relevant) {
                    return [None, None];
                }
                let ux: Vec<&[f64]> = rows.iter().map(|&r| self.ux_probs[r as usize].as_slice()).collect();
                let gate = Gate {
                    running: &running,
                    bounds,
                };
                let inner = self.inner(penalty, &ps, &ux, d_s, Some(&gate));
                let mut out: [Option<MaxCandidate>; 2] = [None, None];
                for k in 0..2 {
                    if let Some(found) = &inner[k] {
                        running[k].fetch_max(found.value);
                        out[k] = Some(MaxCandidate {
                            value: found.value,
                            index,
                            ux: rows.clone(),
                            y: found.y.clone(),
                            branch: found.branch,
                        });
                    }
                }
                out
            },
            |a, b| {
                let [a0, a1] = a;
                let [b0, b1] = b;
                [pick_max(a0, b0), pick_max(a1, b1)]
            },
        );
        let mut out = reduced;
        for k in 0..2 {
            if running[k].load() > bounds[k] + PRUNE_MARGIN {
                out[k] = None;
            }
        }
        out
    }

    /// Whether `rows` is the lexicographically smallest relabeling of `U`.
    /// Rows of states with zero probability are ignored; they are always
    /// the first lattice row.
    fn is_canonical(&self, rows: &[u32], relevant: &[usize]) -> bool {
        let nx = self.channel.x_size();
        let block = |u: usize, s: usize| {
            let r = &self.ux_rows[rows[s] as usize];
            &r[u * nx..(u + 1) * nx]
        };
        (1..self.u_size).all(|u| {
            for &s in relevant {
                match block(u - 1, s).cmp(block(u, s)) {
                    Ordering::Less => return true,
                    Ordering::Greater => return false,
                    Ordering::Equal => {}
                }
            }
            true
        })
    }

    /// Inner minima at a fixed state law and auxiliary kernel, given as
    /// arbitrary distributions (they need not lie on this lattice). The
    /// minimization over `P~_{Y|XS}` uses this evaluator's lattice.
    pub fn inner_minima(
        &self,
        penalty: &Penalty,
        p_s: &Distribution,
        p_ux_given_s: &ConditionalDistribution,
    ) -> Result<InnerMinima> {
        penalty.validate()?;
        let (ns, nx) = (self.channel.s_size(), self.channel.x_size());
        if p_s.len() != ns || p_ux_given_s.num_rows() != ns || p_ux_given_s.num_cols() != self.u_size * nx {
            return Err(Error::ShapeMismatch(
                "state law or auxiliary kernel does not match the channel".into(),
            ));
        }
        let d_s = kl_of(p_s.probs(), self.channel.p_s().probs());
        if !d_s.is_finite() {
            return Ok(InnerMinima {
                e1: f64::INFINITY,
                e1_branch: Branch::Penalized,
                e2: f64::INFINITY,
            });
        }
        let ux: Vec<&[f64]> = p_ux_given_s.rows().iter().map(|r| r.probs()).collect();
        let [e1, e2] = self.inner(penalty, p_s.probs(), &ux, d_s, None);
        let e1 = e1.expect("no gate, so the search completes");
        let e2 = e2.expect("no gate, so the search completes");
        Ok(InnerMinima {
            e1: e1.value,
            e1_branch: e1.branch,
            e2: e2.value,
        })
    }

    /// Runs the minimization over output kernels. Returns `None` for an
    /// objective abandoned by the gate.
    fn inner(
        &self,
        penalty: &Penalty,
        ps: &[f64],
        ux: &[&[f64]],
        d_s: f64,
        gate: Option<&Gate<'_>>,
    ) -> [Option<InnerBest>; 2] {
        let (ns, nu, nx, ny) = (
            self.channel.s_size(),
            self.u_size,
            self.channel.x_size(),
            self.channel.y_size(),
        );
        let mut us_joint = vec![0.0; nu * ns];
        let mut cells = Vec::new();
        let mut qu = vec![0.0; nu];
        for s in 0..ns {
            if ps[s] <= 0.0 {
                continue;
            }
            for u in 0..nu {
                us_joint[u * ns + s] = ps[s] * ux[s][u * nx..(u + 1) * nx].iter().sum::<f64>();
            }
            for x in 0..nx {
                let a: Vec<f64> = (0..nu).map(|u| ps[s] * ux[s][u * nx + x]).collect();
                let weight = ps[s] * (0..nu).map(|u| ux[s][u * nx + x]).sum::<f64>();
                if weight > 0.0 {
                    for u in 0..nu {
                        qu[u] += a[u];
                    }
                    cells.push(Cell {
                        index: s * nx + x,
                        weight,
                        a,
                    });
                }
            }
        }
        let i_us = mutual_information_of(&us_joint, nu, ns);
        // Lower bound on the divergence still to come after depth i.
        let mut remaining = vec![0.0; cells.len() + 1];
        for i in (0..cells.len()).rev() {
            remaining[i] = remaining[i + 1] + cells[i].weight * self.cell_min_kl[cells[i].index];
        }

        let mut search = InnerSearch {
            ev: self,
            penalty,
            cells: &cells,
            remaining: &remaining,
            qu: &qu,
            i_us,
            d_s,
            nu,
            ny,
            gate,
            path: vec![0; cells.len()],
            acc: vec![0.0; (cells.len() + 1) * nu * ny],
            best: [InnerBest::empty(cells.len()), InnerBest::empty(cells.len())],
            alive: [true, true],
        };
        search.descend(0, 0.0);

        let mut out = [None, None];
        #[allow(clippy::needless_range_loop)]
        for k in 0..2 {
            if search.alive[k] && search.best[k].value < f64::INFINITY {
                // Expand relevant-cell choices to the full (s, x) grid; cells
                // without weight take the first lattice row.
                let mut y = vec![0u32; ns * nx];
                for (cell, &r) in cells.iter().zip(&search.best[k].y) {
                    y[cell.index] = r;
                }
                out[k] = Some(InnerBest {
                    value: search.best[k].value,
                    y,
                    branch: search.best[k].branch,
                });
            }
        }
        out
    }
}

struct Cell {
    index: usize,
    weight: f64,
    /// `P~_S(s) P~(u, x | s)` for this cell's `(s, x)`, over `u`.
    a: Vec<f64>,
}

#[derive(Debug, Clone)]
struct InnerBest {
    value: f64,
    y: Vec<u32>,
    branch: Branch,
}

impl InnerBest {
    fn empty(len: usize) -> Self {
        InnerBest {
            value: f64::INFINITY,
            y: vec![u32::MAX; len],
            branch: Branch::Penalized,
        }
    }
}

/// Shared state of the max layer: running maxima and the outer bounds.
struct Gate<'a> {
    running: &'a [AtomicF64; 2],
    bounds: [f64; 2],
}

impl Gate<'_> {
    /// Whether objective `k` with current inner value `value` can still
    /// affect the outcome of the max layer.
    // Negated comparisons keep NaN values alive.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn still_needed(&self, k: usize, value: f64) -> bool {
        let running = self.running[k].load();
        if running > self.bounds[k] + PRUNE_MARGIN {
            return false;
        }
        !(value < running - PRUNE_MARGIN)
    }
}

struct InnerSearch<'a> {
    ev: &'a Evaluator,
    penalty: &'a Penalty,
    cells: &'a [Cell],
    remaining: &'a [f64],
    qu: &'a [f64],
    i_us: f64,
    d_s: f64,
    nu: usize,
    ny: usize,
    gate: Option<&'a Gate<'a>>,
    path: Vec<u32>,
    /// One `|U| x |Y|` accumulator per depth.
    acc: Vec<f64>,
    best: [InnerBest; 2],
    alive: [bool; 2],
}

impl InnerSearch<'_> {
    fn refresh_alive(&mut self) -> bool {
        if let Some(gate) = self.gate {
            for k in 0..2 {
                if self.alive[k] && !gate.still_needed(k, self.best[k].value) {
                    self.alive[k] = false;
                }
            }
        }
        self.alive[0] || self.alive[1]
    }

    /// Whether a subtree whose divergences are bounded below by
    /// `(d_full, d_cond)` can still improve an alive objective.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    fn promising(&self, d_full: f64, d_cond: f64) -> bool {
        let lb = self.penalty.lower_bounds(d_full, d_cond);
        (0..2).any(|k| self.alive[k] && !(lb[k] > self.best[k].value + PRUNE_MARGIN))
    }

    fn descend(&mut self, depth: usize, d_cond: f64) {
        let block = self.nu * self.ny;
        if depth == self.cells.len() {
            self.leaf(d_cond);
            return;
        }
        let cell = &self.cells[depth];
        let order = &self.ev.cell_order[cell.index];
        let kls = &self.ev.cell_kl[cell.index];
        for &r in order {
            if !self.refresh_alive() {
                return;
            }
            let next_cond = d_cond + cell.weight * kls[r as usize];
            let bound_cond = next_cond + self.remaining[depth + 1];
            if !self.promising(self.d_s + bound_cond, bound_cond) {
                // Rows are sorted by divergence, so later rows are no better.
                break;
            }
            let row = &self.ev.y_probs[r as usize];
            let (head, tail) = self.acc.split_at_mut((depth + 1) * block);
            let prev = &head[depth * block..];
            let next = &mut tail[..block];
            for u in 0..self.nu {
                let a = cell.a[u];
                for y in 0..self.ny {
                    next[u * self.ny + y] = prev[u * self.ny + y] + a * row[y];
                }
            }
            self.path[depth] = r;
            self.descend(depth + 1, next_cond);
        }
    }

    fn leaf(&mut self, d_cond: f64) {
        let block = self.nu * self.ny;
        let q = &self.acc[self.cells.len() * block..];
        let mut qy = [0.0f64; 256];
        for u in 0..self.nu {
            for y in 0..self.ny {
                qy[y] += q[u * self.ny + y];
            }
        }
        let mut i_uy = 0.0;
        for u in 0..self.nu {
            for y in 0..self.ny {
                let p = q[u * self.ny + y];
                if p > 0.0 {
                    i_uy += p * (p / (self.qu[u] * qy[y])).log2();
                }
            }
        }
        let j = i_uy.max(0.0) - self.i_us;
        let d_full = self.d_s + d_cond;
        let (e1, branch) = self.penalty.e1(d_full, d_cond, j);
        let e2 = self.penalty.e2(d_full, j);
        for (k, value) in [(0, e1), (1, e2)] {
            if !self.alive[k] {
                continue;
            }
            let best = &mut self.best[k];
            if value < best.value || (value == best.value && self.path < best.y) {
                best.value = value;
                best.y.copy_from_slice(&self.path);
                best.branch = branch;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct MaxCandidate {
    value: f64,
    index: u64,
    ux: Vec<u32>,
    y: Vec<u32>,
    branch: Branch,
}

fn pick_max(a: Option<MaxCandidate>, b: Option<MaxCandidate>) -> Option<MaxCandidate> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            if b.value > a.value || (b.value == a.value && b.index < a.index) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

struct OuterBest {
    value: f64,
    ps_index: usize,
    ux: Vec<u32>,
    y: Vec<u32>,
    branch: Branch,
}

/// An `f64` cell supporting an atomic maximum.
struct AtomicF64(AtomicU64);

impl AtomicF64 {
    fn new(v: f64) -> Self {
        AtomicF64(AtomicU64::new(v.to_bits()))
    }

    fn load(&self) -> f64 {
        f64::from_bits(self.0.load(AtomicOrdering::Relaxed))
    }

    fn fetch_max(&self, v: f64) {
        let mut current = self.0.load(AtomicOrdering::Relaxed);
        while f64::from_bits(current) < v {
            match self
                .0
                .compare_exchange_weak(current, v.to_bits(), AtomicOrdering::Relaxed, AtomicOrdering::Relaxed)
            {
                Ok(_) => break,
                Err(actual) => current = actual,
            }
        }
    }
}

/// `E_1` and `E_2` for one query.
pub fn evaluate(q: &ExponentQuery) -> Result<ExponentPair> {
    q.validate()?;
    Evaluator::new(&q.channel, q.u_size, q.lattice)?.evaluate(&q.penalty())
}

fn require_mode(q: &ExponentQuery, mode: Mode) -> Result<()> {
    if q.mode != mode {
        return Err(Error::Regime(format!(
            "query is in {:?} mode, expected {mode:?}",
            q.mode
        )));
    }
    Ok(())
}

/// `E_1` with an erasure option.
pub fn e1_erasure(q: &ExponentQuery) -> Result<ExponentResult> {
    require_mode(q, Mode::Erasure)?;
    Ok(evaluate(q)?.e1)
}

/// Undetected-error exponent `E_2` with an erasure option.
pub fn e2_erasure(q: &ExponentQuery) -> Result<ExponentResult> {
    require_mode(q, Mode::Erasure)?;
    Ok(evaluate(q)?.e2)
}

/// List-error exponent.
pub fn e1_list(q: &ExponentQuery) -> Result<ExponentResult> {
    require_mode(q, Mode::List)?;
    Ok(evaluate(q)?.e1)
}

/// Exponent of the average number of incorrect messages on the list. May
/// be negative.
pub fn e2_list(q: &ExponentQuery) -> Result<ExponentResult> {
    require_mode(q, Mode::List)?;
    Ok(evaluate(q)?.e2)
}

/// The ordinary-decoding exponent: `E_1` in erasure mode with `T = 0`,
/// `alpha = 1`, where `E_1` and `E_2` coincide.
pub fn ordinary_decoding_exponent(channel: &Channel, u_size: usize, rate: f64, lattice: u32) -> Result<ExponentResult> {
    e1_erasure(&ExponentQuery {
        channel: channel.clone(),
        u_size,
        rate,
        threshold: 0.0,
        alpha: 1.0,
        mode: Mode::Erasure,
        lattice,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Rate,
    Threshold,
    Alpha,
}

/// One grid point of a [`sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub outcome: Result<ExponentPair>,
}

/// Evaluates `E_1` and `E_2` along one parameter axis, sharing the lattice.
/// Invalid points are reported in place and do not stop the sweep.
pub fn sweep(template: &ExponentQuery, axis: SweepAxis, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    sweep_with(template, axis, grid, Execution::default())
}

pub fn sweep_with(template: &ExponentQuery, axis: SweepAxis, grid: &[f64], exec: Execution) -> Result<Vec<SweepPoint>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    let evaluator = Evaluator::new(&template.channel, template.u_size, template.lattice)?.with_execution(exec);
    Ok(grid
        .iter()
        .map(|&v| {
            let mut penalty = template.penalty();
            match axis {
                SweepAxis::Rate => penalty.rate = v,
                SweepAxis::Threshold => penalty.threshold = v,
                SweepAxis::Alpha => penalty.alpha = v,
            }
            SweepPoint {
                axis_value: v,
                outcome: evaluator.evaluate(&penalty),
            }
        })
        .collect())
}
