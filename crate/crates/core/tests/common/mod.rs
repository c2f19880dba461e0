//! Independent reference evaluators shared by the integration tests.
//!
//! These loop over every lattice triple and build the full joint law for
//! each one. They share no search code with the library.

#![allow(dead_code)]

use sideinfo::{Channel, ConditionalDistribution, Distribution, Mode, Penalty};

/// All count vectors of length `k` summing to `d`, in any order.
pub fn compositions(d: u32, k: usize) -> Vec<Vec<f64>> {
    fn rec(left: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(left - c, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, k, &mut Vec::new(), &mut out);
    out.into_iter()
        .map(|v| v.into_iter().map(|c| c as f64 / d as f64).collect())
        .collect()
}

/// Visits every element of the cartesian power `choices^slots`.
fn for_each_tuple(choices: usize, slots: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; slots];
    loop {
        f(&idx);
        let mut i = slots;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < choices {
                break;
            }
            idx[i] = 0;
        }
    }
}

fn plus(t: f64) -> f64 {
    t.max(0.0)
}

/// Values `(E_1, E_2)` for each penalty, by exhaustive min-max-min over
/// the `d`-lattice.
pub fn brute_force(channel: &Channel, u_size: usize, d: u32, penalties: &[Penalty]) -> Vec<(f64, f64)> {
    let (ns, nx, ny, nu) = (channel.s_size(), channel.x_size(), channel.y_size(), u_size);
    let p_s = channel.p_s().probs().to_vec();
    let w: Vec<Vec<f64>> = channel.w().rows().iter().map(|r| r.probs().to_vec()).collect();
    let ps_pts = compositions(d, ns);
    let ux_pts = compositions(d, nu * nx);
    let y_pts = compositions(d, ny);
    let np = penalties.len();

    let mut outer = vec![(f64::INFINITY, f64::INFINITY); np];
    for ps in &ps_pts {
        let mut maxes = vec![(f64::NEG_INFINITY, f64::NEG_INFINITY); np];
        for_each_tuple(ux_pts.len(), ns, |ux_idx| {
            let mut mins = vec![(f64::INFINITY, f64::INFINITY); np];
            for_each_tuple(y_pts.len(), ns * nx, |y_idx| {
                // Full joint over (s, u, x, y) and the reference law.
                let mut d_full = 0.0;
                let mut d_cond = 0.0;
                let mut puy = vec![0.0; nu * ny];
                let mut pus = vec![0.0; nu * ns];
                for s in 0..ns {
                    for u in 0..nu {
                        for x in 0..nx {
                            let pux = ux_pts[ux_idx[s]][u * nx + x];
                            let yrow = &y_pts[y_idx[s * nx + x]];
                            for y in 0..ny {
                                let p = ps[s] * pux * yrow[y];
                                let q = p_s[s] * pux * w[s * nx + x][y];
                                if p > 0.0 {
                                    d_full += if q > 0.0 { p * (p / q).log2() } else { f64::INFINITY };
                                    d_cond += if w[s * nx + x][y] > 0.0 {
                                        p * (yrow[y] / w[s * nx + x][y]).log2()
                                    } else {
                                        f64::INFINITY
                                    };
                                }
                                puy[u * ny + y] += p;
                                pus[u * ns + s] += p;
                            }
                        }
                    }
                }
                let mi = |joint: &[f64], na: usize, nb: usize| {
                    let pa: Vec<f64> = (0..na).map(|a| (0..nb).map(|b| joint[a * nb + b]).sum()).collect();
                    let pb: Vec<f64> = (0..nb).map(|b| (0..na).map(|a| joint[a * nb + b]).sum()).collect();
                    let mut i = 0.0;
                    for a in 0..na {
                        for b in 0..nb {
                            let p = joint[a * nb + b];
                            if p > 0.0 {
                                i += p * (p / (pa[a] * pb[b])).log2();
                            }
                        }
                    }
                    i.max(0.0)
                };
                let j = mi(&puy, nu, ny) - mi(&pus, nu, ns);
                for (k, pen) in penalties.iter().enumerate() {
                    let (t, a, r) = (pen.threshold, pen.alpha, pen.rate);
                    let b1 = if j <= t + 1e-12 { d_full } else { f64::INFINITY };
                    let base = match pen.mode {
                        Mode::Erasure => d_full,
                        Mode::List => d_cond,
                    };
                    let b2 = base + plus((j - t) / a - r);
                    let e2 = match pen.mode {
                        Mode::Erasure => d_full + plus(t + a * plus(j) - r),
                        Mode::List => d_full + plus(t + a * plus(j)) - r,
                    };
                    mins[k].0 = mins[k].0.min(b1.min(b2));
                    mins[k].1 = mins[k].1.min(e2);
                }
            });
            for k in 0..np {
                maxes[k].0 = maxes[k].0.max(mins[k].0);
                maxes[k].1 = maxes[k].1.max(mins[k].1);
            }
        });
        for k in 0..np {
            outer[k].0 = outer[k].0.min(maxes[k].0);
            outer[k].1 = outer[k].1.min(maxes[k].1);
        }
    }
    outer
}

/// `(E_1, E_2)` for a channel without state, `W(y|x)`, as
/// `max_{P_UX} min_{P_Y|X}` over the `d`-lattice. No state axis is built.
pub fn dmc_evaluator(w: &[Vec<f64>], u_size: usize, d: u32, pen: &Penalty) -> (f64, f64) {
    let (nx, ny, nu) = (w.len(), w[0].len(), u_size);
    let ux_pts = compositions(d, nu * nx);
    let y_pts = compositions(d, ny);
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for pux in &ux_pts {
        let px: Vec<f64> = (0..nx).map(|x| (0..nu).map(|u| pux[u * nx + x]).sum()).collect();
        let pu: Vec<f64> = (0..nu).map(|u| (0..nx).map(|x| pux[u * nx + x]).sum()).collect();
        let mut mins = (f64::INFINITY, f64::INFINITY);
        for_each_tuple(y_pts.len(), nx, |y_idx| {
            let mut div = 0.0;
            for x in 0..nx {
                if px[x] == 0.0 {
                    continue;
                }
                for y in 0..ny {
                    let p = y_pts[y_idx[x]][y];
                    if p > 0.0 {
                        div += px[x]
                            * if w[x][y] > 0.0 {
                                p * (p / w[x][y]).log2()
                            } else {
                                f64::INFINITY
                            };
                    }
                }
            }
            let mut i_uy = 0.0;
            let py: Vec<f64> = (0..ny)
                .map(|y| (0..nx).map(|x| px[x] * y_pts[y_idx[x]][y]).sum())
                .collect();
            for u in 0..nu {
                for y in 0..ny {
                    let p: f64 = (0..nx).map(|x| pux[u * nx + x] * y_pts[y_idx[x]][y]).sum();
                    if p > 0.0 {
                        i_uy += p * (p / (pu[u] * py[y])).log2();
                    }
                }
            }
            let j = i_uy.max(0.0);
            let (t, a, r) = (pen.threshold, pen.alpha, pen.rate);
            let b1 = if j <= t + 1e-12 { div } else { f64::INFINITY };
            // Without a state the conditional and full divergences coincide.
            let b2 = div + plus((j - t) / a - r);
            let e2 = match pen.mode {
                Mode::Erasure => div + plus(t + a * j - r),
                Mode::List => div + plus(t + a * j) - r,
            };
            mins.0 = mins.0.min(b1.min(b2));
            mins.1 = mins.1.min(e2);
        });
        best.0 = best.0.max(mins.0);
        best.1 = best.1.max(mins.1);
    }
    best
}

/// A channel from `p_s` and rows of `W` indexed `s * |X| + x`.
pub fn channel(p_s: Vec<f64>, w: Vec<Vec<f64>>, x_size: usize) -> Channel {
    Channel::new(
        Distribution::new(p_s).unwrap(),
        ConditionalDistribution::from_rows(w).unwrap(),
        x_size,
    )
    .unwrap()
}

/// The fixed binary instance used by the oracle comparisons.
pub fn binary_instance() -> Channel {
    channel(
        vec![0.3, 0.7],
        vec![vec![0.85, 0.15], vec![0.1, 0.9], vec![0.6, 0.4], vec![0.35, 0.65]],
        2,
    )
}

/// A random channel with every entry bounded away from zero.
pub fn random_channel(rng: &mut impl rand::Rng, ns: usize, nx: usize, ny: usize) -> Channel {
    let mut draw = |k: usize| -> Vec<f64> {
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let t: f64 = v.iter().sum();
        let mut v: Vec<f64> = v.iter().map(|x| x / t).collect();
        let head: f64 = v[..k - 1].iter().sum();
        v[k - 1] = 1.0 - head;
        v
    };
    let p_s = draw(ns);
    let w = (0..ns * nx).map(|_| draw(ny)).collect();
    channel(p_s, w, nx)
}
