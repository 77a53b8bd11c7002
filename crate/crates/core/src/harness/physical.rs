//! Physical-space norms of sparse space-time fields, evaluated from the mode
//! list instead of a time grid.
//!
//! A shell-N field oscillates in time at frequencies up to ~N^3, far beyond
//! any affordable time grid. Even L^p norms (p = 2, 4, 6) are computed exactly
//! from the spectrum of u^{p/2}; other exponents and the L^2_y mixed norms are
//! estimated by seeded Monte Carlo with the y-integral done by Parseval.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::multilinear::{product_spectrum, MAX_COMBOS};
use crate::error::{Result, ZkError};
use crate::field::{SpaceTimeField, C64};
use crate::norms::{NormSpec, TimeDomain};
use crate::symbols::phase_g;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseOptions {
    /// Monte Carlo points (t, x, y) or (t, x).
    pub samples: usize,
    /// Time samples for sup_x norms.
    pub time_samples: usize,
    pub seed: u64,
}

impl Default for SparseOptions {
    fn default() -> Self {
        Self { samples: 1 << 16, time_samples: 1024, seed: 0x5eed }
    }
}

/// u(t, x, y) = sum_k a_k e^{i (tau_k t + xi_k x + q_k y)}.
struct Modes {
    lx: f64,
    terms: Vec<(f64, f64, i64, C64)>,
}

impl Modes {
    fn new(u: &SpaceTimeField) -> Self {
        let g = u.grid;
        let kappa = 1.0 / (g.tw * g.lx * 2.0 * PI);
        let terms = u
            .nonzero_modes()
            .into_iter()
            .map(|(s, xi, q, c)| (s + phase_g(&xi, &(q as f64)), xi, q, c * kappa))
            .collect();
        Self { lx: g.lx, terms }
    }

    fn eval(&self, t: f64, x: f64, y: f64) -> C64 {
        self.terms.iter().map(|&(tau, xi, q, a)| a * C64::from_polar(1.0, tau * t + xi * x + q as f64 * y)).sum()
    }

    /// ||u(t, x, .)||_{L^2_y}^2 = 2 pi sum_q |U_q(t, x)|^2.
    fn l2y_sq(&self, t: f64, x: f64) -> f64 {
        let mut by_q: BTreeMap<i64, C64> = BTreeMap::new();
        for &(tau, xi, q, a) in &self.terms {
            *by_q.entry(q).or_default() += a * C64::from_polar(1.0, tau * t + xi * x);
        }
        2.0 * PI * by_q.values().map(|z| z.norm_sqr()).sum::<f64>()
    }
}

fn interval(u: &SpaceTimeField, time: TimeDomain) -> Result<(f64, f64)> {
    match time {
        TimeDomain::Window => Ok((-u.grid.tw / 2.0, u.grid.tw / 2.0)),
        TimeDomain::Restricted(t) if t > 0.0 => Ok((-t, t)),
        TimeDomain::Restricted(_) => Err(ZkError::contract("restriction time must be positive")),
    }
}

/// int_lo^hi e^{i w t} dt
fn exp_integral(w: f64, lo: f64, hi: f64) -> C64 {
    if w.abs() * (hi - lo) < 1e-8 {
        C64::new(hi - lo, 0.0)
    } else {
        (C64::from_polar(1.0, w * hi) - C64::from_polar(1.0, w * lo)) / C64::new(0.0, w)
    }
}

/// Exact ||u||_{L^p} for p in {2, 4, 6} over time domain x box.
pub fn lp_even_exact(u: &SpaceTimeField, p: u32, time: TimeDomain) -> Result<f64> {
    if !matches!(p, 2 | 4 | 6) {
        return Err(ZkError::contract(format!("exact path needs p in {{2, 4, 6}}, got {p}")));
    }
    let (lo, hi) = interval(u, time)?;
    let g = u.grid;
    let copies = vec![u.clone(); (p / 2) as usize];
    let w = product_spectrum(&copies)?;
    let kappa = 1.0 / (g.tw * g.lx * 2.0 * PI);
    let mut groups: BTreeMap<(i64, i64), Vec<(f64, C64)>> = BTreeMap::new();
    for &(xi, q, m, c) in &w.modes {
        groups.entry(((xi / w.dxi).round() as i64, q)).or_default().push((m + phase_g(&xi, &(q as f64)), c));
    }
    let total: f64 = groups
        .par_iter()
        .map(|(_, v)| {
            let mut acc = C64::new(0.0, 0.0);
            for &(ta, ca) in v {
                for &(tb, cb) in v {
                    acc += ca * cb.conj() * exp_integral(ta - tb, lo, hi);
                }
            }
            acc.re
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let integral = kappa * kappa * g.lx * 2.0 * PI * total.max(0.0);
    Ok(integral.powf(1.0 / p as f64))
}

/// Deterministic parallel Monte Carlo mean of f over `n` uniform points of a box.
fn mc_mean(n: usize, seed: u64, lo: [f64; 3], hi: [f64; 3], f: impl Fn([f64; 3]) -> f64 + Sync) -> f64 {
    const CHUNK: usize = 4096;
    let chunks = n.div_ceil(CHUNK);
    let sums: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len)
                .map(|_| {
                    let mut p = [0.0; 3];
                    for i in 0..3 {
                        p[i] = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
                    }
                    f(p)
                })
                .sum()
        })
        .collect();
    sums.iter().sum::<f64>() / n as f64
}

/// Physical norm of a sparse field. `Lp` with p in {2, 4, 6} is exact when the
/// mode count allows; the rest is Monte Carlo.
pub fn sparse_norm(u: &SpaceTimeField, spec: &NormSpec, opt: &SparseOptions) -> Result<f64> {
    let modes = Modes::new(u);
    if modes.terms.is_empty() {
        return Ok(0.0);
    }
    match *spec {
        NormSpec::Lp { p, time } => {
            let pe = p.round();
            let combos = modes.terms.len().checked_pow((pe / 2.0) as u32).unwrap_or(usize::MAX);
            if (p - pe).abs() < 1e-12 && matches!(pe as u32, 2 | 4 | 6) && combos <= MAX_COMBOS {
                return lp_even_exact(u, pe as u32, time);
            }
            let (lo, hi) = interval(u, time)?;
            let vol = (hi - lo) * modes.lx * 2.0 * PI;
            let mean = mc_mean(opt.samples, opt.seed, [lo, 0.0, 0.0], [hi, modes.lx, 2.0 * PI], |[t, x, y]| {
                modes.eval(t, x, y).norm().powf(p)
            });
            Ok((vol * mean).powf(1.0 / p))
        }
        NormSpec::Mixed { pt, px, py: 2.0, time } => {
            let (lo, hi) = interval(u, time)?;
            if px.is_infinite() {
                let xmax = modes.terms.iter().map(|t| t.1.abs()).fold(0.0, f64::max);
                // 16 points per shortest period
                let nx = ((16.0 * xmax * modes.lx / (2.0 * PI)).ceil() as usize).max(64);
                let n = opt.time_samples.max(1);
                let ht = (hi - lo) / n as f64;
                let sup: Vec<f64> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let t = lo + (i as f64 + 0.5) * ht;
                        (0..nx)
                            .map(|j| modes.l2y_sq(t, j as f64 * modes.lx / nx as f64).sqrt())
                            .fold(0.0, f64::max)
                    })
                    .collect();
                Ok((sup.iter().map(|v| v.powf(pt)).sum::<f64>() * ht).powf(1.0 / pt))
            } else if (pt - px).abs() < 1e-12 {
                let vol = (hi - lo) * modes.lx;
                let mean = mc_mean(opt.samples, opt.seed, [lo, 0.0, 0.0], [hi, modes.lx, 0.0], |[t, x, _]| {
                    modes.l2y_sq(t, x).powf(pt / 2.0)
                });
                Ok((vol * mean).powf(1.0 / pt))
            } else {
                Err(ZkError::contract("sparse mixed norm needs pt = px or px = infinity"))
            }
        }
        _ => Err(ZkError::contract(format!("no sparse evaluation for {}", spec.token()))),
    }
}
