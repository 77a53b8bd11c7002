//! L^pt_t L^px_x L^2_y norms with x on the whole line.
//!
//! In a periodic x-box a single (xi, q) cell never disperses, so estimates
//! that gain I_x powers from dispersion in x cannot hold there. Here every
//! lattice cell is the box |xi' - xi| <= dxi/2, |tau - phi(xi', q) - sigma| <= dsigma/2
//! as in the bilinear cell model, and its inverse transform is a wave packet
//!
//!   W(t, x) = k c e^{i sigma t} S(t) e^{i (xi x + phi t)} E(t, x + v t),
//!   E(t, z) = int_{|eta| <= dxi/2} w(xi + eta) e^{i (eta z + (3 xi eta^2 + eta^3) t)} d eta,
//!
//! with v = 3 xi^2 + q^2 and S the transform of the sigma box. E is smooth on
//! the scale 1/dxi, so it is tabulated by one FFT per cell and time and
//! interpolated. The y integral is Parseval over q.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::cells::gauss_legendre;
use crate::error::{Result, ZkError};
use crate::field::{SpaceTimeField, C64};
use crate::norms::{weights_symbol, MultiplierWeight, TimeDomain};
use crate::symbols::phase_g;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersiveOptions {
    /// Envelope samples per 2 pi / dxi.
    pub oversample: usize,
    /// Gauss-Legendre nodes per time panel.
    pub nodes: usize,
    /// Packet widths 2 pi / dxi kept on each side of the dispersed core.
    pub tail: f64,
    /// Longest time panel.
    pub max_panel: f64,
}

impl Default for DispersiveOptions {
    fn default() -> Self {
        Self { oversample: 16, nodes: 6, tail: 24.0, max_panel: 0.5 }
    }
}

struct Packet {
    xi: f64,
    q: i64,
    v: f64,
    /// k c e^{i (sigma + phi) t} S(t)
    pref: C64,
    env: Vec<C64>,
    /// |pref E|^2
    env2: Vec<f64>,
    h: f64,
}

impl Packet {
    fn half_width(&self) -> f64 {
        self.h * (self.env.len() / 2) as f64
    }

    /// Catmull-Rom interpolation of E at z.
    fn env_at(&self, z: f64) -> C64 {
        let n = self.env.len();
        let r = z / self.h + (n / 2) as f64;
        let i = r.floor() as isize;
        let f = r - i as f64;
        if i < 1 || i as usize + 2 >= n {
            return C64::new(0.0, 0.0);
        }
        let i = i as usize;
        let (p0, p1, p2, p3) = (self.env[i - 1], self.env[i], self.env[i + 1], self.env[i + 2]);
        let f2 = f * f;
        let f3 = f2 * f;
        p1 * (1.0 - 2.5 * f2 + 1.5 * f3) + (p0 * (-0.5 * f + f2 - 0.5 * f3)) + p2 * (0.5 * f + 2.0 * f2 - 1.5 * f3) + p3 * (-0.5 * f2 + 0.5 * f3)
    }

    /// Index range of table points with z in [lo, hi).
    fn table_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let n = self.env.len() as f64;
        let i0 = ((lo / self.h + n / 2.0).ceil().max(0.0) as usize).min(self.env.len());
        let i1 = ((hi / self.h + n / 2.0).ceil().max(0.0) as usize).min(self.env.len());
        i0..i1.max(i0)
    }

    /// Linear interpolation of |pref E|^2 at z.
    fn env2_at(&self, z: f64) -> f64 {
        let n = self.env2.len();
        let r = z / self.h + (n / 2) as f64;
        let i = r.floor();
        if i < 0.0 || i as usize + 1 >= n {
            return 0.0;
        }
        let f = r - i;
        let i = i as usize;
        self.env2[i] * (1.0 - f) + self.env2[i + 1] * f
    }

    fn eval(&self, t: f64, x: f64) -> C64 {
        self.pref * C64::from_polar(1.0, self.xi * x) * self.env_at(x + self.v * t)
    }
}

struct Planner {
    cache: std::sync::Mutex<BTreeMap<usize, Arc<dyn Fft<f64>>>>,
}

impl Planner {
    fn get(&self, n: usize) -> Arc<dyn Fft<f64>> {
        let mut c = self.cache.lock().expect("planner lock");
        c.entry(n).or_insert_with(|| FftPlanner::new().plan_fft_inverse(n)).clone()
    }
}

/// All cells of one (xi, q) column; they share the envelope.
struct Cell {
    /// (sigma, c)
    amps: Vec<(f64, C64)>,
    xi: f64,
    q: i64,
    /// multiplier at dense eta nodes is evaluated on the fly
    ws: Vec<MultiplierWeight>,
}

fn envelope(cell: &Cell, t: f64, dxi: f64, opt: &DispersiveOptions, plans: &Planner) -> Result<(Vec<C64>, f64)> {
    // spread of the dispersed core in z, plus tails
    let core = (3.0 * cell.xi.abs() * dxi + 0.75 * dxi * dxi) * t.abs();
    let m_min = dxi * (2.0 * core) / PI + 2.0 * opt.tail;
    let m = (m_min.ceil() as usize).next_power_of_two().max(64);
    let p = opt.oversample.next_power_of_two();
    let total = m * p;
    let d_eta = dxi / m as f64;
    let mut buf = vec![C64::new(0.0, 0.0); total];
    for (i, z) in buf.iter_mut().take(m).enumerate() {
        let eta = -dxi / 2.0 + (i as f64 + 0.5) * d_eta;
        let w = weights_symbol(&cell.ws, cell.xi + eta, cell.q).ok_or(ZkError::SingularWeight { order: 0.0 })?;
        *z = C64::from_polar(w * d_eta, (3.0 * cell.xi * eta * eta + eta * eta * eta) * t);
    }
    plans.get(total).process(&mut buf);
    let h = 2.0 * PI / (total as f64 * d_eta);
    let eta0 = -dxi / 2.0 + 0.5 * d_eta;
    // reorder to k = -total/2 .. total/2 - 1
    let env = (0..total)
        .map(|j| {
            let k = j as isize - (total / 2) as isize;
            let z = buf[k.rem_euclid(total as isize) as usize];
            z * C64::from_polar(1.0, eta0 * k as f64 * h)
        })
        .collect();
    Ok((env, h))
}

fn sigma_box(t: f64, ds: f64) -> f64 {
    if (t * ds).abs() < 1e-8 {
        ds
    } else {
        2.0 * (t * ds / 2.0).sin() / t
    }
}

/// (int_x G^{px/2} dx) or sup_x G^{1/2} at time t, G = ||u(t, x, .)||^2_{L^2_y}.
#[allow(clippy::too_many_arguments)]
fn slice(cells: &[Cell], t: f64, dxi: f64, dsigma: f64, kappa: f64, px: f64, opt: &DispersiveOptions, plans: &Planner) -> Result<f64> {
    let mut packets = Vec::with_capacity(cells.len());
    for c in cells {
        let (env, h) = envelope(c, t, dxi, opt, plans)?;
        let phi = phase_g(&c.xi, &(c.q as f64));
        let sum: C64 = c.amps.iter().map(|&(s, a)| a * C64::from_polar(1.0, s * t)).sum();
        let pref = sum * kappa * sigma_box(t, dsigma) * C64::from_polar(1.0, phi * t);
        let env2 = env.iter().map(|e| (pref * e).norm_sqr()).collect();
        packets.push(Packet { xi: c.xi, q: c.q, v: 3.0 * c.xi * c.xi + (c.q * c.q) as f64, pref, env, env2, h });
    }
    // elementary x segments between packet supports
    let mut cuts: Vec<f64> = Vec::new();
    for p in &packets {
        cuts.push(-p.v * t - p.half_width());
        cuts.push(-p.v * t + p.half_width());
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let h_env = packets.iter().map(|p| p.h).fold(f64::INFINITY, f64::min);
    let mut acc = 0.0f64;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let active: Vec<&Packet> = packets.iter().filter(|p| (mid + p.v * t).abs() < p.half_width()).collect();
        if active.is_empty() || b <= a {
            continue;
        }
        let pw = |g: f64| if px.is_finite() { g.powf(px / 2.0) } else { g };
        let mut fold = |vals: &mut dyn Iterator<Item = f64>, hx: f64| {
            if px.is_infinite() {
                acc = acc.max(vals.fold(0.0, f64::max).sqrt());
            } else {
                acc += vals.sum::<f64>() * hx;
            }
        };
        if let [p] = active[..] {
            // one packet: sum on its own table
            let r = p.table_range(a + p.v * t, b + p.v * t);
            fold(&mut p.env2[r].iter().map(|&e| pw(2.0 * PI * e)), p.h);
            continue;
        }
        let mut groups: BTreeMap<i64, Vec<&Packet>> = BTreeMap::new();
        for p in &active {
            groups.entry(p.q).or_default().push(p);
        }
        // carriers inside a q-group beat; resolve the beat of G^{px/2}
        let beat = groups
            .values()
            .map(|g| {
                let lo = g.iter().map(|p| p.xi).fold(f64::INFINITY, f64::min);
                let hi = g.iter().map(|p| p.xi).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max);
        let n_pow = px / 2.0;
        if beat > 0.0 && n_pow.fract() == 0.0 {
            // Each E has z-spectrum in [-dxi/2, dxi/2], so a term of G^n with
            // carrier e^{i beta x}, |beta| > n dxi, integrates to zero on R.
            let n_pow = n_pow as usize;
            let nx = ((b - a) / h_env).ceil().max(1.0) as usize;
            let hx = (b - a) / nx as f64;
            let keep = n_pow as i64;
            let vals = (0..nx).map(|i| {
                let x = a + (i as f64 + 0.5) * hx;
                let mut g: BTreeMap<i64, C64> = BTreeMap::new();
                for grp in groups.values() {
                    let amps: Vec<(i64, C64)> =
                        grp.iter().map(|p| ((p.xi / dxi).round() as i64, p.pref * p.env_at(x + p.v * t))).collect();
                    for &(j, ak) in &amps {
                        for &(l, al) in &amps {
                            *g.entry(j - l).or_default() += 2.0 * PI * ak * al.conj();
                        }
                    }
                }
                let mut pow = g.clone();
                for _ in 1..n_pow {
                    let mut next: BTreeMap<i64, C64> = BTreeMap::new();
                    for (&j, &a1) in &pow {
                        for (&l, &a2) in &g {
                            *next.entry(j + l).or_default() += a1 * a2;
                        }
                    }
                    pow = next;
                }
                pow.range(-keep..=keep).map(|(&j, &c)| (c * C64::from_polar(1.0, j as f64 * dxi * x)).re).sum::<f64>()
            });
            fold(&mut vals.into_iter(), hx);
            continue;
        }
        let harm = if px.is_finite() { px / 2.0 } else { 1.0 }.max(1.0);
        let h = if beat > 0.0 { h_env.min(PI / (4.0 * harm * beat)) } else { h_env };
        let n = ((b - a) / h).ceil().max(1.0) as usize;
        let hx = (b - a) / n as f64;
        let xs = (0..n).map(|i| a + (i as f64 + 0.5) * hx);
        if beat == 0.0 {
            // no carrier interference: |U_q|^2 is a sum of envelopes
            fold(&mut xs.map(|x| pw(2.0 * PI * active.iter().map(|p| p.env2_at(x + p.v * t)).sum::<f64>())), hx);
        } else {
            fold(
                &mut xs.map(|x| {
                    pw(2.0 * PI * groups.values().map(|g| g.iter().map(|p| p.eval(t, x)).sum::<C64>().norm_sqr()).sum::<f64>())
                }),
                hx,
            );
        }
    }
    Ok(acc)
}

/// Time panels on [0, t_max]: geometric from `a`, capped at `max_panel`.
fn panels(t_max: f64, a: f64, max_panel: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut lo = 0.0;
    let mut w = a.min(t_max);
    while lo < t_max {
        let hi = (lo + w).min(t_max);
        out.push((lo, hi));
        lo = hi;
        w = (2.0 * w).min(max_panel);
    }
    out
}

/// ||(weights) u||_{L^pt_t L^px_x L^2_y} over the time domain x R x T in the
/// cell model. `px` may be infinite.
pub fn l2y_mixed_continuum(
    u: &SpaceTimeField,
    ws: &[MultiplierWeight],
    pt: f64,
    px: f64,
    time: TimeDomain,
    opt: &DispersiveOptions,
) -> Result<f64> {
    if !(pt >= 1.0 && px >= 2.0) {
        return Err(ZkError::contract("need pt >= 1 and px >= 2"));
    }
    let g = u.grid;
    let t_max = match time {
        TimeDomain::Window => g.tw / 2.0,
        TimeDomain::Restricted(t) if t > 0.0 => t,
        _ => return Err(ZkError::contract("restriction time must be positive")),
    };
    let mut columns: BTreeMap<(i64, i64), Vec<(f64, C64)>> = BTreeMap::new();
    let dxi = g.dxi();
    for (sigma, xi, q, c) in u.nonzero_modes() {
        columns.entry(((xi / dxi).round() as i64, q)).or_default().push((sigma, c));
    }
    let cells: Vec<Cell> = columns
        .into_iter()
        .map(|((j, q), amps)| Cell { amps, xi: j as f64 * dxi, q, ws: ws.to_vec() })
        .collect();
    if cells.is_empty() {
        return Ok(0.0);
    }
    let dsigma = g.dsigma();
    let kappa = (2.0 * PI).powi(-3);
    let vmax = cells.iter().map(|c| 3.0 * c.xi * c.xi + (c.q * c.q) as f64).fold(0.0, f64::max);
    let ximax = cells.iter().map(|c| c.xi.abs()).fold(0.0, f64::max);
    // time for packets to separate or to start dispersing
    let a = 0.1 / (vmax * dxi + 6.0 * ximax * dxi * dxi + 1.0);
    let gl = gauss_legendre(opt.nodes);
    let nodes: Vec<(f64, f64)> = panels(t_max, a, opt.max_panel)
        .into_iter()
        .flat_map(|(lo, hi)| {
            let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            gl.iter().flat_map(move |&(x, w)| [(m + r * x, w * r), (-(m + r * x), w * r)]).collect::<Vec<_>>()
        })
        .collect();
    let plans = Planner { cache: std::sync::Mutex::new(BTreeMap::new()) };
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|&(t, _)| slice(&cells, t, dxi, dsigma, kappa, px, opt, &plans))
        .collect::<Result<_>>()?;
    let total: f64 = nodes
        .iter()
        .zip(&vals)
        .map(|(&(_, w), &v)| w * if px.is_infinite() { v.powf(pt) } else { v.powf(pt / px) })
        .sum();
    Ok(total.powf(1.0 / pt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::norms::WeightKind;

    /// Direct evaluation: dense eta quadrature for every packet at every x.
    fn brute(u: &SpaceTimeField, ws: &[MultiplierWeight], p: f64, t_max: f64) -> f64 {
        let g = u.grid;
        let modes = u.nonzero_modes();
        let kappa = (2.0 * PI).powi(-3);
        let gl = gauss_legendre(12);
        let field = |t: f64, x: f64| -> f64 {
            let mut by_q: BTreeMap<i64, C64> = BTreeMap::new();
            for &(s, xi, q, c) in &modes {
                let n = 120;
                let de = g.dxi() / n as f64;
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..n {
                    let x1 = xi - g.dxi() / 2.0 + (i as f64 + 0.5) * de;
                    let w = weights_symbol(ws, x1, q).unwrap();
                    acc += C64::from_polar(w * de, x1 * x + (phase_g(&x1, &(q as f64)) + s) * t);
                }
                *by_q.entry(q).or_default() += acc * c * kappa * sigma_box(t, g.dsigma());
            }
            2.0 * PI * by_q.values().map(|z| z.norm_sqr()).sum::<f64>()
        };
        // t panels of width 0.05, x on [-150, 150]
        let mut total = 0.0;
        let np = (t_max / 0.05).round() as usize;
        for k in 0..2 * np {
            let (lo, hi) = (-t_max + k as f64 * 0.05, -t_max + (k + 1) as f64 * 0.05);
            for &(z, w) in &gl {
                let t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * z;
                let nx = 3000;
                let hx = 300.0 / nx as f64;
                let s: f64 = (0..nx).map(|i| field(t, -150.0 + (i as f64 + 0.5) * hx).powf(p / 2.0)).sum::<f64>() * hx;
                total += w * 0.5 * (hi - lo) * s;
            }
        }
        total.powf(1.0 / p)
    }

    #[test]
    fn matches_direct_quadrature() {
        let g = Grid::new(2.0 * PI, 16, 16, 2.0 * PI, 8).unwrap();
        let mut u = SpaceTimeField::zeros(g, false);
        u.set(0, 2, 1, C64::new(1.0, 0.3));
        u.set(1, 2, 1, C64::new(-0.4, 0.2));
        u.set(0, 14, 1, C64::new(0.5, -0.5));
        u.set(0, 3, 13, C64::new(0.8, 0.0));
        let ws = [MultiplierWeight::new(WeightKind::Ix, 1.0 / 6.0)];
        u.set(0, 6, 1, C64::new(0.3, 0.6));
        for p in [4.0, 6.0] {
            let fast = l2y_mixed_continuum(&u, &ws, p, p, TimeDomain::Restricted(0.5), &DispersiveOptions::default()).unwrap();
            let slow = brute(&u, &ws, p, 0.5);
            assert!((fast - slow).abs() < 5e-3 * slow, "p={p}: {fast} vs {slow}");
        }
    }

    #[test]
    fn panels_cover_interval() {
        let p = panels(3.0, 1e-3, 0.25);
        assert_eq!(p[0].0, 0.0);
        assert!((p.last().unwrap().1 - 3.0).abs() < 1e-15);
        assert!(p.windows(2).all(|w| w[0].1 == w[1].0));
    }
}
