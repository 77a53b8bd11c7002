//! Lebesgue, mixed, Sobolev and Bourgain norms, Bessel/Riesz weights and the
//! MP bilinear multiplier.
//!
//! Frequency-side norms (`Hs`, `Xsb`) use the plain measure d(tau) d(xi) times
//! counting measure in q. Physical norms use dx dy dt. With the Riemann-sum
//! transform this gives `X_{0,0} = (2 pi)^{3/2} L^2_{txy}`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZkError};
use crate::field::{fft_inverse_with, resample, Fft2, SpaceTimeField, SpectralField, C64};
use crate::grid::signed_index;
use crate::projectors::smooth_step;
use crate::symbols::{bracket, bracket_pair, dilated_sq, euclid, phase_g};

/// Time range of a physical space-time norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeDomain {
    /// One full window [-Tw/2, Tw/2).
    Window,
    /// [-T, T] inside the window.
    Restricted(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormSpec {
    /// L^p over (t, x, y).
    Lp { p: f64, time: TimeDomain },
    /// L^pt_t L^px_x L^py_y, y innermost.
    Mixed { pt: f64, px: f64, py: f64, time: TimeDomain },
    /// H^s of a spatial field.
    Hs { s: f64 },
    Xsb { s: f64, b: f64 },
    /// sup over window time samples of the H^s norm.
    LinfHs { s: f64 },
}

impl NormSpec {
    pub fn token(&self) -> String {
        serde_json::to_string(self).expect("norm spec serializes")
    }

    fn check(&self) -> Result<()> {
        let ok = |p: f64| p >= 1.0;
        match *self {
            NormSpec::Lp { p, time } => {
                if !ok(p) {
                    return Err(ZkError::contract(format!("exponent {p} < 1")));
                }
                check_time(time)
            }
            NormSpec::Mixed { pt, px, py, time } => {
                if !(ok(pt) && ok(px) && ok(py)) {
                    return Err(ZkError::contract("mixed norm exponents must be >= 1"));
                }
                check_time(time)
            }
            _ => Ok(()),
        }
    }
}

fn check_time(t: TimeDomain) -> Result<()> {
    if let TimeDomain::Restricted(tt) = t {
        if !(tt > 0.0) {
            return Err(ZkError::contract("restriction time must be positive"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    J,
    I,
    Jx,
    Ix,
    Jy,
    Iy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierWeight {
    pub kind: WeightKind,
    pub s: f64,
}

impl MultiplierWeight {
    pub fn new(kind: WeightKind, s: f64) -> Self {
        Self { kind, s }
    }

    pub fn is_riesz(&self) -> bool {
        matches!(self.kind, WeightKind::I | WeightKind::Ix | WeightKind::Iy)
    }

    /// Symbol value; `None` where a negative-order Riesz symbol is singular.
    pub fn symbol(&self, xi: f64, q: i64) -> Option<f64> {
        if self.s == 0.0 {
            return Some(1.0);
        }
        let qf = q as f64;
        let base = match self.kind {
            WeightKind::J => bracket_pair(xi, qf),
            WeightKind::Jx => bracket(xi),
            WeightKind::Jy => bracket(qf),
            WeightKind::I => euclid(xi, qf),
            WeightKind::Ix => xi.abs(),
            WeightKind::Iy => qf.abs(),
        };
        if base == 0.0 && self.s < 0.0 {
            None
        } else {
            Some(base.powf(self.s))
        }
    }
}

/// Product of weights evaluated at one frequency.
pub fn weights_symbol(ws: &[MultiplierWeight], xi: f64, q: i64) -> Option<f64> {
    let mut acc = 1.0;
    for w in ws {
        acc *= w.symbol(xi, q)?;
    }
    Some(acc)
}

pub fn apply_weight(u: &SpectralField, w: MultiplierWeight) -> Result<SpectralField> {
    let g = u.grid;
    let mut out = u.clone();
    for a in 0..g.nx {
        for b in 0..g.ny {
            let i = a * g.ny + b;
            let c = u.coeffs[i];
            match w.symbol(g.xi(a), g.q(b)) {
                Some(m) => out.coeffs[i] = c * m,
                None if c.norm_sqr() > 0.0 => return Err(ZkError::SingularWeight { order: w.s }),
                None => out.coeffs[i] = C64::new(0.0, 0.0),
            }
        }
    }
    Ok(out)
}

pub fn apply_weight_st(u: &SpaceTimeField, w: MultiplierWeight) -> Result<SpaceTimeField> {
    apply_weights_st(u, &[w])
}

pub fn apply_weights_st(u: &SpaceTimeField, ws: &[MultiplierWeight]) -> Result<SpaceTimeField> {
    let g = u.grid;
    let mut out = u.clone();
    for a in 0..g.nx {
        for b in 0..g.ny {
            let sym = weights_symbol(ws, g.xi(a), g.q(b));
            for m in 0..g.nt {
                let i = (m * g.nx + a) * g.ny + b;
                let c = u.coeffs[i];
                match sym {
                    Some(s) => out.coeffs[i] = c * s,
                    None if c.norm_sqr() > 0.0 => {
                        let order = ws.iter().find(|w| w.is_riesz() && w.s < 0.0).map_or(0.0, |w| w.s);
                        return Err(ZkError::SingularWeight { order });
                    }
                    None => out.coeffs[i] = C64::new(0.0, 0.0),
                }
            }
        }
    }
    Ok(out)
}

/// X_{s,b} norm with the plain frequency measure.
pub fn xsb(u: &SpaceTimeField, s: f64, b: f64) -> f64 {
    let g = u.grid;
    let cell = g.dsigma() * g.dxi();
    let total: f64 = (0..g.nt)
        .into_par_iter()
        .map(|m| {
            let wb = bracket(g.sigma(m)).powf(2.0 * b);
            let mut acc = 0.0;
            for a in 0..g.nx {
                let xi = g.xi(a);
                for bq in 0..g.ny {
                    let c = u.coeffs[(m * g.nx + a) * g.ny + bq];
                    let n2 = c.norm_sqr();
                    if n2 > 0.0 {
                        acc += bracket_pair(xi, g.q(bq) as f64).powf(2.0 * s) * wb * n2;
                    }
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    (total * cell).sqrt()
}

/// H^s norm of a spatial field (plain frequency measure).
pub fn hs(u: &SpectralField, s: f64) -> f64 {
    let g = u.grid;
    let mut acc = 0.0;
    for a in 0..g.nx {
        let xi = g.xi(a);
        for b in 0..g.ny {
            acc += bracket_pair(xi, g.q(b) as f64).powf(2.0 * s) * u.get(a, b).norm_sqr();
        }
    }
    (acc * g.dxi()).sqrt()
}

/// Sample times (midpoint rule) covering a time domain of the field's window.
pub fn sample_times(u: &SpaceTimeField, time: TimeDomain, oversample: usize) -> Result<Vec<f64>> {
    let g = u.grid;
    let (lo, hi) = match time {
        TimeDomain::Window => (-g.tw / 2.0, g.tw / 2.0),
        TimeDomain::Restricted(t) => {
            if 2.0 * t > g.tw * (1.0 + 1e-12) {
                return Err(ZkError::contract(format!("restriction T = {t} exceeds the window")));
            }
            (-t, t)
        }
    };
    let n = ((g.nt * oversample.max(1)) as f64 * (hi - lo) / g.tw).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    Ok((0..n).map(|i| lo + (i as f64 + 0.5) * h).collect())
}

/// Options for physical-space quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    /// Time samples per window, in units of Nt.
    pub time_oversample: usize,
    /// Spatial zero-padding factor; 0 picks ceil(p/2) (at least 2 for p = infinity).
    pub pad: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { time_oversample: 2, pad: 0 }
    }
}

fn pad_for(p: f64, pad: usize) -> usize {
    if pad > 0 {
        pad
    } else if p.is_infinite() {
        2
    } else {
        ((p / 2.0).ceil() as usize).max(1)
    }
}

/// Evaluates `f` on the physical field at every sample time and returns the
/// per-time values, in time order.
fn per_time<T: Send>(
    u: &SpaceTimeField,
    times: &[f64],
    pad: usize,
    f: impl Fn(&crate::field::PhysicalField) -> T + Sync,
) -> Vec<T> {
    let pg = u.grid.padded(pad);
    let plan = Fft2::new(pg.nx, pg.ny);
    times
        .iter()
        .map(|&t| {
            let s = u.time_sample(t);
            let s = if pad > 1 { resample(&s, pg) } else { s };
            f(&fft_inverse_with(&plan, &s))
        })
        .collect()
}

fn lp_combine(vals: impl Iterator<Item = f64>, p: f64, weight: f64) -> f64 {
    if p.is_infinite() {
        vals.fold(0.0, f64::max)
    } else {
        (vals.map(|v| v.powf(p)).sum::<f64>() * weight).powf(1.0 / p)
    }
}

/// Physical norm of a space-time field.
pub fn norm_st(u: &SpaceTimeField, spec: &NormSpec, quad: Quadrature) -> Result<f64> {
    spec.check()?;
    match *spec {
        NormSpec::Xsb { s, b } => Ok(xsb(u, s, b)),
        NormSpec::LinfHs { s } => {
            let times = sample_times(u, TimeDomain::Window, quad.time_oversample)?;
            Ok(times.iter().map(|&t| hs(&u.time_sample(t), s)).fold(0.0, f64::max))
        }
        NormSpec::Hs { .. } => Err(ZkError::contract("H^s needs a spatial field")),
        NormSpec::Lp { p, time } => norm_st(u, &NormSpec::Mixed { pt: p, px: p, py: p, time }, quad),
        NormSpec::Mixed { pt, px, py, time } => {
            let times = sample_times(u, time, quad.time_oversample)?;
            let ht = times.get(1).map_or(u.grid.tw, |t1| t1 - times[0]);
            let pad = pad_for(pt.max(px).max(py), quad.pad);
            let vals = per_time(u, &times, pad, |f| mixed_xy(f, px, py));
            Ok(lp_combine(vals.into_iter(), pt, ht))
        }
    }
}

/// ||f||_{L^px_x L^py_y} of one physical slice.
fn mixed_xy(f: &crate::field::PhysicalField, px: f64, py: f64) -> f64 {
    let g = f.grid;
    let per_x = (0..g.nx).map(|a| lp_combine(f.data[a * g.ny..(a + 1) * g.ny].iter().map(|z| z.norm()), py, g.dy()));
    lp_combine(per_x, px, g.dx())
}

/// Norm of a spatial field.
pub fn norm_spectral(u: &SpectralField, spec: &NormSpec, pad: usize) -> Result<f64> {
    spec.check()?;
    match *spec {
        NormSpec::Hs { s } => Ok(hs(u, s)),
        NormSpec::Lp { p, .. } => {
            let pg = u.grid.padded(pad_for(p, pad));
            let f = fft_inverse_with(&Fft2::new(pg.nx, pg.ny), &resample(u, pg));
            Ok(mixed_xy(&f, p, p))
        }
        NormSpec::Mixed { px, py, .. } => {
            let pg = u.grid.padded(pad_for(px.max(py), pad));
            let f = fft_inverse_with(&Fft2::new(pg.nx, pg.ny), &resample(u, pg));
            Ok(mixed_xy(&f, px, py))
        }
        _ => Err(ZkError::contract("space-time norm requested for a spatial field")),
    }
}

/// Canonical time cutoff: 1 on [-delta, delta], 0 outside [-2 delta, 2 delta].
pub fn time_cutoff(t: f64, delta: f64) -> f64 {
    smooth_step((2.0 * delta - t.abs()) / delta)
}

/// X_{s,b} norm of (time cutoff) * u with continuous modulation, an upper
/// bound for the restriction norm on [-delta, delta].
pub fn restriction_norm_surrogate(u: &SpaceTimeField, s: f64, b: f64, delta: f64) -> Result<f64> {
    let g = u.grid;
    if !(delta > 0.0) || delta > g.tw / 4.0 * (1.0 + 1e-12) {
        return Err(ZkError::contract(format!("delta = {delta} must lie in (0, Tw/4]")));
    }
    // time step resolves the cutoff transition; zero padded 4x
    let nsamp = (4 * g.nt).max((40.0 * g.tw / delta).ceil() as usize).next_power_of_two();
    let ht = g.tw / nsamp as f64;
    let nfft = 4 * nsamp;
    let times: Vec<f64> = (0..nsamp).map(|n| -g.tw / 2.0 + n as f64 * ht).collect();
    let chi: Vec<f64> = times.iter().map(|&t| time_cutoff(t, delta)).collect();
    let dsig = 2.0 * PI / (nfft as f64 * ht);
    let sig_w: Vec<f64> = (0..nfft)
        .map(|k| bracket(signed_index(k, nfft) as f64 * dsig).powf(2.0 * b))
        .collect();
    let fft = rustfft::FftPlanner::new().plan_fft_forward(nfft);
    let modes: Vec<(usize, usize)> = (0..g.nx)
        .flat_map(|a| (0..g.ny).map(move |bq| (a, bq)))
        .filter(|&(a, bq)| (0..g.nt).any(|m| u.get(m, a, bq).norm_sqr() > 0.0))
        .collect();
    let total: f64 = modes
        .par_iter()
        .map(|&(a, bq)| {
            let xi = g.xi(a);
            let q = g.q(bq) as f64;
            let mut buf = vec![C64::new(0.0, 0.0); nfft];
            for (n, &t) in times.iter().enumerate() {
                if chi[n] == 0.0 {
                    continue;
                }
                let mut w = C64::new(0.0, 0.0);
                for m in 0..g.nt {
                    let c = u.get(m, a, bq);
                    if c.norm_sqr() > 0.0 {
                        w += c * C64::from_polar(1.0 / g.tw, g.sigma(m) * t);
                    }
                }
                // the shift of origin to -Tw/2 only changes a phase
                buf[n] = w * chi[n] * ht;
            }
            fft.process(&mut buf);
            let wsp = bracket_pair(xi, q).powf(2.0 * s);
            let acc: f64 = buf.iter().zip(&sig_w).map(|(z, w)| z.norm_sqr() * w).sum();
            acc * wsp
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok((total * dsig * g.dxi()).sqrt())
}

/// One term of a discrete convolution: value located at (tau, xi, q).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvTerm {
    pub tau: f64,
    pub xi: f64,
    pub q: i64,
    pub value: C64,
}

/// MP symbol ||(xi1,q1)|^2 - |(xi2,q2)|^2|^{1/2}.
pub fn mp_symbol(xi1: f64, q1: i64, xi2: f64, q2: i64) -> f64 {
    (dilated_sq(xi1, q1 as f64) - dilated_sq(xi2, q2 as f64)).abs().sqrt()
}

/// Discrete convolution of `u` and `v` over (tau, xi, q) with the MP symbol,
/// one term per pair of nonzero cells, sorted by (q, xi, tau).
pub fn mp_apply(u: &SpaceTimeField, v: &SpaceTimeField) -> Result<Vec<ConvTerm>> {
    u.grid.ensure_same(&v.grid)?;
    let g = u.grid;
    let cell = g.dsigma() * g.dxi();
    let um = u.nonzero_modes();
    let vm = v.nonzero_modes();
    let mut out = Vec::with_capacity(um.len() * vm.len());
    for &(s1, x1, q1, c1) in &um {
        let t1 = s1 + phase_g(&x1, &(q1 as f64));
        for &(s2, x2, q2, c2) in &vm {
            let t2 = s2 + phase_g(&x2, &(q2 as f64));
            out.push(ConvTerm {
                tau: t1 + t2,
                xi: x1 + x2,
                q: q1 + q2,
                value: c1 * c2 * mp_symbol(x1, q1, x2, q2) * cell,
            });
        }
    }
    out.sort_by(|a, b| {
        a.q.cmp(&b.q)
            .then(a.xi.total_cmp(&b.xi))
            .then(a.tau.total_cmp(&b.tau))
            .then(a.value.re.total_cmp(&b.value.re))
            .then(a.value.im.total_cmp(&b.value.im))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> Grid {
        Grid::new(2.0 * PI, 16, 16, 2.0 * PI, 16).unwrap()
    }

    fn random_st(g: Grid, seed: u64) -> SpaceTimeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = SpaceTimeField::zeros(g, false);
        for m in 0..g.nt {
            for a in 0..g.nx {
                for b in 0..g.ny {
                    if signed_index(a, g.nx).abs() < 5 && signed_index(b, g.ny).abs() < 5 && signed_index(m, g.nt).abs() < 5 {
                        u.set(m, a, b, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                    }
                }
            }
        }
        u
    }

    #[test]
    fn x00_matches_physical_l2() {
        let u = random_st(small(), 1);
        let x = xsb(&u, 0.0, 0.0);
        let l2 = norm_st(&u, &NormSpec::Lp { p: 2.0, time: TimeDomain::Window }, Quadrature::default()).unwrap();
        assert!((x - (2.0 * PI).powf(1.5) * l2).abs() < 1e-10 * x);
        assert!((l2 * l2 - u.l2_sq()).abs() < 1e-10 * l2 * l2);
    }

    #[test]
    fn single_cell_xsb() {
        let g = small();
        let mut u = SpaceTimeField::zeros(g, false);
        u.set(2, 3, 1, C64::new(0.0, 2.0));
        let want = bracket_pair(3.0, 1.0).powf(0.5) * bracket(2.0).powf(0.7) * 2.0 * (g.dsigma() * g.dxi()).sqrt();
        assert!((xsb(&u, 0.5, 0.7) - want).abs() < 1e-13);
    }

    #[test]
    fn hs_and_l2_consistent() {
        let g = small();
        let s = random_st(g, 2).time_sample(0.3);
        let l2 = norm_spectral(&s, &NormSpec::Lp { p: 2.0, time: TimeDomain::Window }, 1).unwrap();
        assert!((hs(&s, 0.0) - 2.0 * PI * l2).abs() < 1e-10 * l2);
        assert!(hs(&s, 1.0) >= hs(&s, 0.0));
    }

    #[test]
    fn l4_needs_padding() {
        // single plane wave of modulus one: |u|^4 integrates to the area
        let g = small();
        let mut s = SpectralField::zeros(g, false);
        s.set(3, 2, C64::new(g.lx * 2.0 * PI, 0.0));
        let l4 = norm_spectral(&s, &NormSpec::Lp { p: 4.0, time: TimeDomain::Window }, 0).unwrap();
        assert!((l4 - (g.lx * 2.0 * PI).powf(0.25)).abs() < 1e-10);
        let linf = norm_spectral(&s, &NormSpec::Lp { p: f64::INFINITY, time: TimeDomain::Window }, 0).unwrap();
        assert!((linf - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_riesz_weights() {
        let g = small();
        let mut s = SpectralField::zeros(g, false);
        s.set(0, 3, C64::new(1.0, 0.0));
        assert!(apply_weight(&s, MultiplierWeight::new(WeightKind::I, -0.5)).is_ok());
        assert!(matches!(
            apply_weight(&s, MultiplierWeight::new(WeightKind::Ix, -0.5)),
            Err(ZkError::SingularWeight { .. })
        ));
        let w = apply_weight(&s, MultiplierWeight::new(WeightKind::Jy, 2.0)).unwrap();
        assert!((w.get(0, 3).re - 10.0).abs() < 1e-12);
        assert_eq!(MultiplierWeight::new(WeightKind::Iy, 0.0).symbol(0.0, 0), Some(1.0));
    }

    #[test]
    fn mp_single_cells() {
        let g = small();
        let mut u = SpaceTimeField::zeros(g, false);
        let mut v = SpaceTimeField::zeros(g, false);
        u.set(1, 2, 0, C64::new(2.0, 0.0));
        v.set(0, 1, 3, C64::new(0.0, 1.0));
        let uv = mp_apply(&u, &v).unwrap();
        let vu = mp_apply(&v, &u).unwrap();
        assert_eq!(uv.len(), 1);
        let sym = mp_symbol(2.0, 0, 1.0, 3);
        assert!((sym - (12.0f64 - 12.0).abs().sqrt()).abs() < 1e-15);
        let want = C64::new(0.0, 2.0) * sym * g.dsigma() * g.dxi();
        assert!((uv[0].value - want).norm() < 1e-12);
        assert!((uv[0].value - vu[0].value).norm() < 1e-12 && (uv[0].tau - vu[0].tau).abs() < 1e-12);
        assert!((uv[0].tau - (1.0 + 2.0 * 4.0 + 1.0 * 10.0)).abs() < 1e-12);
    }

    #[test]
    fn surrogate_at_zero_order_is_cut_l2() {
        let g = small();
        let u = random_st(g, 3);
        let delta = 0.5;
        let sur = restriction_norm_surrogate(&u, 0.0, 0.0, delta).unwrap();
        let n = 4000;
        let h = 4.0 * delta / n as f64;
        let direct: f64 = (0..n)
            .map(|i| {
                let t = -2.0 * delta + (i as f64 + 0.5) * h;
                time_cutoff(t, delta).powi(2) * u.time_sample(t).l2_sq()
            })
            .sum::<f64>()
            * h;
        let want = (2.0 * PI).powf(1.5) * direct.sqrt();
        assert!((sur - want).abs() < 1e-6 * want, "{sur} {want}");
        assert!(restriction_norm_surrogate(&u, 0.0, 0.0, 2.0).is_err());
    }
}
