//! Integrating-factor RK4 pseudo-spectral solver for
//! u_t + d_x Lap u = sign * d_x(u^{k+1}), with mass and energy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZkError};
use crate::field::{fft_forward, fft_forward_with, fft_inverse_with, resample, Fft2, PhysicalField, SpectralField, C64};
use crate::grid::{signed_index, Grid};
use crate::symbols::phase_g;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub k: u32,
    pub sign: i8,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Zero-padding ratio for the nonlinear product; 1 disables dealiasing.
    pub dealias_pad: f64,
    /// Keep every `sample_stride`-th step in the trajectory.
    #[serde(default = "one")]
    pub sample_stride: usize,
    /// Multiplies the nonlinearity; 0 gives the linear flow.
    #[serde(default = "unit")]
    pub nonlinear_coeff: f64,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl EvolutionConfig {
    pub fn new(k: u32, sign: i8, dt: f64, t_final: f64) -> Self {
        Self {
            k,
            sign,
            dt,
            t_final,
            dealias_pad: (k as f64 + 2.0) / 2.0,
            sample_stride: 1,
            nonlinear_coeff: 1.0,
        }
    }

    pub fn dealiased(&self) -> bool {
        self.dealias_pad > 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(ZkError::config("k", "must be >= 1"));
        }
        if self.sign != 1 && self.sign != -1 {
            return Err(ZkError::config("sign", "must be +1 or -1"));
        }
        if !(self.dt > 0.0) {
            return Err(ZkError::config("dt", "must be positive"));
        }
        if !(self.t_final > 0.0) {
            return Err(ZkError::config("T", "must be positive"));
        }
        if self.dt > self.t_final {
            return Err(ZkError::config("dt", "must not exceed T"));
        }
        if !(self.dealias_pad >= 1.0) {
            return Err(ZkError::config("dealias_pad", "must be >= 1"));
        }
        if self.dealiased() && self.dealias_pad < (self.k as f64 + 2.0) / 2.0 {
            return Err(ZkError::config("dealias_pad", format!("must be >= (k+2)/2 = {}", (self.k as f64 + 2.0) / 2.0)));
        }
        if self.sample_stride == 0 {
            return Err(ZkError::config("sample_stride", "must be >= 1"));
        }
        Ok(())
    }

    /// Number of steps and the step actually used (T is hit exactly).
    pub fn steps(&self) -> (usize, f64) {
        let n = (self.t_final / self.dt).round().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservedReport {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
}

impl ConservedReport {
    fn drift(v: &[f64]) -> f64 {
        let v0 = v.first().copied().unwrap_or(0.0);
        let d = v.iter().map(|x| (x - v0).abs()).fold(0.0, f64::max);
        if v0 == 0.0 {
            d
        } else {
            d / v0.abs()
        }
    }

    pub fn mass_drift(&self) -> f64 {
        Self::drift(&self.mass)
    }

    pub fn energy_drift(&self) -> f64 {
        Self::drift(&self.energy)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub conserved: ConservedReport,
}

impl Trajectory {
    pub fn last(&self) -> &SpectralField {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn even_at_least(n: f64) -> usize {
    let m = n.ceil() as usize;
    m + m % 2
}

/// Grid with each spatial size scaled by `ratio` (rounded up to even).
pub fn padded_grid(g: Grid, ratio: f64) -> Grid {
    Grid {
        nx: even_at_least(g.nx as f64 * ratio),
        ny: even_at_least(g.ny as f64 * ratio),
        ..g
    }
}

/// Zeroes the unpaired Nyquist rows so conjugate symmetry can hold exactly.
pub fn drop_nyquist(u: &mut SpectralField) {
    let g = u.grid;
    for a in 0..g.nx {
        let ja = signed_index(a, g.nx).unsigned_abs() as usize;
        for b in 0..g.ny {
            let jb = signed_index(b, g.ny).unsigned_abs() as usize;
            if 2 * ja == g.nx || 2 * jb == g.ny {
                u.coeffs[a * g.ny + b] = C64::new(0.0, 0.0);
            }
        }
    }
}

/// M(u) = int u^2.
pub fn mass(u: &SpectralField) -> f64 {
    u.l2_sq()
}

fn gradient_sq(u: &SpectralField) -> f64 {
    let g = u.grid;
    let mut acc = 0.0;
    for a in 0..g.nx {
        let xi = g.xi(a);
        for b in 0..g.ny {
            let q = g.q(b) as f64;
            acc += (xi * xi + q * q) * u.get(a, b).norm_sqr();
        }
    }
    acc / (g.lx * 2.0 * PI)
}

/// int u^p on a grid fine enough to integrate the band-limited power exactly.
pub fn power_integral(u: &SpectralField, p: u32) -> f64 {
    let pad = ((p as f64) / 2.0).ceil().max(1.0) as usize + 1;
    let pg = u.grid.padded(pad);
    let f = fft_inverse_with(&Fft2::new(pg.nx, pg.ny), &resample(u, pg));
    f.data.iter().map(|z| z.re.powi(p as i32)).sum::<f64>() * pg.dx() * pg.dy()
}

/// Conserved Hamiltonian (1/2) int |grad u|^2 + sign/(k+2) int u^{k+2}.
pub fn energy(u: &SpectralField, k: u32, sign: i8) -> f64 {
    0.5 * gradient_sq(u) + sign as f64 / (k as f64 + 2.0) * power_integral(u, k + 2)
}

/// (1/2) int |grad u|^2 - sign * 2/(k+2) int u^{k+2}: the textbook display of
/// E_pm, which is not conserved by this flow (kept for comparison).
pub fn energy_displayed(u: &SpectralField, k: u32, sign: i8) -> f64 {
    0.5 * gradient_sq(u) - sign as f64 * 2.0 / (k as f64 + 2.0) * power_integral(u, k + 2)
}

struct Rhs {
    grid: Grid,
    pad_grid: Grid,
    plan: Fft2,
    k: u32,
    /// sign * nonlinear_coeff
    coef: f64,
}

impl Rhs {
    /// sign * i xi * (u^{k+1})^, truncated to the working grid.
    fn eval(&self, u: &SpectralField) -> SpectralField {
        let up = if self.pad_grid.same_shape(&self.grid) { u.clone() } else { resample(u, self.pad_grid) };
        let mut f: PhysicalField = fft_inverse_with(&self.plan, &up);
        f.data.iter_mut().for_each(|z| *z = C64::new(z.re.powi(self.k as i32 + 1), 0.0));
        let nl = fft_forward_with(&self.plan, &f);
        let mut out = if self.pad_grid.same_shape(&self.grid) { nl } else { resample(&nl, self.grid) };
        drop_nyquist(&mut out);
        let coef = self.coef;
        let mut out = out.map_multiplier(|xi, _| C64::new(0.0, coef * xi));
        out.real = true;
        out
    }
}

fn axpy(y: &SpectralField, a: f64, x: &SpectralField) -> SpectralField {
    let mut out = y.clone();
    out.coeffs.iter_mut().zip(&x.coeffs).for_each(|(o, xv)| *o += a * xv);
    out
}

fn times(m: &[C64], u: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    out.coeffs.iter_mut().zip(m).for_each(|(o, e)| *o *= e);
    out
}

fn finite(u: &SpectralField) -> bool {
    u.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite() && z.norm_sqr() < 1e300)
}

/// amp e^{-x^2/2} (1 + cos(y)/2), the standard smooth localized datum.
pub fn bump_data(g: Grid, amp: f64) -> SpectralField {
    fft_forward(&PhysicalField::from_fn(g, |x, y| amp * (-x * x / 2.0).exp() * (1.0 + 0.5 * y.cos())))
}

/// Solves from t = 0 to cfg.T. The initial state is symmetrized and its
/// Nyquist rows dropped.
pub fn gzk_solve(u0: &SpectralField, cfg: &EvolutionConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if !u0.real {
        return Err(ZkError::contract("gzk_solve needs real-valued initial data"));
    }
    let g = u0.grid;
    let (nsteps, h) = cfg.steps();
    let pad_grid = if cfg.dealiased() { padded_grid(g, cfg.dealias_pad) } else { g };
    let rhs = Rhs {
        grid: g,
        pad_grid,
        plan: Fft2::new(pad_grid.nx, pad_grid.ny),
        k: cfg.k,
        coef: cfg.sign as f64 * cfg.nonlinear_coeff,
    };
    let phases: Vec<f64> = (0..g.nx)
        .flat_map(|a| (0..g.ny).map(move |b| phase_g(&g.xi(a), &(g.q(b) as f64))))
        .collect();
    let e_half: Vec<C64> = phases.iter().map(|p| C64::from_polar(1.0, 0.5 * h * p)).collect();
    let e_half_inv: Vec<C64> = e_half.iter().map(|z| z.conj()).collect();
    let e_full: Vec<C64> = e_half.iter().map(|z| z * z).collect();
    let e_full_inv: Vec<C64> = e_full.iter().map(|z| z.conj()).collect();

    let mut u = u0.symmetrize();
    drop_nyquist(&mut u);
    let record = |t: f64, u: &SpectralField, tr: &mut Trajectory| {
        tr.times.push(t);
        tr.conserved.times.push(t);
        tr.conserved.mass.push(mass(u));
        tr.conserved.energy.push(energy(u, cfg.k, cfg.sign));
        tr.states.push(u.clone());
    };
    let mut tr = Trajectory {
        times: vec![],
        states: vec![],
        conserved: ConservedReport { times: vec![], mass: vec![], energy: vec![] },
    };
    record(0.0, &u, &mut tr);
    let linear = cfg.nonlinear_coeff == 0.0;
    for step in 1..=nsteps {
        u = if linear {
            times(&e_full, &u)
        } else {
            let k1 = rhs.eval(&u);
            let k2 = times(&e_half_inv, &rhs.eval(&times(&e_half, &axpy(&u, 0.5 * h, &k1))));
            let k3 = times(&e_half_inv, &rhs.eval(&times(&e_half, &axpy(&u, 0.5 * h, &k2))));
            let k4 = times(&e_full_inv, &rhs.eval(&times(&e_full, &axpy(&u, h, &k3))));
            let mut acc = axpy(&u, h / 6.0, &k1);
            acc = axpy(&acc, h / 3.0, &k2);
            acc = axpy(&acc, h / 3.0, &k3);
            acc = axpy(&acc, h / 6.0, &k4);
            times(&e_full, &acc)
        };
        if !finite(&u) {
            return Err(ZkError::BlowUp { last_finite_time: (step - 1) as f64 * h });
        }
        if step % cfg.sample_stride == 0 || step == nsteps {
            record(step as f64 * h, &u, &mut tr);
        }
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagator::linear_propagate;


    fn small() -> Grid {
        Grid::new(16.0, 32, 16, 2.0 * PI, 8).unwrap()
    }

    #[test]
    fn cosine_mass_and_energy() {
        let g = small();
        let a = 0.7;
        let f = PhysicalField::from_fn(g, |_, y| a * (3.0 * y).cos());
        let u = fft_forward(&f);
        let m = mass(&u);
        assert!((m - a * a / 2.0 * g.lx * 2.0 * PI).abs() < 1e-12 * m);
        for k in 1..=3u32 {
            let direct = f.data.iter().map(|z| z.re.powi(k as i32 + 2)).sum::<f64>() * g.dx() * g.dy();
            let e = energy_displayed(&u, k, 1);
            assert!((e - (0.5 * 9.0 * m - 2.0 / (k as f64 + 2.0) * direct)).abs() < 1e-10 * m);
        }
        let z = SpectralField::zeros(g, true);
        assert_eq!((mass(&z), energy(&z, 2, -1)), (0.0, 0.0));
    }

    #[test]
    fn linear_limit_is_exact() {
        let g = small();
        let u0 = bump_data(g, 1.0);
        let mut cfg = EvolutionConfig::new(2, 1, 0.01, 0.5);
        cfg.nonlinear_coeff = 0.0;
        cfg.sample_stride = 10;
        let tr = gzk_solve(&u0, &cfg).unwrap();
        let mut w = u0.symmetrize();
        drop_nyquist(&mut w);
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let l = linear_propagate(&w, *t);
            let d = s.coeffs.iter().zip(&l.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(d < 1e-10 * w.max_abs());
        }
    }

    #[test]
    fn zero_stays_zero_and_config_checks() {
        let g = small();
        let tr = gzk_solve(&SpectralField::zeros(g, true), &EvolutionConfig::new(1, -1, 0.1, 0.3)).unwrap();
        assert!(tr.last().max_abs() == 0.0);
        let mut bad = EvolutionConfig::new(3, 1, 0.1, 1.0);
        bad.dealias_pad = 2.0;
        assert!(matches!(bad.validate(), Err(ZkError::Config { ref field, .. }) if field == "dealias_pad"));
        assert!(gzk_solve(&SpectralField::zeros(g, false), &EvolutionConfig::new(1, 1, 0.1, 0.3)).is_err());
    }

    #[test]
    fn conserves_mass_and_energy() {
        let g = small();
        let u0 = bump_data(g, 0.8);
        let tr = gzk_solve(&u0, &EvolutionConfig::new(1, 1, 2e-3, 0.2)).unwrap();
        assert!(tr.conserved.mass_drift() < 1e-9, "{}", tr.conserved.mass_drift());
        assert!(tr.conserved.energy_drift() < 1e-6, "{}", tr.conserved.energy_drift());
        assert!(tr.last().conjugate_symmetry_defect() < 1e-12);
    }
}
