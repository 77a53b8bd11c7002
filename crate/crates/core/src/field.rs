//! Physical, spectral and space-time fields with Riemann-sum transforms.
//!
//! Forward transforms are `sum * dx * dy` (times `dt` in time), inverse
//! transforms carry `1/(Lx * 2 pi)` (and `1/Tw`). Space-time coefficients are
//! stored in the modulation frame: slot `m` holds the coefficient at
//! `tau = sigma_m + phi(xi, q)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, ZkError};
use crate::grid::Grid;
use crate::symbols::phase_g;

pub type C64 = Complex64;

/// Cached 2-D transform plan on an `nx * ny` row-major array (q fastest).
#[derive(Clone)]
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            nx,
            ny,
            fx: p.plan_fft_forward(nx),
            fy: p.plan_fft_forward(ny),
            ix: p.plan_fft_inverse(nx),
            iy: p.plan_fft_inverse(ny),
        }
    }

    fn run(&self, data: &mut [C64], inverse: bool) {
        assert_eq!(data.len(), self.nx * self.ny);
        let (fx, fy) = if inverse { (&self.ix, &self.iy) } else { (&self.fx, &self.fy) };
        data.par_chunks_mut(self.ny).for_each(|row| fy.process(row));
        let mut t = transpose(data, self.nx, self.ny);
        t.par_chunks_mut(self.nx).for_each(|col| fx.process(col));
        let back = transpose(&t, self.ny, self.nx);
        data.copy_from_slice(&back);
    }

    /// Unnormalized forward transform (kernel e^{-i}).
    pub fn forward(&self, data: &mut [C64]) {
        self.run(data, false)
    }

    /// Unnormalized inverse transform (kernel e^{+i}).
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(data, true)
    }
}

fn transpose(data: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub grid: Grid,
    pub data: Vec<C64>,
}

impl PhysicalField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![C64::new(0.0, 0.0); grid.spatial_len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.spatial_len());
        for a in 0..grid.nx {
            for b in 0..grid.ny {
                data.push(C64::new(f(grid.x(a), grid.y(b)), 0.0));
            }
        }
        Self { grid, data }
    }

    /// Riemann-sum integral of |f|^p.
    pub fn integral_abs_pow(&self, p: f64) -> f64 {
        let w = self.grid.dx() * self.grid.dy();
        self.data.iter().map(|z| z.norm().powf(p)).sum::<f64>() * w
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    /// Index `a * ny + b` for x-slot `a`, q-slot `b`.
    pub coeffs: Vec<C64>,
    /// Declared real-valued in physical space.
    pub real: bool,
}

impl SpectralField {
    pub fn zeros(grid: Grid, real: bool) -> Self {
        Self {
            grid,
            coeffs: vec![C64::new(0.0, 0.0); grid.spatial_len()],
            real,
        }
    }

    #[inline]
    pub fn idx(&self, a: usize, b: usize) -> usize {
        a * self.grid.ny + b
    }

    pub fn get(&self, a: usize, b: usize) -> C64 {
        self.coeffs[self.idx(a, b)]
    }

    pub fn set(&mut self, a: usize, b: usize, v: C64) {
        let i = self.idx(a, b);
        self.coeffs[i] = v;
    }

    /// Applies `m(xi, q)` coefficient-wise.
    pub fn map_multiplier(&self, m: impl Fn(f64, i64) -> C64) -> Self {
        let g = self.grid;
        let mut out = self.clone();
        for a in 0..g.nx {
            let xi = g.xi(a);
            for b in 0..g.ny {
                let i = a * g.ny + b;
                out.coeffs[i] *= m(xi, g.q(b));
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|z| *z *= s);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += b);
        out.real = self.real && other.real;
        Ok(out)
    }

    /// Squared L^2 norm in physical space via Parseval.
    pub fn l2_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() / (self.grid.lx * 2.0 * PI)
    }

    pub fn l2(&self) -> f64 {
        self.l2_sq().sqrt()
    }

    /// Largest relative violation of c(-xi,-q) = conj c(xi,q).
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let g = self.grid;
        let scale = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for a in 0..g.nx {
            let ma = (g.nx - a) % g.nx;
            for b in 0..g.ny {
                let mb = (g.ny - b) % g.ny;
                let d = (self.get(a, b) - self.get(ma, mb).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    /// Projects onto conjugate-symmetric coefficients and marks the field real.
    pub fn symmetrize(&self) -> Self {
        let g = self.grid;
        let mut out = self.clone();
        for a in 0..g.nx {
            let ma = (g.nx - a) % g.nx;
            for b in 0..g.ny {
                let mb = (g.ny - b) % g.ny;
                out.coeffs[a * g.ny + b] = 0.5 * (self.get(a, b) + self.get(ma, mb).conj());
            }
        }
        out.real = true;
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn fft_forward(f: &PhysicalField) -> SpectralField {
    fft_forward_with(&Fft2::new(f.grid.nx, f.grid.ny), f)
}

pub fn fft_forward_with(plan: &Fft2, f: &PhysicalField) -> SpectralField {
    let g = f.grid;
    let mut c = f.data.clone();
    plan.forward(&mut c);
    let w = g.dx() * g.dy();
    c.iter_mut().for_each(|z| *z *= w);
    let real = f.data.iter().all(|z| z.im == 0.0);
    SpectralField { grid: g, coeffs: c, real }
}

pub fn fft_inverse(s: &SpectralField) -> PhysicalField {
    fft_inverse_with(&Fft2::new(s.grid.nx, s.grid.ny), s)
}

pub fn fft_inverse_with(plan: &Fft2, s: &SpectralField) -> PhysicalField {
    let g = s.grid;
    let mut d = s.coeffs.clone();
    plan.inverse(&mut d);
    let w = 1.0 / (g.lx * 2.0 * PI);
    d.iter_mut().for_each(|z| *z *= w);
    PhysicalField { grid: g, data: d }
}

/// Copies `s` into the spectrum of a larger (or smaller) grid with the same box,
/// keeping the frequencies both grids resolve.
pub fn resample(s: &SpectralField, target: Grid) -> SpectralField {
    let g = s.grid;
    let mut out = SpectralField::zeros(target, s.real);
    for a in 0..g.nx {
        let j = crate::grid::signed_index(a, g.nx);
        let Some(ta) = crate::grid::slot_of(j, target.nx) else { continue };
        for b in 0..g.ny {
            let q = g.q(b);
            let Some(tb) = crate::grid::slot_of(q, target.ny) else { continue };
            out.coeffs[ta * target.ny + tb] = s.get(a, b);
        }
    }
    out
}

/// Space-time field in the modulation frame, index `(m * nx + a) * ny + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub grid: Grid,
    pub coeffs: Vec<C64>,
    pub real: bool,
}

impl SpaceTimeField {
    pub fn zeros(grid: Grid, real: bool) -> Self {
        Self {
            grid,
            coeffs: vec![C64::new(0.0, 0.0); grid.nt * grid.spatial_len()],
            real,
        }
    }

    #[inline]
    pub fn idx(&self, m: usize, a: usize, b: usize) -> usize {
        (m * self.grid.nx + a) * self.grid.ny + b
    }

    pub fn get(&self, m: usize, a: usize, b: usize) -> C64 {
        self.coeffs[self.idx(m, a, b)]
    }

    pub fn set(&mut self, m: usize, a: usize, b: usize, v: C64) {
        let i = self.idx(m, a, b);
        self.coeffs[i] = v;
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|z| *z *= s);
        if s.im != 0.0 {
            out.real = false;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    /// Visits every nonzero coefficient as `(sigma, xi, q, value)`.
    pub fn nonzero_modes(&self) -> Vec<(f64, f64, i64, C64)> {
        let g = self.grid;
        let mut out = Vec::new();
        for m in 0..g.nt {
            for a in 0..g.nx {
                for b in 0..g.ny {
                    let v = self.get(m, a, b);
                    if v.norm_sqr() > 0.0 {
                        out.push((g.sigma(m), g.xi(a), g.q(b), v));
                    }
                }
            }
        }
        out
    }

    /// Spatial spectrum at time `t`: (1/Tw) sum_m c_m e^{i (sigma_m + phi) t}.
    pub fn time_sample(&self, t: f64) -> SpectralField {
        let g = self.grid;
        let mut out = SpectralField::zeros(g, self.real);
        let rot: Vec<C64> = (0..g.nt).map(|m| C64::from_polar(1.0 / g.tw, g.sigma(m) * t)).collect();
        out.coeffs.par_chunks_mut(g.ny).enumerate().for_each(|(a, row)| {
            let xi = g.xi(a);
            for (b, z) in row.iter_mut().enumerate() {
                let q = g.q(b) as f64;
                let mut acc = C64::new(0.0, 0.0);
                for (m, r) in rot.iter().enumerate() {
                    let c = self.coeffs[(m * g.nx + a) * g.ny + b];
                    if c.re != 0.0 || c.im != 0.0 {
                        acc += c * r;
                    }
                }
                *z = acc * C64::from_polar(1.0, phase_g(&xi, &q) * t);
            }
        });
        out
    }

    /// Inverse of `time_sample` on the time lattice t_n = n dt, n signed.
    pub fn from_time_samples(grid: Grid, samples: &[SpectralField]) -> Result<Self> {
        if samples.len() != grid.nt {
            return Err(ZkError::contract(format!("expected {} time samples, got {}", grid.nt, samples.len())));
        }
        for s in samples {
            if s.grid.nx != grid.nx || s.grid.ny != grid.ny {
                return Err(ZkError::contract("time sample grid mismatch"));
            }
        }
        let real = samples.iter().all(|s| s.real);
        let mut out = Self::zeros(grid, real);
        let dt = grid.dt();
        let times: Vec<f64> = (0..grid.nt).map(|n| crate::grid::signed_index(n, grid.nt) as f64 * dt).collect();
        for m in 0..grid.nt {
            let sig = grid.sigma(m);
            for a in 0..grid.nx {
                let xi = grid.xi(a);
                for b in 0..grid.ny {
                    let phi = phase_g(&xi, &(grid.q(b) as f64));
                    let mut acc = C64::new(0.0, 0.0);
                    for (n, s) in samples.iter().enumerate() {
                        acc += s.get(a, b) * C64::from_polar(dt, -(sig + phi) * times[n]);
                    }
                    out.set(m, a, b, acc);
                }
            }
        }
        Ok(out)
    }

    /// Field with a single spatial spectrum `u0` at zero modulation; its
    /// time samples are the free evolution of `u0` (up to the 1/Tw factor).
    pub fn from_free_evolution(u0: &SpectralField, tw: f64, nt: usize) -> Result<Self> {
        let grid = Grid::new(u0.grid.lx, u0.grid.nx, u0.grid.ny, tw, nt)?;
        let mut out = Self::zeros(grid, u0.real);
        for a in 0..grid.nx {
            for b in 0..grid.ny {
                out.set(0, a, b, u0.get(a, b) * tw);
            }
        }
        Ok(out)
    }

    /// Projects onto c(-sigma, -xi, -q) = conj c(sigma, xi, q) and marks the
    /// field real.
    pub fn symmetrize(&self) -> Self {
        let g = self.grid;
        let mut out = self.clone();
        for m in 0..g.nt {
            let mm = (g.nt - m) % g.nt;
            for a in 0..g.nx {
                let ma = (g.nx - a) % g.nx;
                for b in 0..g.ny {
                    let mb = (g.ny - b) % g.ny;
                    let v = 0.5 * (self.get(m, a, b) + self.get(mm, ma, mb).conj());
                    out.coeffs[(m * g.nx + a) * g.ny + b] = v;
                }
            }
        }
        out.real = true;
        out
    }

    /// Squared L^2_{txy} norm over one window via Parseval.
    pub fn l2_sq(&self) -> f64 {
        let g = self.grid;
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() / (g.tw * g.lx * 2.0 * PI)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut out = self.clone();
        out.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += b);
        out.real = self.real && other.real;
        Ok(out)
    }

    /// Applies a spatial multiplier m(xi, q) to every modulation slice.
    pub fn map_spatial(&self, m: impl Fn(f64, i64) -> C64) -> Self {
        let g = self.grid;
        let mut out = self.clone();
        for mm in 0..g.nt {
            for a in 0..g.nx {
                let xi = g.xi(a);
                for b in 0..g.ny {
                    let i = (mm * g.nx + a) * g.ny + b;
                    out.coeffs[i] *= m(xi, g.q(b));
                }
            }
        }
        out
    }

    /// Applies a multiplier of (sigma, xi, q).
    pub fn map_full(&self, m: impl Fn(f64, f64, i64) -> C64) -> Self {
        let g = self.grid;
        let mut out = self.clone();
        for mm in 0..g.nt {
            let s = g.sigma(mm);
            for a in 0..g.nx {
                let xi = g.xi(a);
                for b in 0..g.ny {
                    let i = (mm * g.nx + a) * g.ny + b;
                    out.coeffs[i] *= m(s, xi, g.q(b));
                }
            }
        }
        out
    }
}
