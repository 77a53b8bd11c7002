//! Products of k+1 band-limited space-time fields, computed mode by mode.
//!
//! Every output coefficient of u_1 ... u_{k+1} is a sum over combinations of
//! input modes. The output keeps its exact modulation sum(sigma_i) - R where
//! R = phi(out) - sum phi(in), so no time grid has to resolve the product's
//! tau band (which grows like N^3).

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Result, ZkError};
use crate::field::{SpaceTimeField, C64};
use crate::norms::xsb;
use crate::symbols::{bracket, bracket_pair, phase_g};

/// Product coefficients keyed by (xi index, q, rounded modulation).
type Bins = HashMap<(i64, i64, i64), (f64, C64)>;

/// Sparse product spectrum: (xi, q, modulation, coefficient).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpectrum {
    pub dxi: f64,
    pub dsigma: f64,
    pub modes: Vec<(f64, i64, f64, C64)>,
}

impl ProductSpectrum {
    /// || d_x w ||_{X_{s,b}} with the same cell measure as the inputs.
    pub fn dx_xsb(&self, s: f64, b: f64) -> f64 {
        let acc: f64 = self
            .modes
            .iter()
            .map(|&(xi, q, m, c)| (xi * bracket_pair(xi, q as f64).powf(s) * bracket(m).powf(b)).powi(2) * c.norm_sqr())
            .sum();
        (acc * self.dxi * self.dsigma).sqrt()
    }
}

pub const MAX_COMBOS: usize = 50_000_000;

/// Spectrum of the pointwise product of `fields` (all on one grid).
pub fn product_spectrum(fields: &[SpaceTimeField]) -> Result<ProductSpectrum> {
    let Some(first) = fields.first() else {
        return Err(ZkError::contract("empty product"));
    };
    let g = first.grid;
    if fields.iter().any(|f| f.grid != g) {
        return Err(ZkError::contract("fields live on different grids"));
    }
    let (dxi, dsigma) = (g.dxi(), g.dsigma());
    // (xi index, q, tau, c) of each input
    let modes: Vec<Vec<(i64, i64, f64, C64)>> = fields
        .iter()
        .map(|f| {
            f.nonzero_modes()
                .into_iter()
                .map(|(sig, xi, q, c)| ((xi / dxi).round() as i64, q, sig + phase_g(&xi, &(q as f64)), c))
                .collect()
        })
        .collect();
    let total = modes.iter().try_fold(1usize, |acc, m| acc.checked_mul(m.len()));
    match total {
        Some(0) => return Ok(ProductSpectrum { dxi, dsigma, modes: vec![] }),
        Some(n) if n <= MAX_COMBOS => {}
        _ => return Err(ZkError::contract("too many mode combinations")),
    }
    // physical product of inverse transforms: one 1/(Tw Lx 2 pi) per extra factor
    let kappa = (1.0 / (g.tw * g.lx * 2.0 * PI)).powi(fields.len() as i32 - 1);
    let key_scale = (1u64 << 24) as f64 / dsigma;

    let partial: Vec<Bins> = modes[0]
        .par_iter()
        .map(|&head| {
            let mut map: Bins = HashMap::new();
            let mut stack = vec![(1usize, head)];
            while let Some((depth, (j, q, tau, c))) = stack.pop() {
                if depth == modes.len() {
                    let xi = j as f64 * dxi;
                    let m = tau - phase_g(&xi, &(q as f64));
                    let e = map.entry((j, q, (m * key_scale).round() as i64)).or_insert((m, C64::new(0.0, 0.0)));
                    e.1 += c;
                    continue;
                }
                for &(j2, q2, t2, c2) in &modes[depth] {
                    stack.push((depth + 1, (j + j2, q + q2, tau + t2, c * c2)));
                }
            }
            map
        })
        .collect();
    let mut merged: Bins = HashMap::new();
    for map in partial {
        for (k, (m, c)) in map {
            merged.entry(k).or_insert((m, C64::new(0.0, 0.0))).1 += c;
        }
    }
    let mut out: Vec<_> = merged.into_iter().collect();
    out.sort_by_key(|e| e.0);
    Ok(ProductSpectrum {
        dxi,
        dsigma,
        modes: out.into_iter().map(|((j, q, _), (m, c))| (j as f64 * dxi, q, m, c * kappa)).collect(),
    })
}

/// (lhs, rhs) of || d_x prod u_i ||_{X_{s,-1/2+2eps}} <= C prod || u_i ||_{X_{s,1/2+eps}}.
pub fn multilinear_norms(k: u32, s: f64, eps: f64, fields: &[SpaceTimeField]) -> Result<(f64, f64)> {
    if k < 2 || fields.len() != k as usize + 1 {
        return Err(ZkError::contract(format!("need k >= 2 and k+1 fields, got k = {k} with {}", fields.len())));
    }
    let rhs: f64 = fields.iter().map(|u| xsb(u, s, 0.5 + eps)).product();
    if rhs == 0.0 {
        return Err(ZkError::Degenerate("a factor vanishes".into()));
    }
    let lhs = product_spectrum(fields)?.dx_xsb(s, -0.5 + 2.0 * eps);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::fft_inverse;
    use crate::grid::Grid;

    #[test]
    fn matches_physical_product() {
        // 2 pi periodic in every variable, so the time product is exact on the window
        let g = Grid::new(2.0 * PI, 32, 32, 2.0 * PI, 8).unwrap();
        let mut u = SpaceTimeField::zeros(g, false);
        u.set(0, 1, 2, C64::new(1.0, 0.5));
        u.set(1, 2, 31, C64::new(-0.3, 0.2));
        let mut v = SpaceTimeField::zeros(g, false);
        v.set(7, 3, 1, C64::new(0.7, -1.0));
        v.set(0, 1, 0, C64::new(0.4, 0.0));
        let w = product_spectrum(&[u.clone(), v.clone()]).unwrap();
        for t in [0.0, 0.37, 1.9] {
            let pu = fft_inverse(&u.time_sample(t));
            let pv = fft_inverse(&v.time_sample(t));
            for &(i, j) in &[(0usize, 0usize), (5, 7), (17, 30)] {
                let (x, y) = (g.x(i), g.y(j));
                let direct = pu.data[i * g.ny + j] * pv.data[i * g.ny + j];
                let mut series = C64::new(0.0, 0.0);
                for &(xi, q, m, c) in &w.modes {
                    let tau = m + phase_g(&xi, &(q as f64));
                    series += c * C64::from_polar(1.0, tau * t + xi * x + q as f64 * y);
                }
                series /= g.tw * g.lx * 2.0 * PI;
                assert!((series - direct).norm() < 1e-12, "{series} vs {direct}");
            }
        }
    }

    #[test]
    fn zero_factor_is_degenerate() {
        let g = Grid::new(2.0 * PI, 16, 16, 2.0 * PI, 8).unwrap();
        let mut u = SpaceTimeField::zeros(g, true);
        u.set(0, 1, 1, C64::new(1.0, 0.0));
        let z = SpaceTimeField::zeros(g, true);
        assert!(matches!(multilinear_norms(2, 0.4, 0.01, &[u.clone(), u.clone(), z]), Err(ZkError::Degenerate(_))));
        assert!(multilinear_norms(2, 0.4, 0.01, &[u.clone(), u]).is_err());
    }
}
