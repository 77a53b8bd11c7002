//! The linear group e^{-t d_x Lap} and its two one-dimensional factorizations.

use crate::field::{SpectralField, C64};
use crate::symbols::phase_g;

/// Multiplies every coefficient by e^{i t phi(xi, q)}.
pub fn linear_propagate(u0: &SpectralField, t: f64) -> SpectralField {
    u0.map_multiplier(|xi, q| C64::from_polar(1.0, t * phase_g(&xi, &(q as f64))))
}

/// Periodic Schrodinger group e^{i s d_y^2} on one vector of q-coefficients.
pub fn schrodinger_1d(coeffs: &mut [C64], qs: &[i64], s: f64) {
    for (c, &q) in coeffs.iter_mut().zip(qs) {
        *c *= C64::from_polar(1.0, -s * (q * q) as f64);
    }
}

/// Airy group e^{-t d_x^3} on one vector of xi-coefficients.
pub fn airy_1d(coeffs: &mut [C64], xis: &[f64], t: f64) {
    for (c, &xi) in coeffs.iter_mut().zip(xis) {
        *c *= C64::from_polar(1.0, t * xi * xi * xi);
    }
}

/// For each xi: Schrodinger evolution in y for time -xi t, then the Airy phase.
pub fn schrodinger_view_evolve(u0: &SpectralField, t: f64) -> SpectralField {
    let g = u0.grid;
    let qs: Vec<i64> = (0..g.ny).map(|b| g.q(b)).collect();
    let mut out = u0.clone();
    for (a, row) in out.coeffs.chunks_mut(g.ny).enumerate() {
        let xi = g.xi(a);
        schrodinger_1d(row, &qs, -xi * t);
        let airy = C64::from_polar(1.0, t * xi * xi * xi);
        row.iter_mut().for_each(|c| *c *= airy);
    }
    out
}

/// For each q: Airy evolution in x, then the translation x -> x + q^2 t as a
/// Fourier phase.
pub fn airy_view_evolve(u0: &SpectralField, t: f64) -> SpectralField {
    let g = u0.grid;
    let xis: Vec<f64> = (0..g.nx).map(|a| g.xi(a)).collect();
    let mut out = u0.clone();
    let mut col = vec![C64::new(0.0, 0.0); g.nx];
    for b in 0..g.ny {
        let q = g.q(b);
        for (a, c) in col.iter_mut().enumerate() {
            *c = out.coeffs[a * g.ny + b];
        }
        airy_1d(&mut col, &xis, t);
        let shift = (q * q) as f64 * t;
        for a in 0..g.nx {
            out.coeffs[a * g.ny + b] = col[a] * C64::from_polar(1.0, xis[a] * shift);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn field() -> SpectralField {
        let g = Grid::new(8.0, 16, 16, 2.0 * PI, 8).unwrap();
        let mut u = SpectralField::zeros(g, false);
        for (i, c) in u.coeffs.iter_mut().enumerate() {
            *c = C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        }
        u
    }

    fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
        let d: f64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm_sqr()).sum();
        (d / b.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    #[test]
    fn single_mode_phase() {
        let g = Grid::new(2.0 * PI, 8, 8, 2.0 * PI, 8).unwrap();
        let mut u = SpectralField::zeros(g, false);
        u.set(2, 1, C64::new(1.0, 0.0));
        let v = linear_propagate(&u, 0.1);
        // phi(2, 1) = 10
        assert!((v.get(2, 1) - C64::from_polar(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn views_agree_with_multiplier() {
        let u = field();
        for t in [0.37, -0.21, 0.0, 2.5] {
            let l = linear_propagate(&u, t);
            assert!(rel(&schrodinger_view_evolve(&u, t), &l) < 1e-12);
            assert!(rel(&airy_view_evolve(&u, t), &l) < 1e-12);
        }
        assert!(rel(&linear_propagate(&u, 0.0), &u) == 0.0);
    }

    #[test]
    fn group_law_and_unitarity() {
        let u = field();
        let a = linear_propagate(&linear_propagate(&u, 0.3), 0.45);
        let b = linear_propagate(&u, 0.75);
        assert!(rel(&a, &b) < 1e-12);
        assert!((b.l2() - u.l2()).abs() < 1e-12 * u.l2());
    }
}
