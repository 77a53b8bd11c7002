//! The two-bump field hat u_N = (delta_{q,N} + delta_{q,-N}) 1_{|xi|<=1} 1_{|tau-phi|<=1}.
//!
//! Its X_{s,b} norm grows like N^s while its L^4 norm does not decay, so an
//! L^4 <= X_{s,b} bound must fail for s < 0.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::cells::{bilinear_l2, gauss_legendre, Cell, CellField, GramOptions, PairSymbol};
use crate::error::{Result, ZkError};
use crate::field::{SpaceTimeField, C64};
use crate::grid::{slot_of, Grid};
use crate::symbols::{bracket, bracket_pair};

/// Grid that resolves the support of u_N with cells of width 1/4 in xi and sigma.
pub fn counterexample_grid(n: i64) -> Result<Grid> {
    if n < 2 {
        return Err(ZkError::contract("N must be at least 2"));
    }
    let ny = (2 * n as usize + 2).next_power_of_two();
    Grid::new(8.0 * PI, 16, ny, 8.0 * PI, 16)
}

/// Samples of hat u_N at the lattice points of `grid` (closed support).
pub fn counterexample_field(n: i64, grid: Grid) -> Result<SpaceTimeField> {
    if n < 2 || n >= (grid.ny / 2) as i64 {
        return Err(ZkError::contract(format!("N = {n} is not resolved by ny = {}", grid.ny)));
    }
    let one = C64::new(1.0, 0.0);
    let mut u = SpaceTimeField::zeros(grid, true);
    for m in 0..grid.nt {
        if grid.sigma(m).abs() > 1.0 + 1e-12 {
            continue;
        }
        for a in 0..grid.nx {
            if grid.xi(a).abs() > 1.0 + 1e-12 {
                continue;
            }
            for q in [n, -n] {
                let b = slot_of(q, grid.ny).ok_or_else(|| ZkError::contract("q out of range"))?;
                u.set(m, a, b, one);
            }
        }
    }
    Ok(u)
}

fn gl_integral(f: impl Fn(f64) -> f64) -> f64 {
    gauss_legendre(40).iter().map(|&(x, w)| w * f(x)).sum()
}

/// Closed-form X_{s,b} norm: 2 (int_{-1}^{1} <(xi,N)>^{2s} dxi)(int_{-1}^{1} <sigma>^{2b} dsigma), square-rooted.
pub fn xsb_closed_form(n: i64, s: f64, b: f64) -> f64 {
    let ixi = gl_integral(|x| bracket_pair(x, n as f64).powf(2.0 * s));
    let isig = gl_integral(|x| bracket(x).powf(2.0 * b));
    (2.0 * ixi * isig).sqrt()
}

/// X_{s,b} norm of the sampled field by the trapezoid rule in xi and sigma.
pub fn xsb_on_grid(u: &SpaceTimeField, s: f64, b: f64) -> f64 {
    let g = u.grid;
    let edge = |v: f64| if (v.abs() - 1.0).abs() < 1e-9 { 0.5 } else { 1.0 };
    let acc: f64 = u
        .nonzero_modes()
        .into_iter()
        .map(|(sig, xi, q, c)| {
            edge(sig) * edge(xi) * (bracket_pair(xi, q as f64).powf(s) * bracket(sig).powf(b)).powi(2) * c.norm_sqr()
        })
        .sum();
    (acc * g.dxi() * g.dsigma()).sqrt()
}

/// ||hat u * hat u||_{L^2}, which is ||u||_{L^4}^2 up to the transform constant.
/// Evaluated with exact boxes (two cells of width 2), no grid.
pub fn l4_squared(n: i64) -> Result<f64> {
    if n < 1 {
        return Err(ZkError::contract("N must be positive"));
    }
    let cell = |q| Cell { xi: 0.0, q, sigma: 0.0, amp: C64::new(1.0, 0.0) };
    let u = CellField { dxi: 2.0, dsigma: 2.0, cells: vec![cell(n), cell(-n)] };
    bilinear_l2(&u, &u, PairSymbol::One, &|_, _| 1.0, &GramOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleNorms {
    pub n: i64,
    pub s: f64,
    pub b: f64,
    pub xsb: f64,
    /// Trapezoid value on `counterexample_grid`, when requested.
    pub xsb_grid: Option<f64>,
    pub l4_sq: f64,
}

pub fn counterexample_norms(n: i64, s: f64, b: f64, with_grid: bool) -> Result<CounterexampleNorms> {
    let xsb_grid = if with_grid {
        let g = counterexample_grid(n)?;
        Some(xsb_on_grid(&counterexample_field(n, g)?, s, b))
    } else {
        None
    };
    Ok(CounterexampleNorms { n, s, b, xsb: xsb_closed_form(n, s, b), xsb_grid, l4_sq: l4_squared(n)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_order_norm_is_sqrt8() {
        assert!((xsb_closed_form(7, 0.0, 0.0) - 8f64.sqrt()).abs() < 1e-13);
        let g = counterexample_grid(7).unwrap();
        let u = counterexample_field(7, g).unwrap();
        assert!((xsb_on_grid(&u, 0.0, 0.0) - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn grid_agrees_with_closed_form() {
        for &(n, s, b) in &[(4, -0.5, 0.55), (16, 0.25, 0.55), (64, -0.25, 0.55)] {
            let c = counterexample_norms(n, s, b, true).unwrap();
            let gv = c.xsb_grid.unwrap();
            assert!((gv - c.xsb).abs() < 0.02 * c.xsb, "{n} {s}: {gv} vs {}", c.xsb);
        }
    }

    #[test]
    fn unresolved_n_rejected() {
        let g = Grid::new(8.0 * PI, 16, 16, 8.0 * PI, 16).unwrap();
        assert!(counterexample_field(8, g).is_err());
        assert!(counterexample_field(1, g).is_err());
    }

    #[test]
    fn l4_does_not_decay() {
        let a = l4_squared(4).unwrap();
        let b = l4_squared(64).unwrap();
        assert!(a > 0.4 && (a - b).abs() < 0.1 * a, "{a} {b}");
    }
}
