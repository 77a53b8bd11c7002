//! Truncated geometry of R x T and its frequency lattices.
//!
//! Arrays use FFT ordering in every axis: index `a < n/2` stands for
//! frequency (or position) `a`, the rest for `a - n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZkError};

/// A point (xi, q) with continuous x-frequency and integer y-frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPoint {
    pub xi: f64,
    pub q: i64,
}

impl FrequencyPoint {
    pub fn new(xi: f64, q: i64) -> Self {
        Self { xi, q }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub lx: f64,
    pub nx: usize,
    pub ny: usize,
    pub tw: f64,
    pub nt: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            lx: 64.0,
            nx: 128,
            ny: 128,
            tw: 2.0 * PI,
            nt: 128,
        }
    }
}

/// Signed frequency index of array slot `a` in an axis of length `n`.
#[inline]
pub fn signed_index(a: usize, n: usize) -> i64 {
    if a < n / 2 {
        a as i64
    } else {
        a as i64 - n as i64
    }
}

/// Array slot of signed index `j`, if it is resolved by an axis of length `n`.
#[inline]
pub fn slot_of(j: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if j >= -half && j < half {
        Some(if j >= 0 { j as usize } else { (j + n as i64) as usize })
    } else {
        None
    }
}

impl Grid {
    pub fn new(lx: f64, nx: usize, ny: usize, tw: f64, nt: usize) -> Result<Self> {
        let g = Self { lx, nx, ny, tw, nt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("Nx", self.nx), ("Ny", self.ny), ("Nt", self.nt)] {
            if n < 8 || n % 2 != 0 {
                return Err(ZkError::contract(format!("{name} must be even and >= 8, got {n}")));
            }
        }
        if !(self.lx > 0.0 && self.lx.is_finite()) {
            return Err(ZkError::contract(format!("Lx must be positive, got {}", self.lx)));
        }
        if !(self.tw > 0.0 && self.tw.is_finite()) {
            return Err(ZkError::contract(format!("Tw must be positive, got {}", self.tw)));
        }
        Ok(())
    }

    /// Smallest power-of-two grid with box length `lx` that resolves every
    /// lattice point with dilated norm up to `radius`.
    pub fn fitting(radius: f64, lx: f64, tw: f64, nt: usize) -> Result<Self> {
        let jmax = (radius / 3f64.sqrt() / (2.0 * PI / lx)).floor() as usize + 1;
        let qmax = radius.floor() as usize + 1;
        let nx = (2 * jmax + 2).next_power_of_two().max(8);
        let ny = (2 * qmax + 2).next_power_of_two().max(8);
        Self::new(lx, nx, ny, tw, nt)
    }

    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * PI / self.ny as f64
    }

    pub fn dt(&self) -> f64 {
        self.tw / self.nt as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.lx
    }

    pub fn dsigma(&self) -> f64 {
        2.0 * PI / self.tw
    }

    /// x-frequency of slot `a`.
    #[inline]
    pub fn xi(&self, a: usize) -> f64 {
        signed_index(a, self.nx) as f64 * self.dxi()
    }

    /// y-frequency of slot `b`.
    #[inline]
    pub fn q(&self, b: usize) -> i64 {
        signed_index(b, self.ny)
    }

    /// Modulation of time slot `m`.
    #[inline]
    pub fn sigma(&self, m: usize) -> f64 {
        signed_index(m, self.nt) as f64 * self.dsigma()
    }

    /// Physical x of slot `a` (the box is centred at the origin).
    #[inline]
    pub fn x(&self, a: usize) -> f64 {
        signed_index(a, self.nx) as f64 * self.dx()
    }

    #[inline]
    pub fn y(&self, b: usize) -> f64 {
        b as f64 * self.dy()
    }

    pub fn spatial_len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn point(&self, a: usize, b: usize) -> FrequencyPoint {
        FrequencyPoint::new(self.xi(a), self.q(b))
    }

    /// Largest dilated norm present on the spatial lattice.
    pub fn max_dilated_norm(&self) -> f64 {
        let xi = (self.nx / 2) as f64 * self.dxi();
        let q = (self.ny / 2) as f64;
        (3.0 * xi * xi + q * q).sqrt()
    }

    /// Same box with the spatial resolution multiplied by `factor`.
    pub fn padded(&self, factor: usize) -> Self {
        Self {
            nx: self.nx * factor,
            ny: self.ny * factor,
            ..*self
        }
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.nt == other.nt
            && self.lx.to_bits() == other.lx.to_bits()
            && self.tw.to_bits() == other.tw.to_bits()
    }

    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(ZkError::contract("grid mismatch"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        for n in [8usize, 16, 128] {
            for a in 0..n {
                let j = signed_index(a, n);
                assert_eq!(slot_of(j, n), Some(a));
            }
            assert_eq!(slot_of(n as i64 / 2, n), None);
        }
    }

    #[test]
    fn rejects_odd_sizes() {
        assert!(Grid::new(64.0, 127, 128, 1.0, 128).is_err());
        assert!(Grid::new(64.0, 128, 6, 1.0, 128).is_err());
        assert!(Grid::new(0.0, 128, 128, 1.0, 128).is_err());
    }

    #[test]
    fn fitting_resolves_radius() {
        let g = Grid::fitting(40.0, 2.0 * PI, 2.0 * PI, 8).unwrap();
        assert!(g.max_dilated_norm() >= 40.0);
        assert!((g.ny / 2) as f64 > 40.0);
    }
}
