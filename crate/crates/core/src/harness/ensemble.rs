//! Reproducible random test fields localized to a frequency shell and a
//! modulation shell.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZkError};
use crate::field::{SpaceTimeField, SpectralField, C64};
use crate::grid::{signed_index, Grid};
use crate::projectors::{modulation_weight, psi_n, Dyadic, Region};
use crate::symbols::dilated_sq;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    /// Gaussian coefficients on every cell, tapered by psi_N eta_L.
    GaussianCoefficients,
    /// A few random cells where psi_N = eta_L = 1.
    SingleShell,
    /// Gaussian coefficients on shell N with |tau - phi| <= L.
    CharacteristicConcentrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFieldSpec {
    pub n: Dyadic,
    pub l: Dyadic,
    pub law: Law,
    pub seed: u64,
    /// Cells drawn by the single-shell law (before symmetrization).
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Restricts the spatial support (transversal ensembles).
    #[serde(default)]
    pub region: Option<Region>,
}

fn default_modes() -> usize {
    12
}

impl RandomFieldSpec {
    pub fn new(n: Dyadic, l: Dyadic, law: Law, seed: u64) -> Self {
        Self { n, l, law, seed, modes: default_modes(), region: None }
    }

    pub fn with_region(mut self, r: Region) -> Self {
        self.region = Some(r);
        self
    }

    pub fn with_modes(mut self, m: usize) -> Self {
        self.modes = m;
        self
    }
}

/// Plateau of the shell multiplier in units of N: where psi_N (mu for N = 1) is 1.
fn plateau(n: Dyadic) -> (f64, f64) {
    if n.get() == 1 {
        (0.0, 1.25)
    } else {
        (0.8 * n.value(), 1.25 * n.value())
    }
}

fn in_plateau(n: Dyadic, r: f64) -> bool {
    let (lo, hi) = plateau(n);
    r >= lo && r <= hi
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Checks that shell N and modulation L fit inside the grid.
pub fn check_resolves(grid: &Grid, n: Dyadic, l: Dyadic) -> Result<()> {
    let r = 1.6 * n.value();
    let xi_max = (grid.nx / 2 - 1) as f64 * grid.dxi();
    let q_max = (grid.ny / 2 - 1) as f64;
    if r / 3f64.sqrt() > xi_max || r > q_max {
        return Err(ZkError::contract(format!("shell N = {} exceeds the grid", n.get())));
    }
    if 1.6 * l.value() > (grid.nt / 2 - 1) as f64 * grid.dsigma() {
        return Err(ZkError::contract(format!("modulation L = {} exceeds the grid", l.get())));
    }
    Ok(())
}

fn spatial_ok(spec: &RandomFieldSpec, xi: f64, q: i64) -> bool {
    spec.region.as_ref().is_none_or(|r| r.contains(xi, q))
}

/// Draws a real space-time field in the modulation frame.
pub fn sample_field(grid: Grid, spec: &RandomFieldSpec) -> Result<SpaceTimeField> {
    check_resolves(&grid, spec.n, spec.l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut u = SpaceTimeField::zeros(grid, true);
    match spec.law {
        Law::SingleShell => {
            let mut cells = Vec::new();
            for m in 0..grid.nt {
                let s = grid.sigma(m);
                let keep_s = if spec.l.get() == 1 { s.abs() <= 1.25 } else { in_plateau(spec.l, s.abs()) };
                if !keep_s {
                    continue;
                }
                for a in 0..grid.nx {
                    for b in 0..grid.ny {
                        let (xi, q) = (grid.xi(a), grid.q(b));
                        if in_plateau(spec.n, dilated_sq(xi, q as f64).sqrt()) && spatial_ok(spec, xi, q) {
                            cells.push((m, a, b));
                        }
                    }
                }
            }
            if cells.is_empty() {
                return Err(ZkError::contract("no lattice cell in the requested shell"));
            }
            let picks = sample(&mut rng, cells.len(), spec.modes.min(cells.len()));
            for i in picks.iter() {
                let (m, a, b) = cells[i];
                u.set(m, a, b, gaussian(&mut rng));
            }
        }
        Law::GaussianCoefficients | Law::CharacteristicConcentrated => {
            for m in 0..grid.nt {
                let s = grid.sigma(m);
                let ws = match spec.law {
                    Law::GaussianCoefficients => modulation_weight(spec.l, s),
                    _ => f64::from(u8::from(s.abs() <= spec.l.value())),
                };
                for a in 0..grid.nx {
                    for b in 0..grid.ny {
                        let g = gaussian(&mut rng);
                        let (xi, q) = (grid.xi(a), grid.q(b));
                        let w = ws * psi_n(spec.n, xi, q);
                        if w > 0.0 && spatial_ok(spec, xi, q) {
                            u.set(m, a, b, g * w);
                        }
                    }
                }
            }
        }
    }
    Ok(u.symmetrize())
}

/// Draws real initial data on shell N (the modulation shell is ignored).
pub fn sample_data(grid: Grid, spec: &RandomFieldSpec) -> Result<SpectralField> {
    let g1 = Grid { nt: 8, ..grid };
    let spec1 = RandomFieldSpec { l: Dyadic::new(1)?, ..spec.clone() };
    let u = sample_field(g1, &spec1)?;
    let mut out = SpectralField::zeros(grid, true);
    for m in 0..g1.nt {
        for a in 0..grid.nx {
            for b in 0..grid.ny {
                let i = a * grid.ny + b;
                out.coeffs[i] += u.get(m, a, b);
            }
        }
    }
    Ok(out)
}

/// Largest |signed index| that carries a nonzero coefficient, per axis (m, a, b).
pub fn support_extent(u: &SpaceTimeField) -> (i64, i64, i64) {
    let g = u.grid;
    let mut e = (0, 0, 0);
    for m in 0..g.nt {
        for a in 0..g.nx {
            for b in 0..g.ny {
                if u.get(m, a, b).norm_sqr() > 0.0 {
                    e.0 = e.0.max(signed_index(m, g.nt).abs());
                    e.1 = e.1.max(signed_index(a, g.nx).abs());
                    e.2 = e.2.max(signed_index(b, g.ny).abs());
                }
            }
        }
    }
    e
}
