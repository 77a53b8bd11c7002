//! Lhs/rhs recipes of every estimate and the test ensembles that feed them.
//!
//! Linear estimates take a free evolution (only the sigma = 0 slot filled)
//! and read u0 off at t = 0. Physical norms go through the sparse evaluator
//! (or the whole-line evaluator when the estimate gains I_x powers in L^2_y),
//! bilinear L^2 norms through the cell model, multilinear ones through the
//! mode-combination product.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cells::{bilinear_l2, CellField, GramOptions, PairSymbol};
use super::ensemble::{sample_data, sample_field, Law, RandomFieldSpec};
use super::multilinear::multilinear_norms;
use super::dispersive::{l2y_mixed_continuum, DispersiveOptions};
use super::physical::{sparse_norm, SparseOptions};
use crate::error::{Result, ZkError};
use crate::field::{SpaceTimeField, SpectralField};
use crate::grid::Grid;
use crate::norms::{apply_weights_st, weights_symbol, xsb, MultiplierWeight, NormSpec, TimeDomain, WeightKind};
use crate::projectors::{p_alpha_keeps, Dyadic, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimateId {
    #[serde(rename = "L4-main")]
    L4Main,
    #[serde(rename = "L4-old")]
    L4Old,
    #[serde(rename = "L4-interp")]
    L4Interp,
    #[serde(rename = "MP-bilinear")]
    MpBilinear,
    #[serde(rename = "MP-dual")]
    MpDual,
    #[serde(rename = "Schr-L4")]
    SchrL4,
    #[serde(rename = "Schr-L6")]
    SchrL6,
    #[serde(rename = "Schr-Lp")]
    SchrLp,
    #[serde(rename = "Airy-L6")]
    AiryL6,
    #[serde(rename = "Airy-endpoint")]
    AiryEndpoint,
    #[serde(rename = "Airy-Lp")]
    AiryLp,
    #[serde(rename = "Airy-L6-L2y")]
    AiryL6L2y,
    #[serde(rename = "Airy-L4-L2y")]
    AiryL4L2y,
    #[serde(rename = "Opt-Lp")]
    OptLp,
    #[serde(rename = "Opt-L6")]
    OptL6,
    #[serde(rename = "L5-Schr")]
    L5Schr,
    #[serde(rename = "L5-Airy")]
    L5Airy,
    #[serde(rename = "L5-Opt")]
    L5Opt,
    #[serde(rename = "Bilin-refine")]
    BilinRefine,
    #[serde(rename = "Bilin-refine-dual")]
    BilinRefineDual,
    #[serde(rename = "Multi-gZK")]
    MultiGzk,
    #[serde(rename = "Tri-mZK")]
    TriMzk,
}

use EstimateId::*;

impl EstimateId {
    pub const ALL: [EstimateId; 22] = [
        L4Main, L4Old, L4Interp, MpBilinear, MpDual, SchrL4, SchrL6, SchrLp, AiryL6, AiryEndpoint, AiryLp, AiryL6L2y,
        AiryL4L2y, OptLp, OptL6, L5Schr, L5Airy, L5Opt, BilinRefine, BilinRefineDual, MultiGzk, TriMzk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            L4Main => "L4-main",
            L4Old => "L4-old",
            L4Interp => "L4-interp",
            MpBilinear => "MP-bilinear",
            MpDual => "MP-dual",
            SchrL4 => "Schr-L4",
            SchrL6 => "Schr-L6",
            SchrLp => "Schr-Lp",
            AiryL6 => "Airy-L6",
            AiryEndpoint => "Airy-endpoint",
            AiryLp => "Airy-Lp",
            AiryL6L2y => "Airy-L6-L2y",
            AiryL4L2y => "Airy-L4-L2y",
            OptLp => "Opt-Lp",
            OptL6 => "Opt-L6",
            L5Schr => "L5-Schr",
            L5Airy => "L5-Airy",
            L5Opt => "L5-Opt",
            BilinRefine => "Bilin-refine",
            BilinRefineDual => "Bilin-refine-dual",
            MultiGzk => "Multi-gZK",
            TriMzk => "Tri-mZK",
        }
    }

    /// Number of input fields.
    pub fn arity(self, params: &EstimateParams) -> usize {
        match self {
            MpBilinear | MpDual | BilinRefine | BilinRefineDual => 2,
            MultiGzk => params.k.unwrap_or(2) as usize + 1,
            TriMzk => 3,
            _ => 1,
        }
    }

    /// Takes initial data (a free evolution) rather than a space-time field.
    pub fn is_linear(self) -> bool {
        matches!(self, SchrL4 | SchrL6 | AiryL6 | AiryEndpoint)
    }
}

impl fmt::Display for EstimateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimateId {
    type Err = ZkError;

    fn from_str(s: &str) -> Result<Self> {
        EstimateId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ZkError::config("estimate", format!("unknown estimate id {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateParams {
    pub eps: f64,
    pub b: f64,
    /// Lebesgue exponent of the *-Lp estimates.
    pub p: Option<f64>,
    pub alpha: Option<f64>,
    pub k: Option<u32>,
    /// Regularity: required by the multilinear estimates; elsewhere it
    /// replaces the rhs spatial exponent (used to falsify on purpose).
    pub s: Option<f64>,
    /// Half-length of the restricted time interval.
    #[serde(rename = "T")]
    pub t: f64,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self { eps: 0.05, b: 0.55, p: None, alpha: None, k: None, s: None, t: 1.0 }
    }
}

/// Numerical settings of the physical-norm evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub sparse: SparseOptions,
    pub dispersive: DispersiveOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quotient {
    pub lhs: f64,
    pub rhs: f64,
    pub quotient: f64,
}

fn w(kind: WeightKind, s: f64) -> MultiplierWeight {
    MultiplierWeight::new(kind, s)
}

fn need(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(ZkError::contract(msg))
    }
}

impl EstimateParams {
    fn p_in_range(&self, default: f64) -> Result<f64> {
        let p = self.p.unwrap_or(default);
        need((2.0..=6.0).contains(&p), "p must lie in [2, 6]")?;
        Ok(p)
    }

    /// Checks the hypotheses of `id`.
    pub fn check(&self, id: EstimateId) -> Result<()> {
        need(self.eps > 0.0 && self.eps < 0.25, "eps must lie in (0, 1/4)")?;
        need(self.t > 0.0, "T must be positive")?;
        match id {
            L4Main | SchrLp | AiryLp | AiryL6L2y | OptLp | OptL6 | L5Schr | L5Airy | L5Opt | BilinRefine | MpBilinear => {
                need(self.b > 0.5, "b must exceed 1/2")?
            }
            _ => {}
        }
        match id {
            SchrLp | AiryLp | OptLp => {
                self.p_in_range(4.0)?;
            }
            BilinRefine | BilinRefineDual => {
                let a = self.alpha.unwrap_or(1.0);
                need((0.0..=1.0).contains(&a), "alpha must lie in [0, 1]")?
            }
            MultiGzk => {
                need(self.k.unwrap_or(2) >= 2, "k must be at least 2")?;
                need(self.s.is_some(), "multilinear estimates need s")?
            }
            TriMzk => need(self.s.is_some(), "multilinear estimates need s")?,
            _ => {}
        }
        Ok(())
    }
}

/// L^2_xy norm of (weights) u0, through Parseval.
fn data_l2(u0: &SpectralField, ws: &[MultiplierWeight]) -> Result<f64> {
    let g = u0.grid;
    let mut acc = 0.0;
    for a in 0..g.nx {
        for b in 0..g.ny {
            let c = u0.get(a, b);
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let m = weights_symbol(ws, g.xi(a), g.q(b)).ok_or(ZkError::SingularWeight { order: 0.0 })?;
            acc += m * m * c.norm_sqr();
        }
    }
    Ok((acc * g.dxi()).sqrt() / (2.0 * PI))
}

fn weighted_xsb(u: &SpaceTimeField, ws: &[MultiplierWeight], s: f64, b: f64) -> Result<f64> {
    if ws.is_empty() {
        Ok(xsb(u, s, b))
    } else {
        Ok(xsb(&apply_weights_st(u, ws)?, s, b))
    }
}

fn weighted_norm(u: &SpaceTimeField, ws: &[MultiplierWeight], spec: NormSpec, opt: &SparseOptions) -> Result<f64> {
    if ws.is_empty() {
        sparse_norm(u, &spec, opt)
    } else {
        sparse_norm(&apply_weights_st(u, ws)?, &spec, opt)
    }
}

fn lp(p: f64, time: TimeDomain) -> NormSpec {
    NormSpec::Lp { p, time }
}

/// lhs and rhs of estimate `id` on `inputs`.
pub fn quotient(id: EstimateId, params: &EstimateParams, inputs: &[SpaceTimeField], eval: &EvalOptions) -> Result<Quotient> {
    let opt = &eval.sparse;
    params.check(id)?;
    if inputs.len() != id.arity(params) {
        return Err(ZkError::contract(format!("{id} takes {} inputs, got {}", id.arity(params), inputs.len())));
    }
    let (eps, b) = (params.eps, params.b);
    let tr = TimeDomain::Restricted(params.t);
    let win = TimeDomain::Window;
    let u = &inputs[0];
    let sw = |default: f64| params.s.unwrap_or(default);

    let (lhs, rhs) = if id.is_linear() {
        let g = u.grid;
        let zero_slot = (1..g.nt).all(|m| (0..g.nx).all(|a| (0..g.ny).all(|c| u.get(m, a, c).norm_sqr() == 0.0)));
        need(zero_slot, "linear estimates take a free evolution")?;
        let u0 = u.time_sample(0.0);
        match id {
            SchrL4 => (sparse_norm(u, &lp(4.0, tr), opt)?, data_l2(&u0, &[w(WeightKind::Jx, 0.25)])?),
            SchrL6 => (
                sparse_norm(u, &lp(6.0, tr), opt)?,
                data_l2(&u0, &[w(WeightKind::Jx, 1.0 / 3.0), w(WeightKind::Jy, eps)])?,
            ),
            AiryL6 => (
                weighted_norm(u, &[w(WeightKind::Ix, 1.0 / 6.0)], lp(6.0, win), opt)?,
                data_l2(&u0, &[w(WeightKind::Iy, 1.0 / 3.0)])?,
            ),
            AiryEndpoint => (
                l2y_mixed_continuum(u, &[w(WeightKind::Ix, 0.25)], 4.0, f64::INFINITY, win, &eval.dispersive)?,
                data_l2(&u0, &[])?,
            ),
            _ => unreachable!(),
        }
    } else {
        match id {
            L4Main => (sparse_norm(u, &lp(4.0, win), opt)?, xsb(u, sw(eps), b)),
            L4Old => (sparse_norm(u, &lp(4.0, win), opt)?, xsb(u, sw(1.0 / 6.0), 0.375)),
            L4Interp => (sparse_norm(u, &lp(params.p.unwrap_or(3.9), win), opt)?, xsb(u, sw(eps), 0.45)),
            SchrLp => {
                let p = params.p_in_range(4.0)?;
                let th = 1.5 - 3.0 / p;
                (
                    sparse_norm(u, &lp(p, tr), opt)?,
                    weighted_xsb(u, &[w(WeightKind::Jx, 0.5 - 1.0 / p), w(WeightKind::Jy, th * eps)], sw(0.0), th * b)?,
                )
            }
            AiryLp => {
                let p = params.p_in_range(4.0)?;
                (
                    weighted_norm(u, &[w(WeightKind::Ix, 0.25 - 0.5 / p)], lp(p, win), opt)?,
                    weighted_xsb(u, &[w(WeightKind::Iy, 0.5 - 1.0 / p)], sw(0.0), (1.5 - 3.0 / p) * b)?,
                )
            }
            AiryL6L2y => (
                l2y_mixed_continuum(u, &[w(WeightKind::Ix, 1.0 / 6.0)], 6.0, 6.0, win, &eval.dispersive)?,
                xsb(u, sw(0.0), b),
            ),
            AiryL4L2y => (
                l2y_mixed_continuum(u, &[w(WeightKind::Ix, 0.125)], 4.0, 4.0, win, &eval.dispersive)?,
                xsb(u, sw(0.0), 0.375 + eps),
            ),
            OptLp => {
                let p = params.p_in_range(4.0)?;
                let s = 1.0 / 3.0 - 2.0 / (3.0 * p) + (0.5 - 1.0 / p) * eps;
                (sparse_norm(u, &lp(p, tr), opt)?, xsb(u, sw(s), (1.5 - 3.0 / p) * b))
            }
            OptL6 => (sparse_norm(u, &lp(6.0, tr), opt)?, xsb(u, sw(2.0 / 9.0 + eps), b)),
            L5Schr => (sparse_norm(u, &lp(5.0, tr), opt)?, weighted_xsb(u, &[w(WeightKind::Jx, 0.2)], sw(eps), b)?),
            L5Airy => (
                weighted_norm(u, &[w(WeightKind::Ix, 0.1)], lp(5.0, win), opt)?,
                weighted_xsb(u, &[w(WeightKind::Iy, 0.2)], sw(eps), b)?,
            ),
            L5Opt => (sparse_norm(u, &lp(5.0, tr), opt)?, xsb(u, sw(2.0 / 15.0 + eps), b)),
            MpBilinear | MpDual => {
                let v = &inputs[1];
                let lhs = bilinear_l2(
                    &CellField::from_space_time(u),
                    &CellField::from_space_time(v),
                    PairSymbol::Mp,
                    &|_, _| 1.0,
                    &GramOptions::default(),
                )?;
                let rhs = if id == MpBilinear {
                    weighted_xsb(u, &[w(WeightKind::Jy, 0.5 + eps)], 0.0, b)? * xsb(v, 0.0, b)
                } else {
                    xsb(u, 0.5 + eps, 0.45) * xsb(v, eps, 0.45)
                };
                (lhs, rhs)
            }
            BilinRefine | BilinRefineDual => {
                let v = &inputs[1];
                let alpha = params.alpha.unwrap_or(1.0);
                let out = move |xi: f64, q: i64| {
                    if p_alpha_keeps(xi, q, alpha, 1.0, 1.0) {
                        xi.abs().powf(alpha / 4.0)
                    } else {
                        0.0
                    }
                };
                let lhs = bilinear_l2(
                    &CellField::from_space_time(u),
                    &CellField::from_space_time(v),
                    PairSymbol::One,
                    &out,
                    &GramOptions::default(),
                )?;
                let bb = if id == BilinRefine { b } else { 0.45 };
                (lhs, xsb(u, sw(eps), bb) * xsb(v, sw(eps), bb))
            }
            MultiGzk => multilinear_norms(params.k.unwrap_or(2), sw(0.0), eps, inputs)?,
            TriMzk => multilinear_norms(2, sw(0.0), eps, inputs)?,
            _ => unreachable!(),
        }
    };
    if !(rhs > 0.0) {
        return Err(ZkError::Degenerate(format!("{id}: rhs vanishes")));
    }
    Ok(Quotient { lhs, rhs, quotient: lhs / rhs })
}

/// Box of side 2 pi in x, t (unit lattice spacings) resolving shell `n`.
pub fn shell_grid(n: Dyadic) -> Result<Grid> {
    Grid::fitting(1.6 * n.value(), 2.0 * PI, 2.0 * PI, 8)
}

/// How the test inputs of one sample are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSpec {
    pub law: Law,
    /// Cells per factor drawn by the single-shell law.
    pub modes: usize,
    /// Modulation shell.
    #[serde(rename = "L")]
    pub l: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self { law: Law::SingleShell, modes: 12, l: 1 }
    }
}

/// Draws the inputs of `id` for shell `n`.
pub fn sample_inputs(id: EstimateId, params: &EstimateParams, ens: &EnsembleSpec, n: Dyadic, seed: u64) -> Result<Vec<SpaceTimeField>> {
    let grid = shell_grid(n)?;
    let l = Dyadic::new(ens.l)?;
    let spec = |n: Dyadic, seed: u64| RandomFieldSpec::new(n, l, ens.law, seed).with_modes(ens.modes);
    if id.is_linear() {
        let u0 = sample_data(grid, &spec(n, seed))?;
        return Ok(vec![SpaceTimeField::from_free_evolution(&u0, grid.tw, grid.nt)?]);
    }
    match id {
        MpBilinear | MpDual => Ok(vec![sample_field(grid, &spec(n, seed))?, sample_field(grid, &spec(Dyadic::new(1)?, seed ^ 1))?]),
        BilinRefine | BilinRefineDual => {
            let region = Region::PAlpha { alpha: params.alpha.unwrap_or(1.0), kappa: 1.0, complement: false };
            Ok(vec![
                sample_field(grid, &spec(n, seed).with_region(region.clone()))?,
                sample_field(grid, &spec(n, seed ^ 1).with_region(region))?,
            ])
        }
        _ => {
            let m = id.arity(params);
            // keep (2 modes)^(k+1) combinations affordable
            let modes = if m > 3 { ens.modes.min(6) } else { ens.modes };
            (0..m)
                .map(|i| sample_field(grid, &RandomFieldSpec { modes, ..spec(n, seed.wrapping_add(i as u64 * 0x9e37)) }))
                .collect()
        }
    }
}
