//! Littlewood-Paley cutoffs and sharp Fourier-region projectors.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZkError};
use crate::field::{SpaceTimeField, SpectralField, C64};
use crate::symbols::dilated_sq;

pub const PLATEAU: f64 = 1.25;
pub const SUPPORT: f64 = 1.6;

fn bump_tail(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// C-infinity step: 0 for s <= 0, 1 for s >= 1.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = bump_tail(s);
        a / (a + bump_tail(1.0 - s))
    }
}

/// Even cutoff: 1 on [-5/4, 5/4], 0 outside [-8/5, 8/5].
pub fn mu(x: f64) -> f64 {
    let r = x.abs();
    if r <= PLATEAU {
        1.0
    } else if r >= SUPPORT {
        0.0
    } else {
        smooth_step((SUPPORT - r) / (SUPPORT - PLATEAU))
    }
}

pub fn psi(x: f64) -> f64 {
    mu(x) - mu(2.0 * x)
}

/// Dyadic number N = 2^n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct Dyadic(u64);

impl Dyadic {
    pub fn new(n: u64) -> Result<Self> {
        if n >= 1 && n.is_power_of_two() {
            Ok(Self(n))
        } else {
            Err(ZkError::contract(format!("{n} is not a dyadic number")))
        }
    }

    pub fn from_exp(e: u32) -> Self {
        Self(1u64 << e)
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64
    }

    /// All dyadic numbers from `lo` to `hi` inclusive.
    pub fn range(lo: u64, hi: u64) -> Result<Vec<Self>> {
        let lo = Self::new(lo)?;
        let hi = Self::new(hi)?;
        let mut v = Vec::new();
        let mut n = lo.0;
        while n <= hi.0 {
            v.push(Self(n));
            n *= 2;
        }
        Ok(v)
    }
}

impl TryFrom<u64> for Dyadic {
    type Error = ZkError;
    fn try_from(n: u64) -> Result<Self> {
        Self::new(n)
    }
}

impl From<Dyadic> for u64 {
    fn from(d: Dyadic) -> u64 {
        d.0
    }
}

/// Shell multiplier psi_N evaluated at dilated norm `r`.
pub fn shell_weight(n: Dyadic, r: f64) -> f64 {
    if n.0 == 1 {
        mu(r)
    } else {
        psi(r / n.value())
    }
}

/// Modulation multiplier eta_L evaluated at `sigma = tau - phi`.
pub fn modulation_weight(l: Dyadic, sigma: f64) -> f64 {
    shell_weight(l, sigma)
}

pub fn psi_n(n: Dyadic, xi: f64, q: i64) -> f64 {
    shell_weight(n, dilated_sq(xi, q as f64).sqrt())
}

pub fn apply_pn(u: &SpectralField, n: Dyadic) -> SpectralField {
    u.map_multiplier(|xi, q| C64::new(psi_n(n, xi, q), 0.0))
}

pub fn apply_pn_st(u: &SpaceTimeField, n: Dyadic) -> SpaceTimeField {
    u.map_spatial(|xi, q| C64::new(psi_n(n, xi, q), 0.0))
}

pub fn apply_ql(u: &SpaceTimeField, l: Dyadic) -> SpaceTimeField {
    u.map_full(|s, _, _| C64::new(modulation_weight(l, s), 0.0))
}

/// Dyadic shells needed to cover dilated norms up to `r_max`.
pub fn shells_up_to(r_max: f64) -> Vec<Dyadic> {
    let mut v = vec![Dyadic(1)];
    let mut n = 2u64;
    while (n as f64) * 5.0 / 8.0 <= r_max * 1.000_001 {
        v.push(Dyadic(n));
        n *= 2;
    }
    v
}

/// Predicate |3 xi^2 - q^2| >= kappa |xi|^alpha and |xi| >= kappa2.
pub fn p_alpha_keeps(xi: f64, q: i64, alpha: f64, kappa: f64, kappa2: f64) -> bool {
    let h = (3.0 * xi * xi - (q * q) as f64).abs();
    xi.abs() >= kappa2 && h >= kappa * xi.abs().powf(alpha)
}

pub fn apply_p_alpha(u: &SpectralField, alpha: f64, kappa: f64, kappa2: f64) -> Result<SpectralField> {
    check_alpha(alpha, kappa, kappa2)?;
    Ok(u.map_multiplier(|xi, q| indicator(p_alpha_keeps(xi, q, alpha, kappa, kappa2))))
}

pub fn apply_p_alpha_st(u: &SpaceTimeField, alpha: f64, kappa: f64, kappa2: f64) -> Result<SpaceTimeField> {
    check_alpha(alpha, kappa, kappa2)?;
    Ok(u.map_spatial(|xi, q| indicator(p_alpha_keeps(xi, q, alpha, kappa, kappa2))))
}

fn check_alpha(alpha: f64, kappa: f64, kappa2: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ZkError::contract(format!("alpha must lie in [0,1], got {alpha}")));
    }
    if kappa <= 0.0 || kappa2 <= 0.0 {
        return Err(ZkError::contract("projector constants must be positive"));
    }
    Ok(())
}

/// |q| <= kappa N^beta.
pub fn qn_beta_keeps(q: i64, n: Dyadic, beta: f64, kappa: f64) -> bool {
    (q.abs() as f64) <= kappa * n.value().powf(beta) * (1.0 + 1e-12)
}

pub fn apply_qn_beta(u: &SpectralField, n: Dyadic, beta: f64, kappa: f64) -> Result<SpectralField> {
    if kappa <= 0.0 {
        return Err(ZkError::contract("kappa must be positive"));
    }
    Ok(u.map_multiplier(|_, q| indicator(qn_beta_keeps(q, n, beta, kappa))))
}

#[inline]
fn indicator(b: bool) -> C64 {
    C64::new(if b { 1.0 } else { 0.0 }, 0.0)
}

/// Sharp frequency regions used by the proofs, serialized as
/// `{"name": ..., params..., "complement": bool}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Region {
    /// |xi| <= |q|^theta.
    XiVsQPower {
        theta: f64,
        #[serde(default)]
        complement: bool,
    },
    /// |3 xi^2 - q^2| > threshold.
    HyperbolaGap {
        threshold: f64,
        #[serde(default)]
        complement: bool,
    },
    /// xi > 0 (or xi < 0 when `positive` is false).
    HalfSpace {
        positive: bool,
        #[serde(default)]
        complement: bool,
    },
    /// Where P^alpha keeps the frequency.
    PAlpha {
        alpha: f64,
        kappa: f64,
        #[serde(default)]
        complement: bool,
    },
    /// Union of boxes [xi_lo, xi_hi] x [q_lo, q_hi].
    CustomIndicator {
        boxes: Vec<(f64, f64, i64, i64)>,
        #[serde(default)]
        complement: bool,
    },
}

impl Region {
    pub fn contains(&self, xi: f64, q: i64) -> bool {
        let (inside, comp) = match self {
            Region::XiVsQPower { theta, complement } => (xi.abs() <= (q.abs() as f64).powf(*theta) * (1.0 + 1e-12), *complement),
            Region::HyperbolaGap { threshold, complement } => {
                ((3.0 * xi * xi - (q * q) as f64).abs() > *threshold, *complement)
            }
            Region::HalfSpace { positive, complement } => {
                (if *positive { xi > 0.0 } else { xi < 0.0 }, *complement)
            }
            Region::PAlpha { alpha, kappa, complement } => (p_alpha_keeps(xi, q, *alpha, *kappa, *kappa), *complement),
            Region::CustomIndicator { boxes, complement } => (
                boxes.iter().any(|&(a, b, c, d)| xi >= a && xi <= b && q >= c && q <= d),
                *complement,
            ),
        };
        inside != comp
    }

    pub fn complement(&self) -> Self {
        let mut r = self.clone();
        match &mut r {
            Region::XiVsQPower { complement, .. }
            | Region::HyperbolaGap { complement, .. }
            | Region::HalfSpace { complement, .. }
            | Region::PAlpha { complement, .. }
            | Region::CustomIndicator { complement, .. } => *complement = !*complement,
        }
        r
    }

    /// Whether the region is symmetric under (xi, q) -> (-xi, -q).
    pub fn preserves_reality(&self) -> bool {
        !matches!(self, Region::HalfSpace { .. } | Region::CustomIndicator { .. })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| ZkError::contract(format!("unknown region descriptor: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("region serializes")
    }
}

pub fn region_projector(u: &SpectralField, region: &Region) -> SpectralField {
    let mut out = u.map_multiplier(|xi, q| indicator(region.contains(xi, q)));
    out.real = u.real && region.preserves_reality();
    out
}

pub fn region_projector_st(u: &SpaceTimeField, region: &Region) -> SpaceTimeField {
    let mut out = u.map_spatial(|xi, q| indicator(region.contains(xi, q)));
    out.real = u.real && region.preserves_reality();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn cutoff_values() {
        assert_eq!(mu(0.0), 1.0);
        assert_eq!(mu(2.0), 0.0);
        assert_eq!(mu(1.25), 1.0);
        assert_eq!(mu(-1.6), 0.0);
        assert!(mu(1.4) > 0.0 && mu(1.4) < 1.0);
        assert_eq!(psi(1.0), 1.0);
        assert_eq!(psi(0.5), 0.0);
        assert_eq!(psi(0.6), 0.0);
        assert_eq!(psi(1.7), 0.0);
    }

    #[test]
    fn shell_examples() {
        assert_eq!(shell_weight(Dyadic::new(1).unwrap(), 0.0), 1.0);
        assert_eq!(shell_weight(Dyadic::new(2).unwrap(), 1.0), 0.0);
        assert!(Dyadic::new(3).is_err());
        assert!(Dyadic::new(0).is_err());
    }

    #[test]
    fn sharp_predicates() {
        assert!(p_alpha_keeps(2.0, 0, 0.0, 1.0, 1.0));
        assert!(!p_alpha_keeps(0.5, 3, 0.0, 1.0, 1.0));
        assert!(p_alpha_keeps(1.0, 2, 0.0, 1.0, 1.0));
        let n16 = Dyadic::new(16).unwrap();
        assert!(qn_beta_keeps(2, n16, 0.25, 1.0));
        assert!(!qn_beta_keeps(3, n16, 0.25, 1.0));
        assert!(qn_beta_keeps(1, n16, 0.0, 1.0));
        assert!(!qn_beta_keeps(2, n16, 0.0, 1.0));
        let one = Dyadic::new(1).unwrap();
        assert!(qn_beta_keeps(3, one, 0.7, 3.0) && !qn_beta_keeps(4, one, 0.7, 3.0));
        let low = Region::XiVsQPower { theta: 2.0 / 3.0, complement: false };
        assert!(low.contains(4.0, 8));
        assert!(!low.complement().contains(4.0, 8));
    }

    #[test]
    fn region_json() {
        let r = Region::from_json(r#"{"name":"hyperbola-gap","threshold":1.0}"#).unwrap();
        assert_eq!(r, Region::HyperbolaGap { threshold: 1.0, complement: false });
        assert_eq!(Region::from_json(&r.to_json()).unwrap(), r);
        assert!(Region::from_json(r#"{"name":"spiral","k":2}"#).is_err());
    }

    #[test]
    fn half_space_breaks_reality() {
        let g = Grid::new(64.0, 16, 16, 1.0, 8).unwrap();
        let mut u = SpectralField::zeros(g, true);
        u.set(1, 1, C64::new(1.0, 0.0));
        u.set(15, 15, C64::new(1.0, 0.0));
        let p = region_projector(&u, &Region::HalfSpace { positive: true, complement: false });
        assert!(!p.real);
        assert!(p.conjugate_symmetry_defect() > 0.5);
    }
}
