//! Scalar symbols on the (xi, q) frequency plane.
//!
//! The polynomial symbols are written once, generically over `num_traits::Num`,
//! so the same code runs in `f64` and in exact rational arithmetic.

use num_traits::{FromPrimitive, Num};

use crate::grid::FrequencyPoint;

#[inline]
fn c<T: FromPrimitive>(v: i64) -> T {
    T::from_i64(v).expect("small integer constant")
}

/// xi (xi^2 + q^2).
pub fn phase_g<T: Num + Clone>(xi: &T, q: &T) -> T {
    xi.clone() * (xi.clone() * xi.clone() + q.clone() * q.clone())
}

/// Squared dilated norm 3 xi^2 + q^2.
pub fn dilated_sq_g<T: Num + Clone + FromPrimitive>(xi: &T, q: &T) -> T {
    c::<T>(3) * xi.clone() * xi.clone() + q.clone() * q.clone()
}

/// xi (3x^2 + y^2) + 2 q x y.
pub fn p_poly_g<T: Num + Clone + FromPrimitive>(xi: &T, q: &T, x: &T, y: &T) -> T {
    xi.clone() * (c::<T>(3) * x.clone() * x.clone() + y.clone() * y.clone())
        + c::<T>(2) * q.clone() * x.clone() * y.clone()
}

/// phi(xi1, q1) + phi(xi - xi1, q - q1).
pub fn phase_pair_sum_g<T: Num + Clone>(xi: &T, q: &T, xi1: &T, q1: &T) -> T {
    phase_g(xi1, q1) + phase_g(&(xi.clone() - xi1.clone()), &(q.clone() - q1.clone()))
}

/// p(xi~1, q~1 + h) + (xi/4)(xi^2 + q^2) with xi~1 = xi1 - xi/2 and
/// q~1 = q1 - q/2 - h; `h` is passed in so rational callers can use h(q).
pub fn substitution_rhs_g<T: Num + Clone + FromPrimitive>(xi: &T, q: &T, xi1: &T, q1: &T, h: &T) -> T {
    let two = c::<T>(2);
    let xt = xi1.clone() - xi.clone() / two.clone();
    let qt = q1.clone() - q.clone() / two - h.clone();
    p_poly_g(xi, q, &xt, &(qt + h.clone())) + xi.clone() / c::<T>(4) * (xi.clone() * xi.clone() + q.clone() * q.clone())
}

pub fn resonance2_g<T: Num + Clone>(xi: &T, q: &T, xi1: &T, q1: &T) -> T {
    phase_g(xi, q) - phase_pair_sum_g(xi, q, xi1, q1)
}

/// phi(xi0, q0) - sum phi(xi_i, q_i) with (xi0, q0) the sum of the three inputs.
pub fn resonance3_g<T: Num + Clone>(p: [(&T, &T); 3]) -> T {
    let xi0 = p[0].0.clone() + p[1].0.clone() + p[2].0.clone();
    let q0 = p[0].1.clone() + p[1].1.clone() + p[2].1.clone();
    let mut r = phase_g(&xi0, &q0);
    for (xi, q) in p {
        r = r - phase_g(xi, q);
    }
    r
}

/// -6 (xi1+xi2)(xi1+xi3)(xi2+xi3) + sum xi_i (|(xi0,q0)|^2 - |(xi_i,q_i)|^2).
pub fn resonance3_factored_g<T: Num + Clone + FromPrimitive>(p: [(&T, &T); 3]) -> T {
    let (x1, x2, x3) = (p[0].0.clone(), p[1].0.clone(), p[2].0.clone());
    let xi0 = x1.clone() + x2.clone() + x3.clone();
    let q0 = p[0].1.clone() + p[1].1.clone() + p[2].1.clone();
    let n0 = dilated_sq_g(&xi0, &q0);
    let mut r = c::<T>(-6) * (x1.clone() + x2.clone()) * (x1.clone() + x3.clone()) * (x2 + x3);
    for (xi, q) in p {
        r = r + xi.clone() * (n0.clone() - dilated_sq_g(xi, q));
    }
    r
}

/// 12 (xi1+xi2)(xi1+xi3)(xi2+xi3) + xi0(q0^2 - 3 xi0^2) - sum xi_i (q_i^2 - 3 xi_i^2).
pub fn resonance3_rewritten_g<T: Num + Clone + FromPrimitive>(p: [(&T, &T); 3]) -> T {
    let (x1, x2, x3) = (p[0].0.clone(), p[1].0.clone(), p[2].0.clone());
    let xi0 = x1.clone() + x2.clone() + x3.clone();
    let q0 = p[0].1.clone() + p[1].1.clone() + p[2].1.clone();
    let hyp = |xi: &T, q: &T| xi.clone() * (q.clone() * q.clone() - c::<T>(3) * xi.clone() * xi.clone());
    let mut r = c::<T>(12) * (x1.clone() + x2.clone()) * (x1.clone() + x3.clone()) * (x2 + x3) + hyp(&xi0, &q0);
    for (xi, q) in p {
        r = r - hyp(xi, q);
    }
    r
}

pub fn phase(p: FrequencyPoint) -> f64 {
    phase_g(&p.xi, &(p.q as f64))
}

pub fn dilated_norm(p: FrequencyPoint) -> f64 {
    dilated_sq(p.xi, p.q as f64).sqrt()
}

#[inline]
pub fn dilated_sq(xi: f64, q: f64) -> f64 {
    3.0 * xi * xi + q * q
}

/// Euclidean length of (xi, q).
#[inline]
pub fn euclid(xi: f64, q: f64) -> f64 {
    (xi * xi + q * q).sqrt()
}

/// <x> = (1 + x^2)^(1/2) for a scalar.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// <(xi, q)> = (1 + xi^2 + q^2)^(1/2).
#[inline]
pub fn bracket_pair(xi: f64, q: f64) -> f64 {
    (1.0 + xi * xi + q * q).sqrt()
}

/// 0 for even q, 1/2 for odd q.
#[inline]
pub fn h_parity(q: i64) -> f64 {
    if q.rem_euclid(2) == 0 {
        0.0
    } else {
        0.5
    }
}

pub fn p_poly(xi: f64, q: i64, x: f64, y: f64) -> f64 {
    p_poly_g(&xi, &(q as f64), &x, &y)
}

pub fn phase_pair_sum(p: FrequencyPoint, p1: FrequencyPoint) -> f64 {
    phase_pair_sum_g(&p.xi, &(p.q as f64), &p1.xi, &(p1.q as f64))
}

/// Substituted form of `phase_pair_sum` built from `p_poly` and `h_parity`.
pub fn phase_pair_sum_substituted(p: FrequencyPoint, p1: FrequencyPoint) -> f64 {
    substitution_rhs_g(&p.xi, &(p.q as f64), &p1.xi, &(p1.q as f64), &h_parity(p.q))
}

pub fn resonance2(p: FrequencyPoint, p1: FrequencyPoint) -> f64 {
    resonance2_g(&p.xi, &(p.q as f64), &p1.xi, &(p1.q as f64))
}

fn triple(ps: [FrequencyPoint; 3]) -> [(f64, f64); 3] {
    ps.map(|p| (p.xi, p.q as f64))
}

pub fn resonance3(p1: FrequencyPoint, p2: FrequencyPoint, p3: FrequencyPoint) -> f64 {
    let t = triple([p1, p2, p3]);
    resonance3_g([(&t[0].0, &t[0].1), (&t[1].0, &t[1].1), (&t[2].0, &t[2].1)])
}

pub fn resonance3_factored(p1: FrequencyPoint, p2: FrequencyPoint, p3: FrequencyPoint) -> f64 {
    let t = triple([p1, p2, p3]);
    resonance3_factored_g([(&t[0].0, &t[0].1), (&t[1].0, &t[1].1), (&t[2].0, &t[2].1)])
}

pub fn resonance3_rewritten(p1: FrequencyPoint, p2: FrequencyPoint, p3: FrequencyPoint) -> f64 {
    let t = triple([p1, p2, p3]);
    resonance3_rewritten_g([(&t[0].0, &t[0].1), (&t[1].0, &t[1].1), (&t[2].0, &t[2].1)])
}

/// Lower bound 12|xi1+xi2||xi1+xi3||xi2+xi3| - 6|xi_max| sum_{i=0..3} |sqrt3 xi_i - q_i||sqrt3 xi_i + q_i|
/// for the cubic resonance, where index 0 is the sum frequency.
pub fn resonance3_lower_bound(p1: FrequencyPoint, p2: FrequencyPoint, p3: FrequencyPoint) -> f64 {
    let ps = [p1, p2, p3];
    let xi0 = p1.xi + p2.xi + p3.xi;
    let q0 = (p1.q + p2.q + p3.q) as f64;
    let s3 = 3f64.sqrt();
    let all = [(xi0, q0), (p1.xi, p1.q as f64), (p2.xi, p2.q as f64), (p3.xi, p3.q as f64)];
    let xi_max = all.iter().map(|(x, _)| x.abs()).fold(0.0, f64::max);
    let gap: f64 = all.iter().map(|(x, q)| (s3 * x - q).abs() * (s3 * x + q).abs()).sum();
    12.0 * (ps[0].xi + ps[1].xi).abs() * (ps[0].xi + ps[2].xi).abs() * (ps[1].xi + ps[2].xi).abs() - 6.0 * xi_max * gap
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(xi: f64, q: i64) -> FrequencyPoint {
        FrequencyPoint::new(xi, q)
    }

    #[test]
    fn hand_values() {
        assert_eq!(phase(fp(0.0, 5)), 0.0);
        assert_eq!(phase(fp(1.0, 0)), 1.0);
        assert_eq!(phase(fp(2.0, 3)), 26.0);
        assert_eq!(dilated_norm(fp(0.0, 0)), 0.0);
        assert_eq!(dilated_norm(fp(1.0, 1)), 2.0);
        assert!((dilated_norm(fp(2.0, 3)) - 21f64.sqrt()).abs() < 1e-15);
        assert_eq!(bracket(0.0), 1.0);
        assert_eq!(bracket_pair(0.0, 0.0), 1.0);
        assert!((bracket_pair(2.0, 3.0) - 14f64.sqrt()).abs() < 1e-15);
        assert_eq!(h_parity(0), 0.0);
        assert_eq!(h_parity(7), 0.5);
        assert_eq!(h_parity(-4), 0.0);
        assert_eq!(h_parity(-3), 0.5);
        assert_eq!(p_poly(3.0, 2, 0.0, 0.0), 0.0);
        assert_eq!(p_poly(1.0, 0, 1.0, 1.0), 4.0);
        assert_eq!(p_poly(1.0, 2, 1.0, 1.0), 8.0);
    }

    #[test]
    fn pair_sum_and_resonance_examples() {
        assert_eq!(phase_pair_sum(fp(2.0, 0), fp(0.0, 0)), 8.0);
        assert_eq!(phase_pair_sum_substituted(fp(2.0, 0), fp(0.0, 0)), 8.0);
        // xi1 = xi/2 and q1 = q/2, so both arguments of p vanish
        let (xi, q) = (3.0, 4);
        let q1 = 2;
        let expect = xi / 4.0 * (xi * xi + (q * q) as f64);
        assert!((phase_pair_sum_substituted(fp(xi, q), fp(xi / 2.0, q1)) - expect).abs() < 1e-12);
        assert!((phase_pair_sum(fp(xi, q), fp(xi / 2.0, q1)) - expect).abs() < 1e-12);
        assert_eq!(resonance2(fp(2.0, 0), fp(1.0, 1)), 4.0);
        assert_eq!(resonance2(fp(2.0, 3), fp(2.0, 3)), 0.0);
        assert_eq!(resonance2(fp(2.0, 3), fp(0.0, 0)), 0.0);
    }

    #[test]
    fn cubic_resonance_examples() {
        let a = fp(1.0, 0);
        assert_eq!(resonance3(a, a, a), 24.0);
        assert_eq!(resonance3_factored(a, a, a), 24.0);
        assert_eq!(resonance3_rewritten(a, a, a), 24.0);
        let p1 = fp(1.5, 2);
        let p2 = fp(-1.5, -2);
        let p3 = fp(0.25, 7);
        assert_eq!(resonance3(p1, p2, p3), 0.0);
        assert_eq!(resonance3_factored(p1, p2, p3), 0.0);
    }
}
