//! Bilinear L^2 norms in the cell-continuum model.
//!
//! A lattice coefficient c at (sigma, xi, q) stands for the function equal to
//! c on the box |xi' - xi| <= dxi/2, |tau - phi(xi', q) - sigma| <= dsigma/2.
//! The product of two cells is then a continuous function of (tau, xi), and
//! the L^2 norm of a sum of such products is a sum of Gram integrals
//!
//!   int dxi int int m_P(x) m_Q(y) K(rho_P(x) - rho_Q(y) + s_P - s_Q) dx dy
//!
//! with K the autocorrelation of the tau-overlap triangle. rho is quadratic
//! in x, so it is linearized on short pieces and the double integral over
//! each pair of pieces is closed-form through the second antiderivative of K.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Result, ZkError};
use crate::field::{SpaceTimeField, C64};
use crate::norms::{weights_symbol, MultiplierWeight};
use crate::symbols::{bracket, bracket_pair, dilated_sq, phase_g};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub xi: f64,
    pub q: i64,
    pub sigma: f64,
    pub amp: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub dxi: f64,
    pub dsigma: f64,
    pub cells: Vec<Cell>,
}

impl CellField {
    pub fn from_space_time(u: &SpaceTimeField) -> Self {
        let cells = u
            .nonzero_modes()
            .into_iter()
            .map(|(sigma, xi, q, amp)| Cell { xi, q, sigma, amp })
            .collect();
        Self { dxi: u.grid.dxi(), dsigma: u.grid.dsigma(), cells }
    }

    /// Midpoint X_{s,b} norm of (product of `weights`) u.
    pub fn xsb(&self, s: f64, b: f64, weights: &[MultiplierWeight]) -> Result<f64> {
        let mut acc = 0.0;
        for c in &self.cells {
            let w = weights_symbol(weights, c.xi, c.q).ok_or(ZkError::SingularWeight {
                order: weights.iter().map(|w| w.s).fold(0.0, f64::min),
            })?;
            acc += (w * bracket_pair(c.xi, c.q as f64).powf(s) * bracket(c.sigma).powf(b)).powi(2) * c.amp.norm_sqr();
        }
        Ok((acc * self.dxi * self.dsigma).sqrt())
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|c| c.amp.norm_sqr() == 0.0)
    }
}

/// Symbol inside the convolution integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSymbol {
    One,
    /// ||(x1, q1)|^2 - |(x2, q2)|^2|^{1/2}
    Mp,
}

impl PairSymbol {
    fn eval(self, x1: f64, q1: i64, x2: f64, q2: i64) -> f64 {
        match self {
            PairSymbol::One => 1.0,
            PairSymbol::Mp => (dilated_sq(x1, q1 as f64) - dilated_sq(x2, q2 as f64)).abs().sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramOptions {
    /// Allowed deviation of rho from its linearization, in units of dsigma.
    pub lin_tol: f64,
    /// Gauss-Legendre nodes per smooth xi piece.
    pub outer_nodes: usize,
    pub max_pieces: usize,
}

impl Default for GramOptions {
    fn default() -> Self {
        Self { lin_tol: 0.02, outer_nodes: 8, max_pieces: 400 }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// K = (tau-overlap triangle) autocorrelation: four unit boxes of width d
/// convolved, support [-2d, 2d], total mass d^4. Values and antiderivatives.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    d: f64,
}

impl Kernel {
    fn truncated(&self, z: f64, pow: i32, fact: f64) -> f64 {
        const C: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];
        let mut acc = 0.0;
        for (i, c) in C.iter().enumerate() {
            let w = z + 2.0 * self.d - i as f64 * self.d;
            if w > 0.0 {
                acc += c * w.powi(pow);
            }
        }
        acc / fact
    }

    fn k0(&self, z: f64) -> f64 {
        if z.abs() >= 2.0 * self.d {
            0.0
        } else {
            // symmetric, evaluate on the left half for accuracy
            self.truncated(-z.abs(), 3, 6.0)
        }
    }

    fn k1(&self, z: f64) -> f64 {
        let m = self.d.powi(4);
        if z <= -2.0 * self.d {
            0.0
        } else if z >= 2.0 * self.d {
            m
        } else if z <= 0.0 {
            self.truncated(z, 4, 24.0)
        } else {
            m - self.truncated(-z, 4, 24.0)
        }
    }

    fn k2(&self, z: f64) -> f64 {
        let m = self.d.powi(4);
        if z <= -2.0 * self.d {
            0.0
        } else if z >= 2.0 * self.d {
            m * z
        } else if z <= 0.0 {
            self.truncated(z, 5, 120.0)
        } else {
            // K2(z) - K2(-z) = m z by symmetry of K
            m * z + self.truncated(-z, 5, 120.0)
        }
    }

    /// int_{-hx/2}^{hx/2} int_{-hy/2}^{hy/2} K(c + b u - g v) du dv.
    fn rect(&self, c: f64, b: f64, hx: f64, g: f64, hy: f64) -> f64 {
        let reach = 2.0 * self.d + (b * hx).abs() / 2.0 + (g * hy).abs() / 2.0;
        if c.abs() >= reach {
            return 0.0;
        }
        let thr = 1e-4 * self.d;
        let bx = (b * hx).abs() > thr;
        let gy = (g * hy).abs() > thr;
        match (bx, gy) {
            (true, true) => {
                let (u0, u1) = (-hx / 2.0, hx / 2.0);
                let (v0, v1) = (-hy / 2.0, hy / 2.0);
                let f = |u: f64, v: f64| self.k2(c + b * u - g * v);
                (f(u1, v1) - f(u0, v1) - f(u1, v0) + f(u0, v0)) / (-b * g)
            }
            (true, false) => hy * (self.k1(c + b * hx / 2.0) - self.k1(c - b * hx / 2.0)) / b,
            (false, true) => hx * (self.k1(c + g * hy / 2.0) - self.k1(c - g * hy / 2.0)) / g,
            (false, false) => hx * hy * self.k0(c),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    xa: f64,
    qa: i64,
    xb: f64,
    qb: i64,
    s: f64,
    amp: C64,
}

impl Pair {
    fn center(&self) -> f64 {
        self.xa + self.xb
    }

    /// x-range of the first factor's frequency for output xi.
    fn slice(&self, xi: f64, dxi: f64) -> Option<(f64, f64)> {
        let lo = (self.xa - dxi / 2.0).max(xi - self.xb - dxi / 2.0);
        let hi = (self.xa + dxi / 2.0).min(xi - self.xb + dxi / 2.0);
        (hi > lo).then_some((lo, hi))
    }

    fn rho(&self, x: f64, xi: f64) -> f64 {
        phase_g(&x, &(self.qa as f64)) + phase_g(&(xi - x), &(self.qb as f64)) + self.s
    }

    fn drho(&self, x: f64, xi: f64) -> f64 {
        let y = xi - x;
        3.0 * x * x + (self.qa * self.qa) as f64 - 3.0 * y * y - (self.qb * self.qb) as f64
    }

    /// [min, max] of rho over the slice.
    fn range(&self, xi: f64, dxi: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.slice(xi, dxi)?;
        let mut v = [self.rho(lo, xi), self.rho(hi, xi)];
        let (mut a, mut b) = (v[0].min(v[1]), v[0].max(v[1]));
        if xi != 0.0 {
            // vertex of the quadratic
            let xv = lo + (hi - lo) / 2.0 - self.drho((lo + hi) / 2.0, xi) / (6.0 * xi);
            if xv > lo && xv < hi {
                v[0] = self.rho(xv, xi);
                a = a.min(v[0]);
                b = b.max(v[0]);
            }
        }
        Some((a, b))
    }
}

/// Linear pieces of rho over a slice: (value at midpoint, slope, width, symbol).
fn pieces(p: &Pair, xi: f64, dxi: f64, dsigma: f64, sym: PairSymbol, opt: &GramOptions) -> Vec<(f64, f64, f64, f64)> {
    let Some((lo, hi)) = p.slice(xi, dxi) else { return vec![] };
    let len = hi - lo;
    // rho'' = 6 xi; tangent error over width h is 0.75 |xi| h^2
    let n = ((len * (0.75 * xi.abs() / (opt.lin_tol * dsigma)).sqrt()).ceil() as usize).clamp(1, opt.max_pieces);
    let h = len / n as f64;
    (0..n)
        .map(|i| {
            let xm = lo + (i as f64 + 0.5) * h;
            (p.rho(xm, xi), p.drho(xm, xi), h, sym.eval(xm, p.qa, xi - xm, p.qb))
        })
        .collect()
}

fn gram_at(p: &Pair, q: &Pair, xi: f64, kern: &Kernel, dxi: f64, sym: PairSymbol, opt: &GramOptions) -> f64 {
    let pp = pieces(p, xi, dxi, kern.d, sym, opt);
    if pp.is_empty() {
        return 0.0;
    }
    let same = std::ptr::eq(p, q);
    let qq = if same { pp.clone() } else { pieces(q, xi, dxi, kern.d, sym, opt) };
    let mut acc = 0.0;
    for &(rp, bp, hp, mp) in &pp {
        if mp == 0.0 {
            continue;
        }
        for &(rq, bq, hq, mq) in &qq {
            if mq != 0.0 {
                acc += mp * mq * kern.rect(rp - rq, bp, hp, bq, hq);
            }
        }
    }
    acc
}

/// Subintervals of [a, b] where the tau-ranges of P and Q come within the
/// kernel reach of each other.
fn overlap_windows(p: &Pair, q: &Pair, a: f64, b: f64, dxi: f64, reach: f64, h: f64) -> Vec<(f64, f64)> {
    let n = (((b - a) / h).ceil() as usize).max(1);
    let step = (b - a) / n as f64;
    let near = |xi: f64| match (p.range(xi, dxi), q.range(xi, dxi)) {
        (Some((pl, ph)), Some((ql, qh))) => pl - qh < reach && ql - ph < reach,
        _ => false,
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut prev = near(a);
    let mut start = if prev { Some(a) } else { None };
    for i in 1..=n {
        let x = a + i as f64 * step;
        let cur = near(x);
        match (prev, cur) {
            (false, true) => start = Some((x - step).max(a)),
            (true, false) => {
                out.push((start.take().unwrap_or(a), x));
            }
            _ => {}
        }
        prev = cur;
    }
    if let Some(s) = start {
        out.push((s, b));
    }
    out
}

/// || w_out(xi, q) (u v)_sym ||_{L^2_{tau xi q}} in the cell-continuum model,
/// where (u v)_sym is the convolution of the two spectra weighted by `sym`.
pub fn bilinear_l2(
    u: &CellField,
    v: &CellField,
    sym: PairSymbol,
    out_w: &(dyn Fn(f64, i64) -> f64 + Sync),
    opt: &GramOptions,
) -> Result<f64> {
    if (u.dxi - v.dxi).abs() > 1e-14 * u.dxi || (u.dsigma - v.dsigma).abs() > 1e-14 * u.dsigma {
        return Err(ZkError::contract("cell sizes differ"));
    }
    let (dxi, dsigma) = (u.dxi, u.dsigma);
    let mut groups: BTreeMap<i64, Vec<Pair>> = BTreeMap::new();
    for a in &u.cells {
        for b in &v.cells {
            let amp = a.amp * b.amp;
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            groups.entry(a.q + b.q).or_default().push(Pair {
                xa: a.xi,
                qa: a.q,
                xb: b.xi,
                qb: b.q,
                s: a.sigma + b.sigma,
                amp,
            });
        }
    }
    let kern = Kernel { d: dsigma };
    let gl = gauss_legendre(opt.outer_nodes);
    let groups: Vec<(i64, Vec<Pair>)> = groups
        .into_iter()
        .map(|(q, mut v)| {
            v.sort_by(|a, b| a.center().total_cmp(&b.center()).then(a.xa.total_cmp(&b.xa)).then(a.s.total_cmp(&b.s)));
            (q, v)
        })
        .collect();
    let total: f64 = groups
        .par_iter()
        .map(|(qo, ps)| {
            let integrate = |p: &Pair, q: &Pair, a: f64, b: f64| -> f64 {
                let mid = 0.5 * (a + b);
                let half = 0.5 * (b - a);
                gl.iter()
                    .map(|&(x, w)| {
                        let xi = mid + half * x;
                        let wo = out_w(xi, *qo);
                        if wo == 0.0 {
                            0.0
                        } else {
                            w * half * wo * wo * gram_at(p, q, xi, &kern, dxi, sym, opt)
                        }
                    })
                    .sum()
            };
            let mut acc = 0.0;
            for (i, p) in ps.iter().enumerate() {
                let c = p.center();
                let d = integrate(p, p, c - dxi, c) + integrate(p, p, c, c + dxi);
                acc += p.amp.norm_sqr() * d;
                for q in &ps[i + 1..] {
                    let cq = q.center();
                    if cq - c >= 2.0 * dxi {
                        break;
                    }
                    let (a, b) = (cq - dxi, c + dxi);
                    // velocity bound for the scan step
                    let vmax = [p, q]
                        .iter()
                        .map(|r| {
                            let x = r.xa.abs().max(r.xb.abs()) + dxi;
                            3.0 * x * x + (r.qa * r.qa + r.qb * r.qb) as f64
                        })
                        .fold(0.0, f64::max);
                    let h = (dsigma / (2.0 * vmax)).min(dxi / 16.0);
                    let mut cross = 0.0;
                    for (wa, wb) in overlap_windows(p, q, a, b, dxi, 2.0 * dsigma, h) {
                        // split at the kinks of the slice lengths
                        let mut cuts = vec![wa, wb];
                        for k in [c, cq] {
                            if k > wa && k < wb {
                                cuts.push(k);
                            }
                        }
                        cuts.sort_by(f64::total_cmp);
                        for w in cuts.windows(2) {
                            cross += integrate(p, q, w[0], w[1]);
                        }
                    }
                    acc += 2.0 * (p.amp * q.amp.conj()).re * cross;
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let gl = gauss_legendre(6);
        let s: f64 = gl.iter().map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-13);
        assert!((gl.iter().map(|p| p.1).sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kernel_mass_and_symmetry() {
        let k = Kernel { d: 0.7 };
        let n = 20_000;
        let h = 4.0 * k.d / n as f64;
        let mass: f64 = (0..n).map(|i| k.k0(-2.0 * k.d + (i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((mass - k.d.powi(4)).abs() < 1e-9);
        assert!((k.k0(0.3) - k.k0(-0.3)).abs() < 1e-15);
        // K(0) = int T^2 = 2 d^3 / 3
        assert!((k.k0(0.0) - 2.0 * k.d.powi(3) / 3.0).abs() < 1e-14);
        assert!((k.k2(5.0) - k.d.powi(4) * 5.0).abs() < 1e-12);
        assert!((k.k1(0.0) - k.d.powi(4) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn rect_matches_quadrature() {
        let k = Kernel { d: 1.0 };
        for &(c, b, hx, g, hy) in &[(0.3, 2.0, 0.5, -1.0, 0.7), (1.1, 1e-7, 0.5, 3.0, 0.2), (0.2, 0.0, 0.3, 0.0, 0.4), (-0.5, 10.0, 0.4, 7.0, 0.3)] {
            let n = 400;
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let u = -hx / 2.0 + (i as f64 + 0.5) * hx / n as f64;
                    let v = -hy / 2.0 + (j as f64 + 0.5) * hy / n as f64;
                    acc += k.k0(c + b * u - g * v);
                }
            }
            acc *= hx * hy / (n * n) as f64;
            let r = k.rect(c, b, hx, g, hy);
            assert!((r - acc).abs() < 1e-5 * acc.abs().max(1e-3), "{c} {b}: {r} vs {acc}");
        }
    }

    /// Direct quadrature of || (u v)^ ||^2 on a fine (tau, xi) grid.
    fn brute(u: &CellField, v: &CellField, sym: PairSymbol, nt: usize) -> f64 {
        let d = u.dxi;
        let ds = u.dsigma;
        let tri = |z: f64| (ds - z.abs()).max(0.0);
        let mut qs: Vec<i64> = vec![];
        for a in &u.cells {
            for b in &v.cells {
                if !qs.contains(&(a.q + b.q)) {
                    qs.push(a.q + b.q);
                }
            }
        }
        let mut total = 0.0;
        for qo in qs {
            let ps: Vec<(&Cell, &Cell)> =
                u.cells.iter().flat_map(|a| v.cells.iter().map(move |b| (a, b))).filter(|(a, b)| a.q + b.q == qo).collect();
            let xlo = ps.iter().map(|(a, b)| a.xi + b.xi - d).fold(f64::INFINITY, f64::min);
            let xhi = ps.iter().map(|(a, b)| a.xi + b.xi + d).fold(f64::NEG_INFINITY, f64::max);
            let nxi = 300;
            let hxi = (xhi - xlo) / nxi as f64;
            for i in 0..nxi {
                let xi = xlo + (i as f64 + 0.5) * hxi;
                // tau range
                let mut tl = f64::INFINITY;
                let mut th = f64::NEG_INFINITY;
                for (a, b) in &ps {
                    for t in [-0.5, 0.0, 0.5] {
                        let x = a.xi + t * d;
                        let r = phase_g(&x, &(a.q as f64)) + phase_g(&(xi - x), &(b.q as f64)) + a.sigma + b.sigma;
                        tl = tl.min(r);
                        th = th.max(r);
                    }
                }
                tl -= 3.0 * ds;
                th += 3.0 * ds;
                let ht = (th - tl) / nt as f64;
                let nx1 = 200;
                for j in 0..nt {
                    let tau = tl + (j as f64 + 0.5) * ht;
                    let mut f = C64::new(0.0, 0.0);
                    for (a, b) in &ps {
                        let lo = (a.xi - d / 2.0).max(xi - b.xi - d / 2.0);
                        let hi = (a.xi + d / 2.0).min(xi - b.xi + d / 2.0);
                        if hi <= lo {
                            continue;
                        }
                        let hx = (hi - lo) / nx1 as f64;
                        let mut s = 0.0;
                        for k in 0..nx1 {
                            let x = lo + (k as f64 + 0.5) * hx;
                            let r = phase_g(&x, &(a.q as f64)) + phase_g(&(xi - x), &(b.q as f64)) + a.sigma + b.sigma;
                            s += sym.eval(x, a.q, xi - x, b.q) * tri(tau - r);
                        }
                        f += a.amp * b.amp * s * hx;
                    }
                    total += f.norm_sqr() * ht * hxi;
                }
            }
        }
        total.sqrt()
    }

    fn cf(cells: &[(f64, i64, f64, f64, f64)]) -> CellField {
        CellField {
            dxi: 1.0,
            dsigma: 1.0,
            cells: cells.iter().map(|&(xi, q, s, re, im)| Cell { xi, q, sigma: s, amp: C64::new(re, im) }).collect(),
        }
    }

    #[test]
    fn matches_brute_force() {
        let u = cf(&[(2.0, 1, 0.0, 1.0, 0.5), (3.0, 0, 1.0, -0.7, 0.2)]);
        let v = cf(&[(-1.0, 2, 0.0, 0.3, -1.0), (0.0, 1, -1.0, 1.0, 0.0)]);
        for sym in [PairSymbol::One, PairSymbol::Mp] {
            let fast = bilinear_l2(&u, &v, sym, &|_, _| 1.0, &GramOptions::default()).unwrap();
            let slow = brute(&u, &v, sym, 600);
            assert!((fast - slow).abs() < 5e-3 * slow, "{sym:?}: {fast} vs {slow}");
        }
    }

    #[test]
    fn colliding_pairs_interfere() {
        // (a, b) and (b, a) land on the same output cell
        let u = cf(&[(1.0, 2, 0.0, 1.0, 0.0), (-2.0, -1, 0.0, 0.5, 0.5)]);
        let fast = bilinear_l2(&u, &u, PairSymbol::One, &|_, _| 1.0, &GramOptions::default()).unwrap();
        let slow = brute(&u, &u, PairSymbol::One, 600);
        assert!((fast - slow).abs() < 5e-3 * slow, "{fast} vs {slow}");
    }

    #[test]
    fn curved_high_frequency_pair() {
        let u = cf(&[(4.0, 2, 0.0, 1.0, 0.0), (4.0, -3, 1.0, 0.0, 1.0)]);
        let v = cf(&[(-3.0, 1, 0.0, 1.0, 0.0)]);
        for sym in [PairSymbol::One, PairSymbol::Mp] {
            let fast = bilinear_l2(&u, &v, sym, &|_, _| 1.0, &GramOptions::default()).unwrap();
            let slow = brute(&u, &v, sym, 4000);
            assert!((fast - slow).abs() < 1e-2 * slow, "{sym:?}: {fast} vs {slow}");
        }
    }
}
