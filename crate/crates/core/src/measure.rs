//! Measures of the level sets B^lin and B^alpha in R x Z, by quadratic-root
//! interval algebra, with a Monte-Carlo cross-check and sup-bound scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZkError};
use crate::projectors::Dyadic;
use crate::stats::{loglog_fit, Fit};
use crate::symbols::{dilated_sq, p_poly};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Lin,
    Alpha,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Lin => "lin",
            Variant::Alpha => "alpha",
        }
    }
}

/// Implicit constants of the set definitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub kappa_ball: f64,
    pub kappa_hyp: f64,
    pub kappa_xi: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { kappa_ball: 1.0, kappa_hyp: 1.0, kappa_xi: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureQuery {
    pub tau: f64,
    pub xi: f64,
    pub q: i64,
    pub h: f64,
    pub n1: Dyadic,
    pub n2: Dyadic,
    pub c: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// Present for B^alpha.
    pub alpha: Option<f64>,
    pub constants: Constants,
}

impl MeasureQuery {
    pub fn variant(&self) -> Variant {
        if self.alpha.is_some() {
            Variant::Alpha
        } else {
            Variant::Lin
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0) {
            return Err(ZkError::contract(format!("xi = {} must be positive", self.xi)));
        }
        if !(self.k >= 1.0) {
            return Err(ZkError::contract(format!("K = {} must be >= 1", self.k)));
        }
        if self.h != 0.0 && self.h != 0.5 {
            return Err(ZkError::contract("h must be 0 or 1/2"));
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(ZkError::contract(format!("alpha = {a} outside [0, 1]")));
            }
        }
        let k = self.constants;
        if !(k.kappa_ball > 0.0 && k.kappa_hyp > 0.0 && k.kappa_xi > 0.0) {
            return Err(ZkError::contract("constants must be positive"));
        }
        Ok(())
    }

    /// Query whose (c, K) come from a modulation window of size `l` around
    /// tau: c = -ct l + tau - (xi/4)(xi^2 + q^2), K = 2 ct l.
    #[allow(clippy::too_many_arguments)]
    pub fn from_modulation(tau: f64, xi: f64, q: i64, h: f64, n1: Dyadic, n2: Dyadic, l: f64, ct: f64) -> Self {
        Self {
            tau,
            xi,
            q,
            h,
            n1,
            n2,
            c: -ct * l + tau - xi / 4.0 * (xi * xi + (q * q) as f64),
            k: 2.0 * ct * l,
            alpha: None,
            constants: Constants::default(),
        }
    }

    pub fn nmax(&self) -> f64 {
        self.n1.value().max(self.n2.value())
    }

    /// Gap condition (and xi lower bound for B^alpha).
    pub fn gap_holds(&self) -> bool {
        let g = (3.0 * self.xi * self.xi - (self.q * self.q) as f64).abs();
        match self.alpha {
            None => g >= self.constants.kappa_hyp,
            Some(a) => self.xi >= self.constants.kappa_xi && g >= self.constants.kappa_hyp * self.xi.powf(a),
        }
    }

    /// Sign case of the proof.
    pub fn case_tag(&self) -> &'static str {
        let d = (self.q * self.q) as f64 - 3.0 * self.xi * self.xi;
        if d > 0.0 {
            if self.c >= 0.0 {
                "i"
            } else if self.k + self.c >= 0.0 {
                "ii.1"
            } else {
                "ii.2"
            }
        } else if d < 0.0 {
            if self.c > 0.0 {
                "iii"
            } else {
                "iv"
            }
        } else {
            "degenerate"
        }
    }

    /// Exact admissible q1 range from the two ball constraints.
    pub fn q1_range(&self) -> Option<(i64, i64)> {
        let r1 = self.constants.kappa_ball * self.n1.value();
        let r2 = self.constants.kappa_ball * self.n2.value();
        let qh = self.q as f64 / 2.0;
        let lo = (-r1 - qh - self.h).max(qh - self.h - r2).ceil();
        let hi = (r1 - qh - self.h).min(qh - self.h + r2).floor();
        (lo <= hi).then_some((lo as i64, hi as i64))
    }

    /// Membership straight from the set definition.
    pub fn contains(&self, xi1: f64, q1: i64) -> bool {
        let y = q1 as f64 + self.h;
        let qh = self.q as f64 / 2.0;
        let r1 = self.constants.kappa_ball * self.n1.value();
        let r2 = self.constants.kappa_ball * self.n2.value();
        if self.alpha.is_none() && xi1.abs() >= self.xi / 2.0 {
            return false;
        }
        if !self.gap_holds() {
            return false;
        }
        if dilated_sq(xi1 + self.xi / 2.0, y + qh) > r1 * r1 || dilated_sq(self.xi / 2.0 - xi1, qh - y) > r2 * r2 {
            return false;
        }
        let p = self.xi * (3.0 * xi1 * xi1 + y * y) + 2.0 * self.q as f64 * xi1 * y;
        debug_assert!((p - p_poly(self.xi, self.q, xi1, y)).abs() <= 1e-9 * p.abs().max(1.0));
        p >= self.c && p <= self.c + self.k
    }
}

/// Closed interval [lo, hi].
pub type Interval = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceIntervals {
    pub q1: i64,
    pub intervals: Vec<Interval>,
    pub case_tag: &'static str,
}

impl SliceIntervals {
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

fn intersect(set: &[Interval], lo: f64, hi: f64) -> Vec<Interval> {
    set.iter()
        .filter_map(|&(a, b)| {
            let (a, b) = (a.max(lo), b.min(hi));
            (a <= b).then_some((a, b))
        })
        .collect()
}

/// Half-width of the xi1-interval cut out by a dilated ball of radius r at
/// height y: 3 x^2 + y^2 <= r^2.
fn ball_halfwidth(r: f64, y: f64) -> Option<f64> {
    let d = r * r - y * y;
    (d >= 0.0).then(|| (d / 3.0).sqrt())
}

/// {xi1 : p(xi1, q1 + h) in [c, c + K]} intersected with the query's constraints.
pub fn slice_intervals(query: &MeasureQuery, q1: i64) -> Result<SliceIntervals> {
    query.validate()?;
    let tag = query.case_tag();
    let empty = SliceIntervals { q1, intervals: vec![], case_tag: tag };
    if !query.gap_holds() {
        return Ok(empty);
    }
    let (xi, q) = (query.xi, query.q as f64);
    let y = q1 as f64 + query.h;
    let a = (q * q - 3.0 * xi * xi) / (9.0 * xi * xi) * y * y;
    let d1 = a + query.c / (3.0 * xi);
    let d2 = a + (query.c + query.k) / (3.0 * xi);
    if d2 < 0.0 {
        return Ok(empty);
    }
    let center = -y * q / (3.0 * xi);
    let s2 = d2.sqrt();
    let mut set: Vec<Interval> = if d1 >= 0.0 {
        let s1 = d1.sqrt();
        if s1 == 0.0 {
            vec![(center - s2, center + s2)]
        } else {
            vec![(center - s2, center - s1), (center + s1, center + s2)]
        }
    } else {
        vec![(center - s2, center + s2)]
    };
    if query.alpha.is_none() {
        set = intersect(&set, -xi / 2.0, xi / 2.0);
    }
    let qh = q / 2.0;
    let r1 = query.constants.kappa_ball * query.n1.value();
    let r2 = query.constants.kappa_ball * query.n2.value();
    // |(xi1 + xi/2, y + q/2)| <= r1 and |(xi/2 - xi1, q/2 - y)| <= r2
    let Some(w1) = ball_halfwidth(r1, y + qh) else { return Ok(empty) };
    let Some(w2) = ball_halfwidth(r2, qh - y) else { return Ok(empty) };
    set = intersect(&set, -xi / 2.0 - w1, -xi / 2.0 + w1);
    set = intersect(&set, xi / 2.0 - w2, xi / 2.0 + w2);
    Ok(SliceIntervals { q1, intervals: set, case_tag: tag })
}

/// Sum of slice lengths over q1 in [lo, hi] (clipped to the admissible range).
pub fn measure_over(query: &MeasureQuery, lo: i64, hi: i64) -> Result<f64> {
    query.validate()?;
    let Some((a, b)) = query.q1_range() else { return Ok(0.0) };
    let mut acc = 0.0;
    for q1 in lo.max(a)..=hi.min(b) {
        acc += slice_intervals(query, q1)?.length();
    }
    Ok(acc)
}

/// |B| in Lebesgue x counting measure; 0 when the gap condition fails.
pub fn measure_b(query: &MeasureQuery) -> Result<f64> {
    query.validate()?;
    if !query.gap_holds() {
        return Ok(0.0);
    }
    measure_over(query, i64::MIN, i64::MAX)
}

/// Monte-Carlo estimate of |B| with its standard error, sampling straight
/// from the set definition over a crude bounding box.
pub fn mc_oracle_measure(query: &MeasureQuery, samples: usize, seed: u64) -> Result<(f64, f64)> {
    query.validate()?;
    if samples < 10_000 {
        return Err(ZkError::contract("at least 1e4 samples"));
    }
    let r1 = query.constants.kappa_ball * query.n1.value();
    let r2 = query.constants.kappa_ball * query.n2.value();
    let qb = (r1.max(r2) + query.q.abs() as f64 / 2.0 + 1.0).ceil() as i64;
    let (mut lo, mut hi) = (-query.xi / 2.0 - r1 / 3f64.sqrt(), -query.xi / 2.0 + r1 / 3f64.sqrt());
    if query.alpha.is_none() {
        lo = lo.max(-query.xi / 2.0);
        hi = hi.min(query.xi / 2.0);
    }
    if hi <= lo {
        return Ok((0.0, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let q1 = rng.random_range(-qb..=qb);
        let x = rng.random_range(lo..hi);
        if query.contains(x, q1) {
            hits += 1;
        }
    }
    let vol = (2 * qb + 1) as f64 * (hi - lo);
    let p = hits as f64 / samples as f64;
    Ok((vol * p, vol * (p * (1.0 - p) / samples as f64).sqrt()))
}

/// Cartesian family of queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryFamily {
    pub xi: Vec<f64>,
    pub q: Vec<i64>,
    pub c: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
    /// (N1, N2) pairs.
    pub n: Vec<(u64, u64)>,
    #[serde(default = "zero_h")]
    pub h: Vec<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub constants: Constants,
}

fn zero_h() -> Vec<f64> {
    vec![0.0]
}

impl QueryFamily {
    pub fn queries(&self) -> Result<Vec<MeasureQuery>> {
        let mut out = Vec::new();
        for &(n1, n2) in &self.n {
            let (n1, n2) = (Dyadic::new(n1)?, Dyadic::new(n2)?);
            for &xi in &self.xi {
                for &q in &self.q {
                    for &c in &self.c {
                        for &k in &self.k {
                            for &h in &self.h {
                                out.push(MeasureQuery {
                                    tau: c + xi / 4.0 * (xi * xi + (q * q) as f64),
                                    xi,
                                    q,
                                    h,
                                    n1,
                                    n2,
                                    c,
                                    k,
                                    alpha: self.alpha,
                                    constants: self.constants,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// The standard sweep: N1 = N2 and K over dyadics up to 256, xi over a log
/// range plus the two points next to the hyperbola 3 xi^2 = q^2 +- 1, c on
/// both sides of zero.
pub fn default_family(alpha: Option<f64>) -> Vec<MeasureQuery> {
    let mut fam = Vec::new();
    let xis = [1.0 / 256.0, 1.0 / 64.0, 1.0 / 16.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
    for e in 2..=8 {
        let n = Dyadic::from_exp(e);
        for qi in 0..40 {
            let q = (qi as f64 * n.value() / 20.0).round() as i64;
            let near = [((q * q - 1).max(0) as f64 / 3.0).sqrt(), ((q * q + 1) as f64 / 3.0).sqrt()];
            for xi in xis.iter().copied().chain(near).filter(|&x| x > 0.0) {
                for c in [-1000.0, -100.0, -10.0, -1.0, 0.0, 1.0, 10.0, 100.0, 1000.0] {
                    for k in [1.0, 4.0, 16.0, 64.0, 256.0] {
                        for h in [0.0, 0.5] {
                            fam.push(MeasureQuery { tau: 0.0, xi, q, h, n1: n, n2: n, c, k, alpha, constants: Constants::default() });
                        }
                    }
                }
            }
        }
    }
    fam
}

/// Random small-scale queries whose level window straddles a value of p
/// attained in the box, so the sets are rarely empty.
pub fn random_queries(count: usize, seed: u64, alpha: Option<f64>) -> Vec<MeasureQuery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n1 = Dyadic::from_exp(rng.random_range(0..=4));
            let n2 = Dyadic::from_exp(rng.random_range(0..=4));
            let xi = rng.random_range(0.05..8.0);
            let r = n1.value().min(n2.value());
            let q = rng.random_range(-2 * r as i64..=2 * r as i64);
            let h = if rng.random::<bool>() { 0.5 } else { 0.0 };
            let k = rng.random_range(1.0..50.0);
            let (x1, y) = (rng.random_range(-xi / 2.0..xi / 2.0), rng.random_range(-r..r) + h);
            let c = p_poly(xi, q, x1, y) - k * rng.random::<f64>();
            MeasureQuery { tau: 0.0, xi, q, h, n1, n2, c, k, alpha, constants: Constants::default() }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub query: MeasureQuery,
    pub measure: f64,
    pub ratio: f64,
    pub case_tag: &'static str,
    pub mc: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub variant: Variant,
    pub eps: f64,
    pub max_ratio: f64,
    pub argmax: Option<MeasureQuery>,
    /// Fit of log sup |B|^{1/2} against log K (sup over the rest of the family).
    pub k_fit: Option<Fit>,
    /// Fit of log sup |B|^{1/2} K^{-1/2} against log (N1 v N2).
    pub n_fit: Option<Fit>,
    pub rows: Vec<ScanRow>,
}

fn weighted_root(q: &MeasureQuery, m: f64) -> f64 {
    let w = q.alpha.map_or(1.0, |a| q.xi.powf(a / 4.0));
    w * m.sqrt()
}

/// Groups rows by `key` and fits log of the per-group max of the weighted
/// |B|^{1/2} (divided by K^{1/2} when `per_k`) against log key.
fn sup_fit(rows: &[ScanRow], key: impl Fn(&MeasureQuery) -> f64, per_k: bool) -> Option<Fit> {
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for r in rows {
        let k = key(&r.query);
        let mut v = weighted_root(&r.query, r.measure);
        if per_k {
            v /= r.query.k.sqrt();
        }
        match groups.iter_mut().find(|g| g.0 == k) {
            Some(g) => g.1 = g.1.max(v),
            None => groups.push((k, v)),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pts: Vec<(f64, f64)> = groups.into_iter().filter(|g| g.1 > 0.0).collect();
    if pts.len() < 2 {
        return None;
    }
    loglog_fit(&pts).ok()
}

/// Evaluates the family (in parallel, deterministic order) and reports the
/// largest ratio |B|^{1/2} / ((N1 v N2)^eps K^{1/2}), xi^{alpha/4}-weighted
/// for B^alpha.
pub fn scan_sup_bound(family: &[MeasureQuery], eps: f64, variant: Variant, mc_samples: Option<(usize, u64)>) -> Result<ScanReport> {
    if family.is_empty() {
        return Err(ZkError::contract("empty query family"));
    }
    for q in family {
        if q.variant() != variant {
            return Err(ZkError::contract("query variant does not match the scan"));
        }
    }
    let rows: Vec<ScanRow> = family
        .par_iter()
        .enumerate()
        .map(|(i, q)| -> Result<ScanRow> {
            let m = measure_b(q)?;
            let ratio = weighted_root(q, m) / (q.nmax().powf(eps) * q.k.sqrt());
            let mc = match mc_samples {
                Some((n, seed)) => Some(mc_oracle_measure(q, n, seed.wrapping_add(i as u64))?),
                None => None,
            };
            Ok(ScanRow { query: *q, measure: m, ratio, case_tag: q.case_tag(), mc })
        })
        .collect::<Result<_>>()?;
    let (mut best, mut arg) = (0.0, None);
    for r in &rows {
        if r.ratio > best {
            best = r.ratio;
            arg = Some(r.query);
        }
    }
    Ok(ScanReport {
        variant,
        eps,
        max_ratio: best,
        argmax: arg,
        k_fit: sup_fit(&rows, |q| q.k, false),
        n_fit: sup_fit(&rows, |q| q.nmax(), true),
        rows,
    })
}
