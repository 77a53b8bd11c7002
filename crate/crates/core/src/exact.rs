//! Exact rational checks of the algebraic identities behind the estimates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::symbols::{
    phase_pair_sum_g, resonance3_factored_g, resonance3_g, resonance3_rewritten_g, substitution_rhs_g,
};

pub type Q = BigRational;

pub fn rat(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

/// h(q) as an exact rational.
pub fn h_exact(q: i64) -> Q {
    if q.rem_euclid(2) == 0 {
        Q::zero()
    } else {
        rat(1, 2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub samples: usize,
    pub substitution_max_defect: f64,
    pub factored_max_defect: f64,
    pub rewritten_max_defect: f64,
}

impl IdentityReport {
    pub fn all_exact(&self) -> bool {
        self.substitution_max_defect == 0.0 && self.factored_max_defect == 0.0 && self.rewritten_max_defect == 0.0
    }
}

fn random_rational(rng: &mut ChaCha8Rng, nonzero: bool) -> Q {
    loop {
        let n: i64 = rng.random_range(-1000..=1000);
        let d: i64 = rng.random_range(1..=97);
        if !nonzero || n != 0 {
            return rat(n, d);
        }
    }
}

fn defect(a: &Q, b: &Q) -> f64 {
    (a - b).abs().to_f64().unwrap_or(f64::INFINITY)
}

/// Substitution identity on one rational tuple; returns |lhs - rhs|.
pub fn substitution_defect(xi: &Q, q: i64, xi1: &Q, q1: i64) -> f64 {
    let (qq, qq1) = (int(q), int(q1));
    let lhs = phase_pair_sum_g(xi, &qq, xi1, &qq1);
    let rhs = substitution_rhs_g(xi, &qq, xi1, &qq1, &h_exact(q));
    defect(&lhs, &rhs)
}

/// Largest defect between the direct cubic resonance and its two closed forms.
pub fn resonance_defects(p: [(&Q, &Q); 3]) -> (f64, f64) {
    let direct = resonance3_g(p);
    (defect(&direct, &resonance3_factored_g(p)), defect(&direct, &resonance3_rewritten_g(p)))
}

/// Runs every identity on `samples` random rational tuples.
pub fn check_identities(samples: usize, seed: u64) -> IdentityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = IdentityReport {
        samples,
        substitution_max_defect: 0.0,
        factored_max_defect: 0.0,
        rewritten_max_defect: 0.0,
    };
    for _ in 0..samples {
        let xi = random_rational(&mut rng, true);
        let xi1 = random_rational(&mut rng, false);
        let q: i64 = rng.random_range(-60..=60);
        let q1: i64 = rng.random_range(-60..=60);
        rep.substitution_max_defect = rep.substitution_max_defect.max(substitution_defect(&xi, q, &xi1, q1));

        let xs: Vec<Q> = (0..3).map(|_| random_rational(&mut rng, false)).collect();
        let qs: Vec<Q> = (0..3).map(|_| int(rng.random_range(-60..=60))).collect();
        let (f, r) = resonance_defects([(&xs[0], &qs[0]), (&xs[1], &qs[1]), (&xs[2], &qs[2])]);
        rep.factored_max_defect = rep.factored_max_defect.max(f);
        rep.rewritten_max_defect = rep.rewritten_max_defect.max(r);
    }
    rep
}
