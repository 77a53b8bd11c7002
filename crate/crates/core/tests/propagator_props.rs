use std::f64::consts::PI;

use proptest::prelude::*;
use zklab::harness::ensemble::{sample_data, Law, RandomFieldSpec};
use zklab::propagator::{airy_view_evolve, linear_propagate, schrodinger_view_evolve};
use zklab::projectors::Dyadic;
use zklab::solver::{bump_data, gzk_solve, mass, EvolutionConfig};
use zklab::{Grid, SpectralField, C64};

fn grid() -> Grid {
    Grid::new(16.0, 32, 16, 2.0 * PI, 8).unwrap()
}

fn complex_data(vals: &[(f64, f64)]) -> SpectralField {
    let mut u = SpectralField::zeros(grid(), false);
    for (z, &(re, im)) in u.coeffs.iter_mut().zip(vals.iter().cycle()) {
        *z = C64::new(re, im);
    }
    u
}

fn real_data(seed: u64) -> SpectralField {
    let spec = RandomFieldSpec::new(Dyadic::from_exp(2), Dyadic::new(1).unwrap(), Law::GaussianCoefficients, seed);
    sample_data(grid(), &spec).unwrap()
}

fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    d / b.max_abs().max(1e-300)
}

/// Bump rescaled to unit L2 norm.
fn unit_bump() -> SpectralField {
    let u = bump_data(grid(), 1.0);
    u.scale(C64::new(1.0 / mass(&u).sqrt(), 0.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn propagator_unitary(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 97), t in -50.0f64..50.0) {
        let u = complex_data(&vals);
        let v = linear_propagate(&u, t);
        prop_assert!((v.l2() - u.l2()).abs() <= 1e-12 * u.l2());
    }

    #[test]
    fn views_factorize(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 97), t in -10.0f64..10.0) {
        let u = complex_data(&vals);
        let l = linear_propagate(&u, t);
        prop_assert!(rel_diff(&schrodinger_view_evolve(&u, t), &l) <= 1e-10);
        prop_assert!(rel_diff(&airy_view_evolve(&u, t), &l) <= 1e-10);
    }

    #[test]
    fn propagator_keeps_reality(seed in any::<u64>(), t in -10.0f64..10.0) {
        let u = real_data(seed);
        prop_assert!(linear_propagate(&u, t).conjugate_symmetry_defect() <= 1e-10 * u.max_abs());
    }
}

#[test]
fn conserves_for_each_power_and_sign() {
    let u0 = unit_bump();
    for k in 1..=3 {
        for sign in [1i8, -1] {
            let mut cfg = EvolutionConfig::new(k, sign, 1e-3, 0.25);
            cfg.sample_stride = 25;
            let tr = gzk_solve(&u0, &cfg).unwrap();
            let c = &tr.conserved;
            assert!(c.mass_drift() <= 1e-8, "k={k} sign={sign} mass drift {}", c.mass_drift());
            assert!(c.energy_drift() <= 1e-6, "k={k} sign={sign} energy drift {}", c.energy_drift());
            assert!(tr.last().conjugate_symmetry_defect() <= 1e-10);
        }
    }
}

#[test]
fn padding_suppresses_aliasing_drift() {
    let u0 = bump_data(grid(), 2.5);
    let mut cfg = EvolutionConfig::new(2, -1, 1e-3, 0.2);
    cfg.sample_stride = 20;
    let padded = gzk_solve(&u0, &cfg).unwrap().conserved.mass_drift();
    cfg.dealias_pad = 1.0;
    let aliased = gzk_solve(&u0, &cfg).unwrap().conserved.mass_drift();
    assert!(aliased >= 10.0 * padded, "aliased {aliased}, padded {padded}");
}
