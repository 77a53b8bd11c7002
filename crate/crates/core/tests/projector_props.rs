use std::f64::consts::PI;

use proptest::prelude::*;
use zklab::projectors::{
    apply_pn, apply_pn_st, apply_ql, psi, psi_n, region_projector, shell_weight, shells_up_to, Dyadic, Region,
};
use zklab::{Grid, SpaceTimeField, SpectralField, C64};

fn grid() -> Grid {
    Grid::new(2.0 * PI, 16, 16, 2.0 * PI, 8).unwrap()
}

fn spectral(vals: &[(f64, f64)]) -> SpectralField {
    let mut u = SpectralField::zeros(grid(), false);
    for (z, &(re, im)) in u.coeffs.iter_mut().zip(vals) {
        *z = C64::new(re, im);
    }
    u
}

fn space_time(vals: &[(f64, f64)]) -> SpaceTimeField {
    let mut u = SpaceTimeField::zeros(grid(), false);
    for (z, &(re, im)) in u.coeffs.iter_mut().zip(vals.iter().cycle()) {
        *z = C64::new(re, im);
    }
    u
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn dyadic() -> impl Strategy<Value = Dyadic> {
    (0u32..20).prop_map(Dyadic::from_exp)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn shells_sum_to_one(r in 0.0f64..1e5) {
        let total: f64 = shells_up_to(r).into_iter().map(|n| shell_weight(n, r)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "sum {total} at r = {r}");
    }

    #[test]
    fn shell_support(x in 0.0f64..4.0) {
        if !(0.625..=1.6).contains(&x) {
            prop_assert_eq!(psi(x), 0.0);
        }
        prop_assert!((0.0..=1.0).contains(&psi(x)));
        if x > 1.6 {
            prop_assert_eq!(shell_weight(Dyadic::from_exp(0), x), 0.0);
        }
    }

    #[test]
    fn distant_shells_disjoint(n in dyadic(), m in dyadic(), xi in -2e5f64..2e5, q in -200_000i64..200_000) {
        let (a, b) = (n.get().max(m.get()), n.get().min(m.get()));
        if a > 2 * b {
            prop_assert_eq!(psi_n(n, xi, q) * psi_n(m, xi, q), 0.0);
        }
    }

    #[test]
    fn modulation_commutes_with_shell(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64), ne in 0u32..5, le in 0u32..5) {
        let u = space_time(&vals);
        let (n, l) = (Dyadic::from_exp(ne), Dyadic::from_exp(le));
        let a = apply_ql(&apply_pn_st(&u, n), l);
        let b = apply_pn_st(&apply_ql(&u, l), n);
        prop_assert!(max_diff(&a.coeffs, &b.coeffs) < 1e-14);
    }

    #[test]
    fn sharp_regions_idempotent(vals in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 256), theta in 0.0f64..1.5, thr in 0.0f64..60.0, which in 0usize..3) {
        let u = spectral(&vals);
        let region = match which {
            0 => Region::XiVsQPower { theta, complement: false },
            1 => Region::HyperbolaGap { threshold: thr, complement: false },
            _ => Region::HalfSpace { positive: true, complement: true },
        };
        let once = region_projector(&u, &region);
        let twice = region_projector(&once, &region);
        prop_assert_eq!(&once.coeffs, &twice.coeffs);
        // region plus complement recovers the input
        let rest = region_projector(&u, &region.complement());
        let sum = once.add(&rest).unwrap();
        prop_assert!(max_diff(&sum.coeffs, &u.coeffs) < 1e-15);
    }
}

#[test]
fn smooth_shell_not_idempotent() {
    let vals: Vec<_> = (0..256).map(|i| (1.0, (i as f64).sin())).collect();
    let u = spectral(&vals);
    let n = Dyadic::from_exp(3);
    let once = apply_pn(&u, n);
    let twice = apply_pn(&once, n);
    assert!(max_diff(&once.coeffs, &twice.coeffs) > 1e-3);
}
