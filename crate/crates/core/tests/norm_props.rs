use proptest::prelude::*;
use zklab::harness::ensemble::{sample_field, Law, RandomFieldSpec};
use zklab::harness::estimates::shell_grid;
use zklab::norms::{mp_apply, norm_st, xsb, NormSpec, Quadrature, TimeDomain};
use zklab::projectors::Dyadic;
use zklab::stats::loglog_fit;
use zklab::{SpaceTimeField, C64};

fn field(n: u32, seed: u64) -> SpaceTimeField {
    let n = Dyadic::from_exp(n);
    let spec = RandomFieldSpec::new(n, Dyadic::new(1).unwrap(), Law::GaussianCoefficients, seed);
    sample_field(shell_grid(n).unwrap(), &spec).unwrap()
}

fn sparse_field(seed: u64) -> SpaceTimeField {
    let n = Dyadic::from_exp(2);
    let spec = RandomFieldSpec::new(n, Dyadic::new(1).unwrap(), Law::SingleShell, seed).with_modes(3);
    sample_field(shell_grid(n).unwrap(), &spec).unwrap()
}

fn spec_strategy() -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        (1.0f64..8.0).prop_map(|p| NormSpec::Lp { p, time: TimeDomain::Window }),
        (1.0f64..6.0, 1.0f64..6.0, 1.0f64..6.0, 0.2f64..3.0)
            .prop_map(|(pt, px, py, t)| NormSpec::Mixed { pt, px, py, time: TimeDomain::Restricted(t) }),
        (-1.0f64..2.0, 0.0f64..1.0).prop_map(|(s, b)| NormSpec::Xsb { s, b }),
        (-1.0f64..2.0).prop_map(|s| NormSpec::LinfHs { s }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn homogeneous(seed in any::<u64>(), spec in spec_strategy(), c in -5.0f64..5.0) {
        prop_assume!(c.abs() > 1e-3);
        let u = field(1, seed);
        let quad = Quadrature::default();
        let base = norm_st(&u, &spec, quad).unwrap();
        let scaled = norm_st(&u.scale(C64::new(c, 0.0)), &spec, quad).unwrap();
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * scaled.max(1e-300), "{scaled} vs {}", c.abs() * base);
    }

    #[test]
    fn xsb_monotone_in_b(seed in any::<u64>(), s in -1.0f64..2.0, b1 in -1.0f64..1.5, db in 0.0f64..1.0) {
        let u = field(2, seed);
        prop_assert!(xsb(&u, s, b1) <= xsb(&u, s, b1 + db) * (1.0 + 1e-14));
    }

    #[test]
    fn mp_symmetric(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (u, v) = (sparse_field(s1), sparse_field(s2));
        let a = mp_apply(&u, &v).unwrap();
        let b = mp_apply(&v, &u).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!((x.q, x.xi, x.tau), (y.q, y.xi, y.tau));
            prop_assert!((x.value - y.value).norm() <= 1e-12 * x.value.norm().max(1e-300));
        }
    }
}

#[test]
fn energy_bound_stable_under_band_limit() {
    let quad = Quadrature::default();
    let pts: Vec<(f64, f64)> = (2..=4)
        .map(|e| {
            let worst = (0..100u64)
                .map(|i| {
                    let u = field(e, 1000 * e as u64 + i);
                    norm_st(&u, &NormSpec::LinfHs { s: 0.0 }, quad).unwrap() / xsb(&u, 0.0, 0.6)
                })
                .fold(0.0, f64::max);
            (2f64.powi(e as i32), worst)
        })
        .collect();
    let fit = loglog_fit(&pts).unwrap();
    assert!(fit.slope <= 0.05, "slope {} on {pts:?}", fit.slope);
}
