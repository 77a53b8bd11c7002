use std::collections::BTreeSet;

use proptest::prelude::*;
use zklab::measure::{default_family, mc_oracle_measure, measure_b, measure_over, random_queries, slice_intervals, MeasureQuery};
use zklab::projectors::Dyadic;

fn query() -> impl Strategy<Value = MeasureQuery> {
    (any::<u64>(), prop::option::of(0.0f64..1.0)).prop_map(|(seed, alpha)| random_queries(1, seed, alpha)[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn split_sums_match(q in query(), cut in 0.0f64..1.0) {
        let total = measure_b(&q).unwrap();
        if let Some((lo, hi)) = q.q1_range() {
            let m = lo + ((hi - lo) as f64 * cut) as i64;
            let parts = measure_over(&q, lo, m).unwrap() + measure_over(&q, m + 1, hi).unwrap();
            prop_assert!((parts - total).abs() <= 1e-12 * total.max(1.0));
        } else {
            prop_assert_eq!(total, 0.0);
        }
    }

    #[test]
    fn slices_lie_in_set(q in query(), pick in 0.0f64..1.0) {
        if let Some((lo, hi)) = q.q1_range() {
            let q1 = lo + ((hi - lo) as f64 * pick).round() as i64;
            for (a, b) in slice_intervals(&q, q1).unwrap().intervals {
                let mid = 0.5 * (a + b);
                prop_assert!(b >= a);
                if b - a > 1e-9 {
                    prop_assert!(q.contains(mid, q1), "midpoint {mid} of slice q1 = {q1}");
                }
            }
        }
    }

    #[test]
    fn tau_shift_with_recentering(tau in -1e3f64..1e3, xi in 0.05f64..20.0, q in -64i64..64, l in 1.0f64..64.0, e in 0u32..6) {
        let n = Dyadic::from_exp(e);
        let base = MeasureQuery::from_modulation(tau, xi, q, 0.0, n, n, l, 1.0);
        let shift = xi / 4.0 * (xi * xi + (q * q) as f64);
        let mut moved = MeasureQuery::from_modulation(tau + shift, xi, q, 0.0, n, n, l, 1.0);
        prop_assert!((moved.c - base.c - shift).abs() <= 1e-9 * shift.max(1.0 + tau.abs()));
        moved.c = base.c;
        prop_assert_eq!(measure_b(&moved).unwrap(), measure_b(&base).unwrap());
    }
}

#[test]
fn oracle_agrees_within_three_sigma() {
    let qs = random_queries(200, 11, None);
    let good = qs
        .iter()
        .enumerate()
        .filter(|(i, q)| {
            let exact = measure_b(q).unwrap();
            let (est, se) = mc_oracle_measure(q, 100_000, *i as u64).unwrap();
            (exact - est).abs() <= 3.0 * se + 1e-12
        })
        .count();
    assert!(good >= 198, "{good}/200 within 3 sigma");
}

#[test]
fn every_sign_case_is_reached() {
    let mut tags = BTreeSet::new();
    for q in default_family(None) {
        if let Some((lo, _)) = q.q1_range() {
            tags.insert(slice_intervals(&q, lo).unwrap().case_tag);
        }
    }
    for t in ["i", "ii.1", "ii.2", "iii", "iv"] {
        assert!(tags.contains(t), "case {t} missing from {tags:?}");
    }
}
