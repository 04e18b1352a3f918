use proptest::prelude::*;

use tachibana::forms::multi_index::{binomial, sort_sign};
use tachibana::forms::pointwise::{hodge, wedge};
use tachibana::operators::{classify_spectrum, TolerancePolicy};

fn form(n: usize, r: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, binomial(n, r))
}

fn degrees() -> impl Strategy<Value = (usize, usize, usize)> {
    (2usize..=5).prop_flat_map(|n| (Just(n), 0..=n)).prop_flat_map(|(n, p)| (Just(n), Just(p), 0..=(n - p)))
}

proptest! {
    #[test]
    fn wedge_is_graded_commutative(
        (n, p, q, a, b) in degrees().prop_flat_map(|(n, p, q)| (Just(n), Just(p), Just(q), form(n, p), form(n, q)))
    ) {
        let ab = wedge(n, p, &a, q, &b);
        let ba = wedge(n, q, &b, p, &a);
        let sign = if (p * q) % 2 == 0 { 1.0 } else { -1.0 };
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert!((x - sign * y).abs() < 1e-12);
        }
    }

    #[test]
    fn star_star_sign((n, r, a) in (2usize..=5).prop_flat_map(|n| (Just(n), 0..=n)).prop_flat_map(|(n, r)| (Just(n), Just(r), form(n, r)))) {
        let back = hodge(n, n - r, &hodge(n, r, &a));
        let sign = if (r * (n - r)) % 2 == 0 { 1.0 } else { -1.0 };
        for (x, y) in back.iter().zip(&a) {
            prop_assert!((x - sign * y).abs() < 1e-12);
        }
    }

    #[test]
    fn star_is_an_isometry(a in form(4, 2)) {
        let s = hodge(4, 2, &a);
        let na: f64 = a.iter().map(|x| x * x).sum();
        let ns: f64 = s.iter().map(|x| x * x).sum();
        prop_assert!((na - ns).abs() < 1e-12);
    }

    #[test]
    fn sort_sign_parity(v in prop::collection::hash_set(0usize..9, 1..6)) {
        let mut t: Vec<usize> = v.into_iter().collect();
        let (sorted, s1) = sort_sign(&t).unwrap();
        let last = t.len() - 1;
        t.swap(0, last);
        let (sorted2, s2) = sort_sign(&t).unwrap();
        prop_assert_eq!(&sorted, &sorted2);
        if t.len() > 1 {
            prop_assert_eq!(s1, -s2);
        }
    }

    #[test]
    fn repeated_indices_have_no_sign(i in 0usize..6, j in 0usize..6) {
        prop_assert!(sort_sign(&[i, j, i]).is_none());
    }

    #[test]
    fn classification_is_scale_free(
        k in 0usize..5,
        rest in prop::collection::vec(0.5..50.0f64, 5..30),
        alpha_exp in -6i32..6,
    ) {
        let mut ev: Vec<f64> = (0..k).map(|i| 1e-15 * (i + 1) as f64).collect();
        let mut tail = rest.clone();
        tail.sort_by(f64::total_cmp);
        ev.extend(tail);
        let pol = TolerancePolicy::default();
        let base = classify_spectrum(ev.clone(), &pol);
        let alpha = 10f64.powi(alpha_exp);
        let scaled = classify_spectrum(ev.iter().map(|x| x * alpha).collect(), &pol);
        prop_assert_eq!(base.kernel_dim, k);
        prop_assert_eq!(scaled.kernel_dim, k);
        prop_assert_eq!(base.status, scaled.status);
    }
}
