use proptest::prelude::*;
use recbound::factpoly::{
    binom, binomial_ext, check_lemma, check_reflection, check_vandermonde, factorial, falling,
    int, raising, ratio, rising_over_factorial, to_f64,
};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn raising_is_shifted_falling(num in -60i64..60, den in 1i64..7, n in 1u32..12) {
        let x = ratio(num, den);
        prop_assert_eq!(raising(&x, n), falling(&(x.clone() + int(n as i64 - 1)), n));
    }

    #[test]
    fn raising_recurrence(num in -60i64..60, den in 1i64..7, n in 0u32..12) {
        let x = ratio(num, den);
        prop_assert_eq!(raising(&x, n + 1), raising(&x, n) * (x.clone() + int(n as i64)));
    }

    #[test]
    fn binomial_is_falling_over_factorial(num in -40i64..40, den in 1i64..5, n in 0u32..10) {
        let x = ratio(num, den);
        prop_assert_eq!(binomial_ext(&x, n) * factorial(n), falling(&x, n));
    }

    #[test]
    fn float_helpers_match_exact(k in 1u32..200, r in 0u32..10) {
        let exact = to_f64(&(raising(&int(k as i64), r) / factorial(r)));
        let approx = rising_over_factorial(k as f64, r).unwrap();
        prop_assert!((approx - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        let b = binom(k as f64, r).unwrap();
        let e = to_f64(&binomial_ext(&int(k as i64), r));
        prop_assert!((b - e).abs() <= 1e-12 * e.abs().max(1.0));
    }
}

#[test]
fn identity_suites() {
    assert!(check_lemma(12, 6, raising).passed());
    assert!(check_reflection(12).passed());
    assert!(check_vandermonde(8).passed());
}

#[test]
fn corrupted_raising_is_caught() {
    let broken = |x: &_, n: u32| {
        let v = raising(x, n);
        if n == 2 { v + int(1) } else { v }
    };
    assert!(!check_lemma(6, 4, broken).passed());
}
