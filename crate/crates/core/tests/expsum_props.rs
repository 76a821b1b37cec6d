use num_complex::Complex64;
use proptest::prelude::*;
use recbound::expsum::{
    abel_identity_residual, certify_bounded, check_kl_hypothesis, kusmin_landau_bound,
    partial_sum_reference, partial_sums, ExpsumError, TailMajorant, Verdict,
};
use recbound::phasefn::parse_phase;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kusmin_landau_holds(theta in 0.05f64..0.45, t in 0.0f64..1.0, u in 0.0f64..1.0) {
        let horizon = 20_000u64;
        let start = theta + t * (0.5 - theta);
        let end = start + u * (1.0 - theta - start);
        let s = (end - start) / (2.0 * horizon as f64);
        let f = parse_phase(&format!("{start:e}*n + {s:e}*n^2")).unwrap();
        let check = check_kl_hypothesis(&f, horizon, theta).unwrap();
        prop_assume!(check.holds);
        let sup = partial_sums(&f, horizon).unwrap().sup_abs;
        prop_assert!(sup <= kusmin_landau_bound(theta).unwrap() + 1e-9, "sup {}", sup);
    }

    #[test]
    fn abel_identity(a in 0.05f64..0.95, b in -0.5f64..0.5, first in 1u64..500, len in 1u64..20_000) {
        let f = parse_phase(&format!("{a:e}*n + {b:e}*sqrt(n)")).unwrap();
        match abel_identity_residual(&f, first, first + len) {
            Ok(r) => prop_assert!(r.residual <= 1e-6 * (1.0 + r.lhs.norm()), "{:?}", r),
            Err(ExpsumError::Pole { .. }) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn compensated_sum_matches_reference(a in 0.0f64..1.0, b in -2.0f64..2.0, p in 0.1f64..2.5) {
        let f = parse_phase(&format!("{a:e}*n + {b:e}*n^{p:e}")).unwrap();
        let horizon = 50_000;
        let s = partial_sums(&f, horizon).unwrap();
        let r = partial_sum_reference(&f, horizon).unwrap();
        prop_assert!((Complex64::new(s.final_re, s.final_im) - r).norm() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// The certified bound covers every partial sum, including four times
    /// past the horizon it was computed at.
    #[test]
    fn certified_bound_is_honest(a in 0.1f64..0.9, c in -3.0f64..3.0, p in 0.2f64..0.9) {
        let horizon = 5_000u64;
        let f = parse_phase(&format!("{a:e}*n + {c:e}*n^{p:e}")).unwrap();
        let k = c.abs() * p * (1.0 - p);
        let majorant = TailMajorant::Expr {
            bound: parse_phase(&format!("{k:e}*n^({p:e} - 2)")).unwrap(),
            monotone: true,
        };
        let cert = certify_bounded(&f, horizon, Some(&majorant)).unwrap();
        prop_assume!(cert.verdict == Verdict::BoundedCertified);
        let bound = cert.bound_value.unwrap();
        let sup = partial_sums(&f, 4 * horizon).unwrap().sup_abs;
        prop_assert!(sup <= bound, "sup {} > bound {}", sup, bound);
    }
}

#[test]
fn kusmin_landau_examples() {
    assert!((kusmin_landau_bound(0.5).unwrap() - 1.0).abs() < 1e-15);
    assert!(kusmin_landau_bound(0.0).is_err());
    let f = parse_phase("0.1*n + n^2/1000").unwrap();
    let c = check_kl_hypothesis(&f, 400, 0.1).unwrap();
    assert!(c.holds);
    let long = check_kl_hypothesis(&f, 1000, 0.1).unwrap();
    assert!(!long.holds);
}

#[test]
fn majorant_must_be_declared_monotone() {
    let f = parse_phase("0.25*n + sqrt(n)*log(n)").unwrap();
    let m = TailMajorant::Expr {
        bound: parse_phase("log(n)/(4*n^1.5)").unwrap(),
        monotone: false,
    };
    let err = certify_bounded(&f, 5_000, Some(&m)).unwrap_err();
    assert!(err.is_refusal());
    assert!(certify_bounded(&f, 5_000, Some(&TailMajorant::Value(-1.0))).unwrap_err().is_refusal());
}
