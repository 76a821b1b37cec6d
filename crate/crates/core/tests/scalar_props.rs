use num_complex::Complex64;
use proptest::prelude::*;
use recbound::phasefn::{parse_phase, SequenceSource};
use recbound::scalar::{
    closed_form_scalar, criterion_partial_sums, required_init_scalar, simulate_scalar,
    weighted_criterion_sums, ScalarEquation,
};

fn phase(s: &str) -> SequenceSource {
    SequenceSource::phase(parse_phase(s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulation_matches_closed_form(
        rho in prop_oneof![Just(1.0f64), 0.5f64..1.05],
        phi in 0.0f64..1.0,
        a in 0.0f64..1.0,
        re in -2.0f64..2.0,
        n in 1u64..300,
    ) {
        let eq = ScalarEquation::new(rho, phi, Complex64::new(re, 0.5), phase(&format!("{a:e}*n + sqrt(n)"))).unwrap();
        let t = simulate_scalar(&eq, n).unwrap();
        let c = closed_form_scalar(&eq, n).unwrap();
        prop_assert!((t.final_value() - c).norm() <= 1e-10 * (1.0 + c.norm()), "{} vs {}", t.final_value(), c);
    }

    #[test]
    fn starts_differ_by_a_constant_on_the_circle(
        phi in 0.0f64..1.0,
        a in 0.0f64..1.0,
        d in -5.0f64..5.0,
    ) {
        let y = phase(&format!("{a:e}*n"));
        let eq = ScalarEquation::new(1.0, phi, Complex64::new(0.0, 0.0), y.clone()).unwrap();
        let other = ScalarEquation::new(1.0, phi, Complex64::new(d, -d), y).unwrap();
        for n in [1u64, 17, 1000, 4321] {
            let gap = (simulate_scalar(&eq, n).unwrap().final_value()
                - simulate_scalar(&other, n).unwrap().final_value())
            .norm();
            prop_assert!((gap - d.abs() * 2f64.sqrt()).abs() <= 1e-9 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn monotone_weights_preserve_bounded_sums(
        phi in 0.0f64..1.0,
        a in 0.05f64..0.95,
        p in -1.0f64..1.0,
    ) {
        let k_max = 5_000u64;
        let eq = ScalarEquation::new(1.0, phi, Complex64::new(0.0, 0.0), phase(&format!("{a:e}*n"))).unwrap();
        let plain = criterion_partial_sums(&eq, k_max).unwrap();
        let b = |k: u64| (k as f64).powf(p);
        let sup_b = b(1).max(b(k_max));
        let weighted = weighted_criterion_sums(&eq, k_max, b).unwrap();
        prop_assert!(weighted.sup_abs <= 3.0 * sup_b * plain.sup_abs + 1e-9);
    }

    #[test]
    fn expanding_start_stays_bounded(rho in 1.5f64..4.0, phi in 0.0f64..1.0, a in 0.0f64..1.0) {
        let y = phase(&format!("{a:e}*n^2"));
        let probe = ScalarEquation::new(rho, phi, Complex64::new(0.0, 0.0), y).unwrap();
        let init = required_init_scalar(&probe, 1e-13).unwrap();
        let eq = ScalarEquation { x1: init.value(), ..probe };
        let t = simulate_scalar(&eq, 20).unwrap();
        prop_assert!(t.sup_abs <= 1.0 / (rho - 1.0) + 1e-3, "sup {}", t.sup_abs);
    }
}

#[test]
fn criterion_needs_the_unit_circle() {
    let eq = ScalarEquation::new(0.5, 0.0, Complex64::new(0.0, 0.0), phase("0")).unwrap();
    assert!(criterion_partial_sums(&eq, 10).is_err());
    assert!(ScalarEquation::new(0.0, 0.0, Complex64::new(0.0, 0.0), phase("0")).is_err());
}

#[test]
fn closed_form_geometric() {
    let eq = ScalarEquation::new(0.5, 0.0, Complex64::new(1.0, 0.0), SequenceSource::Zero).unwrap();
    assert_eq!(closed_form_scalar(&eq, 4).unwrap(), Complex64::new(0.125, 0.0));
    assert!(closed_form_scalar(&eq, 0).is_err());
}
