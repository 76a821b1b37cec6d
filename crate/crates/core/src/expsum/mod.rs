//! Partial sums `S(N) = sum_{n<=N} e(f(n))`, the Kusmin–Landau bound, the
//! Abel summation identity and boundedness certificates.

mod certify;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::numeric::{
    cot_pi, fit_growth, unit_phase_dd, ComplexSum, DdComplex, GrowthFit, SampleRecorder,
    MAX_SAMPLES,
};
use crate::phasefn::{EvalError, PhaseExpr};

pub use crate::numeric::unit_phase;
pub use certify::{
    certify_bounded, certify_unbounded, majorant_tail_integral, Certificate, HypothesisReport,
    TailMajorant, Verdict, MIN_HORIZON,
};

/// Cycle-distance below which `cot(pi * x)` is treated as a pole.
pub const POLE_GUARD: f64 = 1e-9;

/// Decades of `K` used by the growth fit of a partial-sum sequence.
pub const SUM_FIT_DECADES: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpsumError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("horizon {horizon} is below the minimum {minimum}")]
    HorizonTooSmall { horizon: u64, minimum: u64 },
    #[error("theta = {0} is outside the admissible range")]
    ThetaOutOfRange(f64),
    #[error("invalid range n0 = {first}, N = {last}")]
    InvalidRange { first: u64, last: u64 },
    #[error("cot pole: Δf({n}) = {delta} is within 1e-9 of an integer")]
    Pole { n: u64, delta: f64 },
    #[error("tail majorant: {0}")]
    Majorant(String),
    #[error("tail majorant violated at n = {n}: |Δ²f(n)| = {value:e} > b(n) = {bound:e}")]
    MajorantViolated { n: u64, value: f64, bound: f64 },
}

impl ExpsumError {
    /// True when the error means a declared hypothesis was rejected, as
    /// opposed to a numerical failure.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            ExpsumError::Majorant(_) | ExpsumError::MajorantViolated { .. }
        )
    }
}

/// Envelope of the partial sums `S(1), ..., S(N)`.
#[derive(Debug, Clone, Serialize)]
pub struct SumAnalysis {
    pub horizon: u64,
    /// `max_{K<=N} |S(K)|`, tracked at full resolution.
    pub sup_abs: f64,
    pub sup_at: u64,
    pub final_abs: f64,
    pub final_re: f64,
    pub final_im: f64,
    pub growth_fit: GrowthFit,
    /// Extrapolated limit of `Δf(n)`, when `Δf` appears to converge.
    pub psi_estimate: Option<f64>,
    /// `(K, S(K))` on a geometric grid.
    #[serde(skip)]
    pub samples: Vec<(u64, Complex64)>,
}

pub fn partial_sums(f: &PhaseExpr, horizon: u64) -> Result<SumAnalysis, ExpsumError> {
    if horizon == 0 {
        return Err(ExpsumError::HorizonTooSmall {
            horizon,
            minimum: 1,
        });
    }
    let mut ev = f.evaluator();
    let mut sum = ComplexSum::new();
    let mut recorder = SampleRecorder::new(horizon, MAX_SAMPLES);
    let mut sup = 0.0f64;
    let mut sup_at = 0;
    let mut value = Complex64::new(0.0, 0.0);
    for n in 1..=horizon {
        sum.add(unit_phase_dd(ev.eval(n)?));
        value = sum.value();
        let a = value.norm();
        if a > sup {
            sup = a;
            sup_at = n;
        }
        recorder.offer(n, value);
    }
    let growth_fit = fit_growth(&recorder.magnitudes(), horizon, SUM_FIT_DECADES);
    Ok(SumAnalysis {
        horizon,
        sup_abs: sup,
        sup_at,
        final_abs: value.norm(),
        final_re: value.re,
        final_im: value.im,
        growth_fit,
        psi_estimate: psi_estimate(f, horizon)?,
        samples: recorder.samples,
    })
}

/// `S(N)` accumulated in double-double, the reference for [`partial_sums`].
pub fn partial_sum_reference(f: &PhaseExpr, horizon: u64) -> Result<Complex64, ExpsumError> {
    let mut ev = f.evaluator();
    let mut sum = DdComplex::default();
    for n in 1..=horizon {
        sum.add(unit_phase_dd(ev.eval(n)?));
    }
    Ok(sum.value())
}

/// Aitken extrapolation of `Δf` sampled at `H/4`, `H/2`, `H`.
///
/// Returns `None` when the three differences are not contracting, which
/// means `Δf` shows no limit at this horizon.
pub fn psi_estimate(f: &PhaseExpr, horizon: u64) -> Result<Option<f64>, ExpsumError> {
    if horizon < 4 {
        return Ok(None);
    }
    let mut ev = f.evaluator();
    let d1 = ev.delta(horizon / 4)?;
    let d2 = ev.delta(horizon / 2)?;
    let d3 = ev.delta(horizon)?;
    Ok(aitken(d1, d2, d3))
}

pub(crate) fn aitken(d1: f64, d2: f64, d3: f64) -> Option<f64> {
    let a = d2 - d1;
    let b = d3 - d2;
    let scale = d3.abs().max(1.0);
    if b.abs() <= 1e-14 * scale {
        return Some(d3);
    }
    if b.abs() >= a.abs() || a * b <= 0.0 {
        return None;
    }
    Some(d3 - b * b / (b - a))
}

/// `cot(pi * theta / 2)`, the Kusmin–Landau bound.
pub fn kusmin_landau_bound(theta: f64) -> Result<f64, ExpsumError> {
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(ExpsumError::ThetaOutOfRange(theta));
    }
    Ok(cot_pi(theta / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlCheck {
    pub holds: bool,
    pub first_violation: Option<u64>,
    pub min_delta: f64,
    pub max_delta: f64,
}

/// Slack for the comparisons in [`check_kl_hypothesis`].
const KL_SLACK: f64 = 1e-12;

/// Checks that `Δf(1), ..., Δf(N-1)` is nondecreasing and lies in
/// `[theta, 1 - theta)`.
pub fn check_kl_hypothesis(f: &PhaseExpr, horizon: u64, theta: f64) -> Result<KlCheck, ExpsumError> {
    if !(theta > 0.0 && theta < 0.5) {
        return Err(ExpsumError::ThetaOutOfRange(theta));
    }
    let mut ev = f.evaluator();
    let mut check = KlCheck {
        holds: true,
        first_violation: None,
        min_delta: f64::INFINITY,
        max_delta: f64::NEG_INFINITY,
    };
    if horizon < 2 {
        return Ok(check);
    }
    let mut prev_f = ev.eval(1)?;
    let mut prev_d = f64::NEG_INFINITY;
    for n in 1..horizon {
        let next = ev.eval(n + 1)?;
        let d = (next - prev_f).to_f64();
        prev_f = next;
        check.min_delta = check.min_delta.min(d);
        check.max_delta = check.max_delta.max(d);
        let inside = d >= theta - KL_SLACK && d < 1.0 - theta;
        let monotone = d >= prev_d - KL_SLACK;
        if !(inside && monotone) {
            check.holds = false;
            check.first_violation = Some(n);
            break;
        }
        prev_d = d;
    }
    Ok(check)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbelResidual {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// Evaluates both sides of
///
/// `-sum_{n=n0}^{N} E(n) = (1 + i c(N+1)) E(N+1) / 2 - (1 + i c(n0)) E(n0) / 2
///     - (1/2) sum_{n=n0}^{N} E(n+1) i (c(n+1) - c(n))`
///
/// with `E(n) = e(f(n))` and `c(n) = cot(pi Δf(n))`.
pub fn abel_identity_residual(
    f: &PhaseExpr,
    first: u64,
    last: u64,
) -> Result<AbelResidual, ExpsumError> {
    if first == 0 || last < first {
        return Err(ExpsumError::InvalidRange { first, last });
    }
    let mut ev = f.evaluator();
    let mut f_n = ev.eval(first)?;
    let mut f_next = ev.eval(first + 1)?;
    let cot_at = |n: u64, d: crate::numeric::Dd| -> Result<f64, ExpsumError> {
        let r = d.centered_frac();
        if r.abs() < POLE_GUARD {
            return Err(ExpsumError::Pole { n, delta: d.to_f64() });
        }
        Ok(cot_pi(r))
    };
    let i = Complex64::new(0.0, 1.0);
    let mut c_n = cot_at(first, f_next - f_n)?;
    let c_first = c_n;
    let e_first = unit_phase_dd(f_n);
    let mut lhs = ComplexSum::new();
    let mut inner = ComplexSum::new();
    for n in first..=last {
        let f_after = ev.eval(n + 2)?;
        let c_next = cot_at(n + 1, f_after - f_next)?;
        let e_next = unit_phase_dd(f_next);
        lhs.add(-unit_phase_dd(f_n));
        inner.add(e_next * i * (c_next - c_n));
        f_n = f_next;
        f_next = f_after;
        c_n = c_next;
    }
    // After the loop f_n = f(N+1) and c_n = c(N+1).
    let e_end = unit_phase_dd(f_n);
    let rhs = 0.5 * (1.0 + i * c_n) * e_end - 0.5 * (1.0 + i * c_first) * e_first
        - 0.5 * inner.value();
    let lhs = lhs.value();
    Ok(AbelResidual {
        lhs,
        rhs,
        residual: (lhs - rhs).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasefn::parse_phase;

    fn phase(s: &str) -> PhaseExpr {
        parse_phase(s).unwrap()
    }

    #[test]
    fn unit_phase_examples() {
        assert!((unit_phase(0.0).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-16);
        assert!((unit_phase(0.5).unwrap() - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((unit_phase(0.25).unwrap() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        assert!(unit_phase(f64::NAN).is_err());
    }

    #[test]
    fn constant_phase_sums() {
        let a = partial_sums(&phase("0"), 100).unwrap();
        assert_eq!(a.final_abs, 100.0);
        assert_eq!(a.sup_abs, 100.0);
        assert_eq!(a.psi_estimate, Some(0.0));
    }

    #[test]
    fn geometric_envelope() {
        let a = partial_sums(&phase("0.3*n"), 100_000).unwrap();
        let bound = 1.0 / (0.3 * std::f64::consts::PI).sin();
        assert!(a.sup_abs <= bound + 1e-9);
        assert!(a.sup_abs > bound - 1e-3);
        assert!(a.growth_fit.exponent.abs() < 0.05);
        assert!((a.psi_estimate.unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn kusmin_landau_values() {
        assert!((kusmin_landau_bound(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((kusmin_landau_bound(0.3).unwrap() - 1.962_610_505_505_150_7).abs() < 1e-14);
        assert!(kusmin_landau_bound(1e-9).unwrap() > 1e8);
        assert!(kusmin_landau_bound(0.0).is_err());
        assert!(kusmin_landau_bound(0.6).is_err());
        let mut prev = f64::INFINITY;
        for j in 1..=50 {
            let b = kusmin_landau_bound(j as f64 / 100.0).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn kl_hypothesis_examples() {
        let ok = check_kl_hypothesis(&phase("0.3*n"), 100_000, 0.3).unwrap();
        assert!(ok.holds);
        let low = check_kl_hypothesis(&phase("0.3*n"), 10, 0.31).unwrap();
        assert_eq!(low.first_violation, Some(1));
        let quad = check_kl_hypothesis(&phase("n^2/1000"), 600, 0.1).unwrap();
        assert_eq!(quad.first_violation, Some(1));
        let shifted = check_kl_hypothesis(&phase("0.1*n + n^2/1000"), 600, 0.1).unwrap();
        // Δf(n) = 0.1 + (2n+1)/1000 reaches 0.9 at n = 399.5.
        assert_eq!(shifted.first_violation, Some(400));
        let falling = check_kl_hypothesis(&phase("0.4*n - n^2/100000"), 100, 0.1).unwrap();
        assert_eq!(falling.first_violation, Some(2));
    }

    #[test]
    fn abel_identity_examples() {
        let lin = abel_identity_residual(&phase("0.3*n"), 1, 1000).unwrap();
        assert!(lin.residual <= 1e-9, "{}", lin.residual);
        let curved = abel_identity_residual(&phase("0.25*n + sqrt(n)"), 1, 10_000).unwrap();
        assert!(curved.residual <= 1e-7, "{}", curved.residual);
        assert!(matches!(
            abel_identity_residual(&phase("n"), 1, 10),
            Err(ExpsumError::Pole { n: 1, .. })
        ));
        assert!(abel_identity_residual(&phase("0.5*n + 0.5"), 1, 10).is_ok());
    }

    #[test]
    fn aitken_behaviour() {
        assert_eq!(aitken(0.3, 0.3, 0.3), Some(0.3));
        let p = aitken(0.5 + 1.0 / 4.0, 0.5 + 1.0 / 8.0, 0.5 + 1.0 / 16.0).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert_eq!(aitken(0.1, 0.2, 0.4), None);
    }
}
