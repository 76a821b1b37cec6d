//! The scalar equation `x(n+1) = a x(n) + y(n)` with `a = rho e(-phi)`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::expsum::{certify_bounded, certify_unbounded, Certificate, ExpsumError, TailMajorant};
use crate::numeric::{
    fit_growth, rotation, ComplexSum, GrowthFit, Polar, SampleRecorder, MAX_SAMPLES,
};
use crate::phasefn::{PhaseExpr, SequenceSource, SourceError};

/// Decades of `n` used by trajectory growth fits.
pub const TRAJECTORY_FIT_DECADES: f64 = 2.0;

/// Running-sup growth exponent above which an input is treated as unbounded.
pub const UNBOUNDED_TREND: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ScalarError {
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Expsum(#[from] ExpsumError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("operation needs |a| = 1")]
    NotCritical,
    #[error("operation needs |a| > 1")]
    NotExpanding,
    #[error("non-finite state at n = {n}")]
    Overflow { n: u64 },
    #[error("input does not look bounded: running sup grows like n^{exponent:.3}")]
    UnboundedInput { exponent: f64 },
    #[error("W_φ membership needs a phase source")]
    NotAPhase,
}

impl ScalarError {
    pub fn is_refusal(&self) -> bool {
        match self {
            ScalarError::UnboundedInput { .. } => true,
            ScalarError::Expsum(e) => e.is_refusal(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarEquation {
    pub rho: f64,
    /// Cycles in `[0, 1)`; `a = rho e(-phi)`.
    pub phi: f64,
    pub x1: Complex64,
    pub y: SequenceSource,
}

impl ScalarEquation {
    pub fn new(rho: f64, phi: f64, x1: Complex64, y: SequenceSource) -> Result<Self, ScalarError> {
        let p = Polar::new(rho, phi).ok_or_else(|| {
            ScalarError::InvalidParameter(format!("a = {rho} e(-{phi}) needs rho > 0 and finite phi"))
        })?;
        Ok(ScalarEquation {
            rho: p.rho,
            phi: p.phi,
            x1,
            y,
        })
    }

    pub fn polar(&self) -> Polar {
        Polar {
            rho: self.rho,
            phi: self.phi,
        }
    }

    pub fn is_critical(&self) -> bool {
        self.polar().is_critical()
    }

    /// `a^j` for integer `j`.
    pub fn power(&self, j: i64) -> Complex64 {
        self.polar().power(j)
    }

    pub fn a(&self) -> Complex64 {
        self.power(1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub horizon: u64,
    /// `max_{n<=N} |x(n)|` over every computed step.
    pub sup_abs: f64,
    pub sup_at: u64,
    pub final_re: f64,
    pub final_im: f64,
    pub growth_fit: GrowthFit,
    #[serde(skip)]
    pub values: Vec<(u64, Complex64)>,
}

impl Trajectory {
    pub fn final_value(&self) -> Complex64 {
        Complex64::new(self.final_re, self.final_im)
    }
}

/// Streams states into a [`Trajectory`].
pub(crate) struct TrajectoryBuilder {
    horizon: u64,
    sup: f64,
    sup_at: u64,
    last: Complex64,
    recorder: SampleRecorder,
}

impl TrajectoryBuilder {
    pub(crate) fn new(horizon: u64) -> Self {
        TrajectoryBuilder {
            horizon,
            sup: 0.0,
            sup_at: 0,
            last: Complex64::new(0.0, 0.0),
            recorder: SampleRecorder::new(horizon, MAX_SAMPLES),
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, n: u64, x: Complex64) -> Result<(), ScalarError> {
        let a = x.norm();
        if !a.is_finite() {
            return Err(ScalarError::Overflow { n });
        }
        if a > self.sup || self.sup_at == 0 {
            self.sup = a;
            self.sup_at = n;
        }
        self.last = x;
        self.recorder.offer(n, x);
        Ok(())
    }

    pub(crate) fn finish(self) -> Trajectory {
        Trajectory {
            horizon: self.horizon,
            sup_abs: self.sup,
            sup_at: self.sup_at,
            final_re: self.last.re,
            final_im: self.last.im,
            growth_fit: fit_growth(
                &self.recorder.magnitudes(),
                self.horizon,
                TRAJECTORY_FIT_DECADES,
            ),
            values: self.recorder.samples,
        }
    }
}

/// Iterates the recurrence for `n = 1..=N`.
///
/// For `|a| = 1` the state is kept in the rotating frame
/// `w(n) = a^{-(n-1)} x(n)`, so `w(n+1) = w(n) + a^{-n} y(n)` and the
/// reported `x(n) = a^{n-1} w(n)` uses an exactly reduced phase.
pub fn simulate_scalar(eq: &ScalarEquation, horizon: u64) -> Result<Trajectory, ScalarError> {
    let mut out = TrajectoryBuilder::new(horizon);
    let mut y = eq.y.cursor();
    if eq.is_critical() {
        let mut w = ComplexSum::new();
        w.add(eq.x1);
        for n in 1..=horizon {
            out.push(n, eq.power(n as i64 - 1) * w.value())?;
            if n < horizon {
                w.add(rotation(n, eq.phi) * y.value(n)?);
            }
        }
    } else {
        let a = eq.a();
        let mut x = eq.x1;
        for n in 1..=horizon {
            out.push(n, x)?;
            if n < horizon {
                x = a * x + y.value(n)?;
            }
        }
    }
    Ok(out.finish())
}

/// `x(n) = a^{n-1} x1 + sum_{k=1}^{n-1} a^{n-k-1} y(k)`.
pub fn closed_form_scalar(eq: &ScalarEquation, n: u64) -> Result<Complex64, ScalarError> {
    if n == 0 {
        return Err(ScalarError::InvalidParameter("n must be at least 1".into()));
    }
    let mut y = eq.y.cursor();
    let mut sum = ComplexSum::new();
    sum.add(eq.power(n as i64 - 1) * eq.x1);
    for k in 1..n {
        sum.add(eq.power((n - k - 1) as i64) * y.value(k)?);
    }
    Ok(sum.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriterionSums {
    /// `max_{J<=K} |sum_{k<=J} b(k) y(k) e(k phi)|`.
    pub sup_abs: f64,
    pub final_abs: f64,
}

/// `max_{J<=K} |sum_{k=1}^{J} y(k) / a^k|` for `|a| = 1`.
pub fn criterion_partial_sums(eq: &ScalarEquation, k_max: u64) -> Result<CriterionSums, ScalarError> {
    weighted_criterion_sums(eq, k_max, |_| 1.0)
}

/// As [`criterion_partial_sums`] with each term multiplied by `b(k)`.
pub fn weighted_criterion_sums(
    eq: &ScalarEquation,
    k_max: u64,
    b: impl Fn(u64) -> f64,
) -> Result<CriterionSums, ScalarError> {
    if !eq.is_critical() {
        return Err(ScalarError::NotCritical);
    }
    let mut y = eq.y.cursor();
    let mut sum = ComplexSum::new();
    let mut sup = 0.0f64;
    for k in 1..=k_max {
        sum.add(rotation(k, eq.phi) * y.value(k)? * b(k));
        sup = sup.max(sum.value().norm());
    }
    Ok(CriterionSums {
        sup_abs: sup,
        final_abs: sum.value().norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialValue {
    pub re: f64,
    pub im: f64,
    /// Number of series terms summed.
    pub terms: u64,
    /// Bound on the truncated geometric tail.
    pub tail_bound: f64,
    /// `sup |y(n)|` used for the tail bound.
    pub input_bound: f64,
}

impl InitialValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Running `sup |y(n)|` over `1..=probe` and its growth exponent over the
/// last decade, `log10(sup_{n<=P} |y| / sup_{n<=P/10} |y|)`.
pub(crate) fn input_bound(y: &SequenceSource, probe: u64) -> Result<(f64, f64), ScalarError> {
    let probe = y.horizon().map_or(probe, |h| h.min(probe));
    if probe == 0 || y.is_zero() {
        return Ok((0.0, 0.0));
    }
    let mut c = y.cursor();
    let mut sup = 0.0f64;
    let mut early = 0.0f64;
    for n in 1..=probe {
        sup = sup.max(c.value(n)?.norm());
        if n == (probe / 10).max(1) {
            early = sup;
        }
    }
    let trend = if early > 0.0 { (sup / early).log10() } else if sup > 0.0 { f64::INFINITY } else { 0.0 };
    Ok((sup, trend))
}

/// Default probe length for measuring `sup |y|`.
pub const INPUT_PROBE: u64 = 10_000;

/// `x1 = -sum_{k>=1} a^{-k} y(k)`, the unique initial value with a bounded
/// solution when `|a| > 1`, truncated once `Y rho^{-K} / (rho - 1) < tol`.
pub fn required_init_scalar(eq: &ScalarEquation, tol: f64) -> Result<InitialValue, ScalarError> {
    if eq.rho <= 1.0 {
        return Err(ScalarError::NotExpanding);
    }
    if !(tol > 0.0) {
        return Err(ScalarError::InvalidParameter(format!("tolerance {tol}")));
    }
    let (mut y_sup, trend) = input_bound(&eq.y, INPUT_PROBE)?;
    if trend > UNBOUNDED_TREND {
        return Err(ScalarError::UnboundedInput { exponent: trend });
    }
    let terms_for = |y_sup: f64| -> u64 {
        if y_sup == 0.0 {
            return 0;
        }
        let k = ((y_sup / ((eq.rho - 1.0) * tol)).ln() / eq.rho.ln()).ceil();
        k.max(1.0) as u64
    };
    let mut y = eq.y.cursor();
    let mut sum = ComplexSum::new();
    let mut k_max = terms_for(y_sup);
    let mut k = 0;
    while k < k_max {
        k += 1;
        let v = y.value(k)?;
        if v.norm() > y_sup {
            y_sup = v.norm();
            k_max = terms_for(y_sup);
        }
        sum.add(eq.power(-(k as i64)) * v);
    }
    let x1 = -sum.value();
    let tail_bound = if y_sup == 0.0 {
        0.0
    } else {
        y_sup * eq.rho.powf(-(k as f64)) / (eq.rho - 1.0)
    };
    Ok(InitialValue {
        re: x1.re,
        im: x1.im,
        terms: k,
        tail_bound,
        input_bound: y_sup,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    AllBounded,
    UniqueBounded,
    Critical,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarClassification {
    pub regime: Regime,
    pub input_sup: f64,
    pub required_x1: Option<InitialValue>,
    pub certificate: Option<Certificate>,
    pub criterion: Option<CriterionSums>,
    pub membership: Option<Membership>,
    pub notes: Vec<String>,
}

/// Tolerance used by [`classify_scalar`] for the expanding initializer.
pub const DEFAULT_TOL: f64 = 1e-8;

pub fn classify_scalar(eq: &ScalarEquation, horizon: u64) -> Result<ScalarClassification, ScalarError> {
    classify_scalar_with(eq, horizon, &WphiDeclarations::default(), DEFAULT_TOL)
}

/// As [`classify_scalar`], passing `decl` to the critical-case certifiers
/// and `tol` to the expanding initializer.
pub fn classify_scalar_with(
    eq: &ScalarEquation,
    horizon: u64,
    decl: &WphiDeclarations,
    tol: f64,
) -> Result<ScalarClassification, ScalarError> {
    let (input_sup, _) = input_bound(&eq.y, horizon)?;
    let mut out = ScalarClassification {
        regime: Regime::Critical,
        input_sup,
        required_x1: None,
        certificate: None,
        criterion: None,
        membership: None,
        notes: Vec::new(),
    };
    if eq.rho < 1.0 {
        out.regime = Regime::AllBounded;
        out.notes.push(format!(
            "every solution is bounded by |x1| + sup|y| / (1 - rho) when y is bounded; sup|y| over {horizon} terms is {input_sup}"
        ));
    } else if eq.rho > 1.0 {
        out.regime = Regime::UniqueBounded;
        out.required_x1 = Some(required_init_scalar(eq, tol)?);
    } else if let Some(f) = eq.y.phase_expr() {
        let w = wphi_membership(eq.phi, f, horizon, decl)?;
        out.membership = Some(w.membership);
        out.certificate = Some(w.certificate);
    } else {
        out.criterion = Some(criterion_partial_sums(eq, horizon)?);
        out.notes
            .push("non-phase input: criterion partial sums are horizon evidence only".into());
    }
    Ok(out)
}

/// Optional analytic statements about the phase `f` of `y(n) = e(f(n))`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WphiDeclarations {
    pub tail_majorant: Option<TailMajorant>,
    /// Declared `lim Δf(n)`.
    pub psi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Membership {
    Member,
    NonMember,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct WphiReport {
    pub membership: Membership,
    /// The combined phase `g(n) = f(n) + n phi` that was analysed.
    pub combined_phase: String,
    pub certificate: Certificate,
}

/// Decides whether `{e(f(n))}` belongs to `W_phi` by certifying the sums
/// of `e(f(n) + n phi)`.
pub fn wphi_membership(
    phi: f64,
    f: &PhaseExpr,
    horizon: u64,
    decl: &WphiDeclarations,
) -> Result<WphiReport, ScalarError> {
    let g = f.plus_linear(phi);
    let psi_g = decl.psi.map(|p| p + phi);
    let integer_declared = psi_g.is_some_and(|p| (p - p.round()).abs() <= 1e-12);
    let mut membership = Membership::Undetermined;
    let mut certificate = None;
    if !integer_declared {
        let c = certify_bounded(&g, horizon, decl.tail_majorant.as_ref())?;
        if c.verdict.is_bounded() {
            membership = Membership::Member;
        }
        certificate = Some(c);
    }
    if membership == Membership::Undetermined {
        let c = certify_unbounded(&g, horizon, psi_g)?;
        if c.verdict.is_unbounded() {
            membership = Membership::NonMember;
            certificate = Some(c);
        } else if certificate.is_none() {
            certificate = Some(c);
        }
    }
    Ok(WphiReport {
        membership,
        combined_phase: g.to_string(),
        certificate: certificate.expect("one certifier always runs"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsum::Verdict;
    use crate::phasefn::parse_phase;

    fn phase_source(s: &str) -> SequenceSource {
        SequenceSource::phase(parse_phase(s).unwrap())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn simulate_examples() {
        let zero = ScalarEquation::new(1.0, 0.0, c(0.0, 0.0), SequenceSource::Zero).unwrap();
        let t = simulate_scalar(&zero, 100).unwrap();
        assert_eq!(t.sup_abs, 0.0);
        let quarter = ScalarEquation::new(1.0, 0.25, c(1.0, 0.0), SequenceSource::Zero).unwrap();
        let t = simulate_scalar(&quarter, 5).unwrap();
        assert!((t.final_value() - c(1.0, 0.0)).norm() < 1e-15);
        let x2 = t.values[1].1;
        assert!((x2 - c(0.0, -1.0)).norm() < 1e-15);
        let alt = ScalarEquation::new(1.0, 0.0, c(0.0, 0.0), phase_source("0.5*n")).unwrap();
        assert!(simulate_scalar(&alt, 100_000).unwrap().sup_abs <= 1.0 + 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let x1 = c(0.3, -0.7);
        let eq = ScalarEquation::new(1.0, 0.4, x1, phase_source("sqrt(n)")).unwrap();
        assert_eq!(closed_form_scalar(&eq, 1).unwrap(), x1);
        let two = ScalarEquation::new(2.0, 0.0, c(1.0, 0.0), SequenceSource::Zero).unwrap();
        assert_eq!(closed_form_scalar(&two, 11).unwrap(), c(1024.0, 0.0));
        // y(n) = a^n gives x(n) = (n-1) a^{n-1} for x1 = 0.
        let res = ScalarEquation::new(1.0, 0.3, c(0.0, 0.0), phase_source("-0.3*n")).unwrap();
        let t = simulate_scalar(&res, 50).unwrap();
        let want = res.power(49) * 49.0;
        assert!((closed_form_scalar(&res, 50).unwrap() - want).norm() < 1e-12);
        assert!((t.final_value() - want).norm() < 1e-12);
    }

    #[test]
    fn criterion_examples() {
        let zero = ScalarEquation::new(1.0, 0.3, c(0.0, 0.0), SequenceSource::Zero).unwrap();
        assert_eq!(criterion_partial_sums(&zero, 1000).unwrap().sup_abs, 0.0);
        let alt = ScalarEquation::new(1.0, 0.0, c(0.0, 0.0), phase_source("0.5*n")).unwrap();
        assert!((criterion_partial_sums(&alt, 1_000_000).unwrap().sup_abs - 1.0).abs() < 1e-12);
        let geo = ScalarEquation::new(1.0, 0.3, c(0.0, 0.0), phase_source("0")).unwrap();
        let s = criterion_partial_sums(&geo, 100_000).unwrap().sup_abs;
        assert!((s - 1.0 / (0.3 * std::f64::consts::PI).sin()).abs() < 1e-3);
        let expanding = ScalarEquation::new(2.0, 0.0, c(0.0, 0.0), SequenceSource::Zero).unwrap();
        assert!(matches!(
            criterion_partial_sums(&expanding, 10),
            Err(ScalarError::NotCritical)
        ));
    }

    #[test]
    fn expanding_initial_values() {
        let ones = ScalarEquation::new(2.0, 0.0, c(0.0, 0.0), phase_source("0")).unwrap();
        let init = required_init_scalar(&ones, 1e-12).unwrap();
        assert!((init.value() - c(-1.0, 0.0)).norm() < 1e-12);
        assert!(init.tail_bound < 1e-12);
        let zero = ScalarEquation::new(2.0, 0.0, c(0.0, 0.0), SequenceSource::Zero).unwrap();
        assert_eq!(required_init_scalar(&zero, 1e-8).unwrap().value(), c(0.0, 0.0));
        let alt = ScalarEquation::new(3.0, 0.0, c(0.0, 0.0), phase_source("0.5*n")).unwrap();
        let init = required_init_scalar(&alt, 1e-12).unwrap();
        assert!((init.value() - c(0.25, 0.0)).norm() < 1e-12);
        let bounded = ScalarEquation { x1: init.value(), ..alt };
        assert!(simulate_scalar(&bounded, 20).unwrap().sup_abs < 0.26);
        let ramp: Vec<Complex64> = (1..=20_000).map(|k| c(k as f64, 0.0)).collect();
        let growing = ScalarEquation::new(2.0, 0.0, c(0.0, 0.0), SequenceSource::Explicit(ramp)).unwrap();
        assert!(matches!(
            required_init_scalar(&growing, 1e-8),
            Err(ScalarError::UnboundedInput { .. })
        ));
    }

    #[test]
    fn classification() {
        let contracting = ScalarEquation::new(0.5, 0.1, c(1.0, 0.0), phase_source("n^2")).unwrap();
        assert_eq!(classify_scalar(&contracting, 1000).unwrap().regime, Regime::AllBounded);
        let expanding = ScalarEquation::new(2.0, 0.0, c(0.0, 0.0), phase_source("0")).unwrap();
        let r = classify_scalar(&expanding, 1000).unwrap();
        assert_eq!(r.regime, Regime::UniqueBounded);
        assert!((r.required_x1.unwrap().value() - c(-1.0, 0.0)).norm() < 1e-8);
        let critical = ScalarEquation::new(1.0, 0.0, c(0.0, 0.0), phase_source("n^0.5")).unwrap();
        let r = classify_scalar(&critical, 100_000).unwrap();
        assert_eq!(r.regime, Regime::Critical);
        assert_eq!(r.certificate.unwrap().verdict, Verdict::UnboundedEvidence);
    }

    #[test]
    fn wphi_examples() {
        let f = parse_phase("n^0.5 - n^(1/3) + log(n)").unwrap();
        let r = wphi_membership(0.25, &f, 100_000, &WphiDeclarations::default()).unwrap();
        assert_eq!(r.membership, Membership::Member);
        let atan = parse_phase("csum(1, atan(k))/(2*pi)").unwrap();
        let decl = WphiDeclarations {
            psi: Some(0.25),
            ..Default::default()
        };
        let r = wphi_membership(0.75, &atan, 100_000, &decl).unwrap();
        assert_eq!(r.membership, Membership::NonMember);
        assert_eq!(r.certificate.verdict, Verdict::UnboundedCertified);
        let half = parse_phase("0.5*n").unwrap();
        let r = wphi_membership(0.0, &half, 10_000, &WphiDeclarations::default()).unwrap();
        assert_eq!(r.membership, Membership::Member);
    }
}
