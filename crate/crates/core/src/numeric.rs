//! Floating-point kernels shared by every analysis: double-double values,
//! compensated accumulators, exact phase reduction and growth fitting.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("non-finite phase {0}")]
    NonFinite(f64),
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`, about 106 bits of
/// significand.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(self.hi.sqrt());
        }
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let r = ((self.hi - p) - e + self.lo) / (2.0 * s);
        Dd::new(s, r)
    }

    /// Integer power by repeated squaring, exact to double-double precision.
    pub fn powi(self, mut e: i64) -> Self {
        if e == 0 {
            return Dd::ONE;
        }
        let invert = e < 0;
        e = e.abs();
        let mut base = self;
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if invert {
            Dd::ONE / acc
        } else {
            acc
        }
    }

    /// Applies `f` to `hi` and corrects with the first-order term `f'(hi)*lo`.
    #[inline]
    pub fn map_with_derivative(self, value: f64, derivative: f64) -> Self {
        Dd::new(value, derivative * self.lo)
    }

    /// Fractional part in `[0, 1)`, computed without losing the low word.
    pub fn frac(self) -> f64 {
        let fh = self.hi - self.hi.floor();
        let s = fh + self.lo;
        let r = s - s.floor();
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }

    /// Signed distance to the nearest integer, in `[-1/2, 1/2]`.
    pub fn centered_frac(self) -> f64 {
        let r = self.frac();
        if r >= 0.5 {
            r - 1.0
        } else {
            r
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() {
            return Dd::from_f64(q1);
        }
        let r = self - b * Dd::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

/// `e(x) = exp(2*pi*i*x)` for a phase already reduced to `[-1/2, 1]`.
#[inline]
fn unit_phase_reduced(r: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * r).sin_cos();
    Complex64::new(c, s)
}

/// `e(x) = exp(2*pi*i*x)`, with `x` reduced modulo 1 before the
/// trigonometric evaluation.
pub fn unit_phase(x: f64) -> Result<Complex64, NumericError> {
    if !x.is_finite() {
        return Err(NumericError::NonFinite(x));
    }
    Ok(unit_phase_reduced(x - x.round()))
}

/// `e(x)` for a double-double phase; the integer part is discarded exactly.
#[inline]
pub fn unit_phase_dd(x: Dd) -> Complex64 {
    unit_phase_reduced(x.centered_frac())
}

/// Fractional part of `k * phi` in `[0, 1)`, exact up to the final rounding
/// (valid for `k < 2^53`).
#[inline]
pub fn cycle_product(k: u64, phi: f64) -> f64 {
    let (p, e) = two_prod(k as f64, phi);
    Dd::new(p, e).frac()
}

/// `e(k * phi)` evaluated from the exactly reduced product.
#[inline]
pub fn rotation(k: u64, phi: f64) -> Complex64 {
    let r = cycle_product(k, phi);
    unit_phase_reduced(if r >= 0.5 { r - 1.0 } else { r })
}

/// `|rho - 1|` at or below this is treated as the unit circle.
pub const CRITICAL_TOL: f64 = 1e-12;

/// `rho e(-phi)` with `phi` in cycles, `0 <= phi < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Polar {
    pub rho: f64,
    pub phi: f64,
}

impl Polar {
    /// Normalises `phi` into `[0, 1)` and snaps `rho` within
    /// [`CRITICAL_TOL`] of 1 to exactly 1.
    pub fn new(rho: f64, phi: f64) -> Option<Polar> {
        if !(rho.is_finite() && rho > 0.0 && phi.is_finite()) {
            return None;
        }
        let phi = phi - phi.floor();
        let phi = if phi >= 1.0 { 0.0 } else { phi };
        let rho = if (rho - 1.0).abs() <= CRITICAL_TOL { 1.0 } else { rho };
        Some(Polar { rho, phi })
    }

    pub fn is_critical(self) -> bool {
        self.rho == 1.0
    }

    /// `(rho e(-phi))^j`, with the phase `-j phi` reduced exactly.
    pub fn power(self, j: i64) -> Complex64 {
        let turn = if j >= 0 {
            rotation(j as u64, -self.phi)
        } else {
            rotation(j.unsigned_abs(), self.phi)
        };
        if self.is_critical() {
            turn
        } else {
            turn * self.rho.powf(j as f64)
        }
    }
}

/// `cot(pi * x)` evaluated on the reduced argument.
pub fn cot_pi(x: f64) -> f64 {
    let r = x - x.round();
    let (s, c) = (PI * r).sin_cos();
    c / s
}

/// Kahan–Babuška (Neumaier) compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex accumulator (independent Neumaier sums per component).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    /// Exact parts of the accumulator, for lossless chunk combination.
    pub fn parts(&self) -> (Dd, Dd) {
        (
            Dd::new(self.re.sum, self.re.comp),
            Dd::new(self.im.sum, self.im.comp),
        )
    }
}

/// Double-double complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re = self.re + Dd::from_f64(z.re);
        self.im = self.im + Dd::from_f64(z.im);
    }

    pub fn add_parts(&mut self, (re, im): (Dd, Dd)) {
        self.re = self.re + re;
        self.im = self.im + im;
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

/// Roughly geometric set of sample indices in `1..=n_max`, always including
/// both endpoints, at most `max_points` entries.
pub fn geometric_grid(n_max: u64, max_points: usize) -> Vec<u64> {
    if n_max == 0 {
        return Vec::new();
    }
    let max_points = max_points.max(2);
    let ln = (n_max as f64).ln();
    let mut out: Vec<u64> = Vec::with_capacity(max_points);
    for j in 0..max_points {
        let t = j as f64 / (max_points - 1) as f64;
        let k = ((ln * t).exp().round() as u64).clamp(1, n_max);
        if out.last() != Some(&k) {
            out.push(k);
        }
    }
    if out.last() != Some(&n_max) {
        out.push(n_max);
    }
    out
}

/// Least-squares fit of `|S(K)| ~ c * K^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub coefficient: f64,
    pub rms_residual: f64,
    /// Number of samples that entered the fit.
    pub points: usize,
    /// Every window sample was below 1; exponent reported as 0.
    pub floor_limited: bool,
    /// Exponent outside `[-0.5, 1.5]` or too few decades.
    pub reliable: bool,
}

/// Fits `log|S|` against `log K` over the top `decades` decades below
/// `horizon`, skipping samples with `|S| < 1`.
pub fn fit_growth(samples: &[(u64, f64)], horizon: u64, decades: f64) -> GrowthFit {
    let lower = (horizon as f64) / 10f64.powf(decades);
    let window: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(k, _)| (*k as f64) >= lower && *k <= horizon)
        .map(|&(k, v)| (k as f64, v))
        .collect();
    let pts: Vec<(f64, f64)> = window
        .iter()
        .filter(|(_, v)| *v >= 1.0 && v.is_finite())
        .map(|&(k, v)| (k.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        let peak = window.iter().map(|p| p.1).fold(0.0f64, f64::max);
        return GrowthFit {
            exponent: 0.0,
            coefficient: peak,
            rms_residual: 0.0,
            points: pts.len(),
            floor_limited: true,
            reliable: true,
        };
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let beta = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - beta * mx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - intercept - beta * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let span = pts.last().unwrap().0 - pts[0].0;
    GrowthFit {
        exponent: beta,
        coefficient: intercept.exp(),
        rms_residual: rms,
        points: pts.len(),
        floor_limited: false,
        reliable: (-0.5..=1.5).contains(&beta) && span >= std::f64::consts::LN_10,
    }
}

/// Records samples at the grid points while a sequence is streamed.
#[derive(Debug, Clone)]
pub struct SampleRecorder {
    grid: Vec<u64>,
    next: usize,
    pub samples: Vec<(u64, Complex64)>,
}

impl SampleRecorder {
    pub fn new(horizon: u64, max_points: usize) -> Self {
        SampleRecorder {
            grid: geometric_grid(horizon, max_points),
            next: 0,
            samples: Vec::new(),
        }
    }

    #[inline]
    pub fn offer(&mut self, k: u64, value: Complex64) {
        if self.next < self.grid.len() && self.grid[self.next] == k {
            self.samples.push((k, value));
            self.next += 1;
        }
    }

    pub fn magnitudes(&self) -> Vec<(u64, f64)> {
        self.samples.iter().map(|&(k, z)| (k, z.norm())).collect()
    }
}

/// Maximum number of decimated samples kept per sequence.
pub const MAX_SAMPLES: usize = 4096;
