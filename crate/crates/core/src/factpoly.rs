//! Exact raising and falling factorials, generalised binomials and the
//! binomial shift identity, plus guarded double-precision conversions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type ExactScalar = BigRational;

pub fn int(v: i64) -> ExactScalar {
    BigRational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> ExactScalar {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `(x)^{[n]} = x (x+1) ... (x+n-1)`.
pub fn raising(x: &ExactScalar, n: u32) -> ExactScalar {
    (0..n).fold(ExactScalar::one(), |acc, i| acc * (x + int(i as i64)))
}

/// `(x)_{[n]} = x (x-1) ... (x-n+1)`.
pub fn falling(x: &ExactScalar, n: u32) -> ExactScalar {
    (0..n).fold(ExactScalar::one(), |acc, i| acc * (x - int(i as i64)))
}

pub fn factorial(n: u32) -> ExactScalar {
    raising(&ExactScalar::one(), n)
}

/// `binom(x, n) = (x)_{[n]} / n!` for any rational `x`.
pub fn binomial_ext(x: &ExactScalar, n: u32) -> ExactScalar {
    falling(x, n) / factorial(n)
}

/// Both sides of
/// `binom(n-k, m) = sum_{j=0}^{m} (-1)^{m-j} binom(n, j) (k)^{[m-j]} / (m-j)!`.
pub fn lemma_binomial_lhs_rhs(n: i64, k: i64, m: u32) -> (ExactScalar, ExactScalar) {
    lemma_with(n, k, m, raising)
}

/// The identity evaluated with a caller-supplied raising-factorial kernel,
/// so the self-test can demonstrate that a corrupted kernel is detected.
pub fn lemma_with(
    n: i64,
    k: i64,
    m: u32,
    raise: impl Fn(&ExactScalar, u32) -> ExactScalar,
) -> (ExactScalar, ExactScalar) {
    let lhs = binomial_ext(&int(n - k), m);
    let nn = int(n);
    let kk = int(k);
    let mut rhs = ExactScalar::zero();
    for j in 0..=m {
        let d = m - j;
        let term = binomial_ext(&nn, j) * raise(&kk, d) / factorial(d);
        if d.is_multiple_of(2) {
            rhs += term;
        } else {
            rhs -= term;
        }
    }
    (lhs, rhs)
}

/// Result of the exhaustive identity checks.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdentityReport {
    pub name: &'static str,
    pub cases: u64,
    pub failures: Vec<String>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Lemma equality over `0 <= n, k <= n_max`, `0 <= m <= m_max`.
pub fn check_lemma(
    n_max: i64,
    m_max: u32,
    raise: impl Fn(&ExactScalar, u32) -> ExactScalar + Copy,
) -> IdentityReport {
    let mut report = IdentityReport {
        name: "binomial shift lemma",
        ..Default::default()
    };
    for n in 0..=n_max {
        for k in 0..=n_max {
            for m in 0..=m_max {
                report.cases += 1;
                let (l, r) = lemma_with(n, k, m, raise);
                if l != r {
                    report.failures.push(format!("n={n} k={k} m={m}: {l} != {r}"));
                }
            }
        }
    }
    report
}

/// The rational grid `{-10..10, ±1/2, ±3/2}` used by the identity checks.
pub fn identity_grid() -> Vec<ExactScalar> {
    let mut g: Vec<ExactScalar> = (-10..=10).map(int).collect();
    for &(p, q) in &[(1, 2), (-1, 2), (3, 2), (-3, 2)] {
        g.push(ratio(p, q));
    }
    g
}

/// `(-x)_{[n]} = (-1)^n (x)^{[n]}` over the grid, `n <= n_max`.
pub fn check_reflection(n_max: u32) -> IdentityReport {
    let mut report = IdentityReport {
        name: "reflection",
        ..Default::default()
    };
    for x in identity_grid() {
        for n in 0..=n_max {
            report.cases += 1;
            let lhs = falling(&-x.clone(), n);
            let mut rhs = raising(&x, n);
            if n % 2 == 1 {
                rhs = -rhs;
            }
            if lhs != rhs {
                report.failures.push(format!("x={x} n={n}"));
            }
        }
    }
    report
}

/// `(x+y)_{[n]} = sum_i binom(n, i) (x)_{[i]} (y)_{[n-i]}` over the grid.
pub fn check_vandermonde(n_max: u32) -> IdentityReport {
    let mut report = IdentityReport {
        name: "Vandermonde",
        ..Default::default()
    };
    let grid = identity_grid();
    for x in &grid {
        for y in &grid {
            for n in 0..=n_max {
                report.cases += 1;
                let lhs = falling(&(x + y), n);
                let rhs = (0..=n).fold(ExactScalar::zero(), |acc, i| {
                    acc + binomial_ext(&int(n as i64), i) * falling(x, i) * falling(y, n - i)
                });
                if lhs != rhs {
                    report.failures.push(format!("x={x} y={y} n={n}"));
                }
            }
        }
    }
    report
}

/// Log-magnitude above which `(k)^{[r]} / r!` is treated as overflowing.
const LOG_OVERFLOW_GUARD: f64 = 700.0;

/// `(k)^{[r]} / r!` in double precision, or `None` when it would overflow.
///
/// For `k >= 1e6` and `r >= 8` the magnitude is checked in the log domain
/// before the product is formed.
pub fn rising_over_factorial(k: f64, r: u32) -> Option<f64> {
    if k >= 1e6 && r >= 8 {
        let log_mag: f64 = (0..r).map(|i| ((k + i as f64) / (i as f64 + 1.0)).ln()).sum();
        if log_mag > LOG_OVERFLOW_GUARD {
            return None;
        }
    }
    let mut v = 1.0;
    for i in 0..r {
        v *= (k + i as f64) / (i as f64 + 1.0);
    }
    v.is_finite().then_some(v)
}

/// Generalised binomial `binom(x, j)` in double precision.
pub fn binom(x: f64, j: u32) -> Option<f64> {
    let mut v = 1.0;
    for i in 0..j {
        v *= (x - i as f64) / (i as f64 + 1.0);
    }
    v.is_finite().then_some(v)
}

/// Nearest double to an exact value; out-of-range values map to infinities.
pub fn to_f64(x: &ExactScalar) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorial_examples() {
        assert_eq!(raising(&int(3), 2), int(12));
        assert_eq!(raising(&ratio(7, 3), 0), int(1));
        assert_eq!(raising(&int(1), 5), int(120));
        assert_eq!(falling(&int(5), 3), int(60));
        assert_eq!(falling(&int(2), 3), int(0));
        assert_eq!(falling(&int(-1), 2), int(2));
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_ext(&int(5), 2), int(10));
        assert_eq!(binomial_ext(&ratio(-9, 4), 0), int(1));
        assert_eq!(binomial_ext(&ratio(1, 2), 2), ratio(-1, 8));
        assert_eq!(binomial_ext(&int(-3), 2), int(6));
    }

    #[test]
    fn lemma_examples() {
        assert_eq!(lemma_binomial_lhs_rhs(5, 2, 2), (int(3), int(3)));
        let (l, r) = lemma_binomial_lhs_rhs(9, 0, 4);
        assert_eq!(l, binomial_ext(&int(9), 4));
        assert_eq!(r, l);
        assert_eq!(lemma_binomial_lhs_rhs(4, 7, 0), (int(1), int(1)));
        // Negative upper index on the left: binom(-3, 2) = 6.
        assert_eq!(lemma_binomial_lhs_rhs(2, 5, 2), (int(6), int(6)));
    }

    #[test]
    fn corrupted_kernel_is_detected() {
        let bad = |x: &ExactScalar, n: u32| raising(x, n) + if n == 3 { int(1) } else { int(0) };
        assert!(!check_lemma(6, 4, bad).passed());
        assert!(check_lemma(6, 4, raising).passed());
    }

    #[test]
    fn double_helpers() {
        assert_eq!(rising_over_factorial(3.0, 2), Some(6.0));
        assert_eq!(rising_over_factorial(5.0, 0), Some(1.0));
        assert!(rising_over_factorial(1e300, 8).is_none());
        assert!(rising_over_factorial(1e7, 8).is_some());
        assert_eq!(binom(-3.0, 2), Some(6.0));
        assert_eq!(binom(9.0, 0), Some(1.0));
        assert_eq!(to_f64(&ratio(1, 4)), 0.25);
    }
}
