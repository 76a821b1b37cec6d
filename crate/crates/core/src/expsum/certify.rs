use serde::Serialize;

use super::{aitken, ExpsumError};
use crate::numeric::{cot_pi, geometric_grid, unit_phase_dd, ComplexSum, NeumaierSum};
use crate::phasefn::{EvalError, PhaseExpr};

/// Smallest horizon accepted by the certifiers.
pub const MIN_HORIZON: u64 = 1000;

/// Required cycle distance between `ψ` and the nearest integer.
const PSI_MARGIN: f64 = 1e-6;

const BOUNDED_THEOREM: &str =
    "bounded exponential sums: Δf(n) -> ψ, sum |Δ²f| < ∞ and ψ not an integer";
const UNBOUNDED_THEOREM: &str =
    "unbounded exponential sums: (1/N) sum |Δf(n) - ψ| -> 0 with ψ an integer";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    BoundedCertified,
    BoundedEvidence,
    UnboundedCertified,
    UnboundedEvidence,
    Inconclusive,
}

impl Verdict {
    pub fn is_certified(self) -> bool {
        matches!(self, Verdict::BoundedCertified | Verdict::UnboundedCertified)
    }

    pub fn is_bounded(self) -> bool {
        matches!(self, Verdict::BoundedCertified | Verdict::BoundedEvidence)
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Verdict::UnboundedCertified | Verdict::UnboundedEvidence)
    }
}

/// User-supplied analytic control of `sum_{n>H} |Δ²f(n)|`.
#[derive(Debug, Clone, PartialEq)]
pub enum TailMajorant {
    /// The tail sum itself.
    Value(f64),
    /// A pointwise bound `|Δ²f(n)| <= b(n)` for `n > H`; the tail is
    /// `∫_H^∞ b`, valid when `b` is nonincreasing.
    Expr { bound: PhaseExpr, monotone: bool },
}

/// Which hypotheses were checked, at what horizon and with what margins.
#[derive(Debug, Clone, Default, Serialize)]
pub struct HypothesisReport {
    pub theorem: String,
    pub horizon: u64,
    pub psi_estimate: Option<f64>,
    pub psi_low: Option<f64>,
    pub psi_high: Option<f64>,
    pub psi_integer_distance: Option<f64>,
    pub declared_psi: Option<f64>,
    pub strip: Option<i64>,
    pub n0: Option<u64>,
    pub theta: Option<f64>,
    pub t: Option<f64>,
    /// `sum_{n=n0}^{H} |Δ²f(n)|`, including the evaluation slack.
    pub second_difference_prefix: Option<f64>,
    /// Bound or estimate of `sum_{n>H} |Δ²f(n)|`.
    pub second_difference_tail: Option<f64>,
    pub tail_source: Option<String>,
    /// `|S(n0-1)|`; this completion for the terms before `n0` is added by
    /// the implementation.
    pub prefix_constant: Option<f64>,
    /// `max_{K<n0} |S(K)|`.
    pub prefix_sup: Option<f64>,
    pub observed_sup: Option<f64>,
    pub cesaro_offset: Option<f64>,
    pub cesaro_last: Option<f64>,
    pub cesaro_decreasing: Option<bool>,
    pub limit_gap: Option<f64>,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    fn new(theorem: &str, horizon: u64) -> Self {
        HypothesisReport {
            theorem: theorem.to_string(),
            horizon,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub bound_value: Option<f64>,
    pub report: HypothesisReport,
}

impl Certificate {
    fn inconclusive(mut report: HypothesisReport, note: impl Into<String>) -> Self {
        report.notes.push(note.into());
        Certificate {
            verdict: Verdict::Inconclusive,
            bound_value: None,
            report,
        }
    }
}

/// Values of `Δf`, `|Δ²f|` and `|S|` over `1..=H`.
struct Table {
    /// `d1[n] = Δf(n)` for `1 <= n <= H+1`.
    d1: Vec<f64>,
    /// `d2[n] = |Δ²f(n)|` for `1 <= n <= H`.
    d2: Vec<f64>,
    /// Rounding allowance for `d2[n]`, proportional to the size of `f`.
    slack: Vec<f64>,
    /// `abs_s[K] = |S(K)|` for `0 <= K <= H`.
    abs_s: Vec<f64>,
}

impl Table {
    fn build(f: &PhaseExpr, h: u64) -> Result<Table, EvalError> {
        let len = h as usize + 2;
        let mut t = Table {
            d1: vec![0.0; len],
            d2: vec![0.0; len - 1],
            slack: vec![0.0; len - 1],
            abs_s: vec![0.0; len - 1],
        };
        let mut ev = f.evaluator();
        let mut sum = ComplexSum::new();
        let mut a = ev.eval(1)?;
        let mut b = ev.eval(2)?;
        for n in 1..=h {
            let c = ev.eval(n + 2)?;
            let i = n as usize;
            sum.add(unit_phase_dd(a));
            t.abs_s[i] = sum.value().norm();
            t.d1[i] = (b - a).to_f64();
            t.d2[i] = (c - b - b + a).to_f64().abs();
            t.slack[i] = 4.0 * f64::EPSILON * (a.hi.abs() + 2.0 * b.hi.abs() + c.hi.abs());
            if n == h {
                t.d1[i + 1] = (c - b).to_f64();
            }
            a = b;
            b = c;
        }
        Ok(t)
    }
}

/// Bounded-sum certificate for `Σ e(f(n))`.
///
/// The bound is `max(max_{K<n0}|S(K)|, |S(n0-1)| + 1 + cot(πθ) + (π/T²) Σ_{n>=n0}|Δ²f(n)|)`
/// with `T = sin(πθ)`, minimised over `n0`. It is certified only when a
/// tail majorant is supplied; otherwise the verdict is evidence.
pub fn certify_bounded(
    f: &PhaseExpr,
    horizon: u64,
    majorant: Option<&TailMajorant>,
) -> Result<Certificate, ExpsumError> {
    if horizon < MIN_HORIZON {
        return Err(ExpsumError::HorizonTooSmall {
            horizon,
            minimum: MIN_HORIZON,
        });
    }
    let h = horizon as usize;
    let table = Table::build(f, horizon)?;
    let mut report = HypothesisReport::new(BOUNDED_THEOREM, horizon);
    report.observed_sup = Some(table.abs_s.iter().copied().fold(0.0, f64::max));
    let psi = aitken(table.d1[h / 4], table.d1[h / 2], table.d1[h]);
    report.psi_estimate = psi;
    let last = table.d1[h + 1];

    let (low, high) = match majorant {
        Some(m) => {
            let tail = match m {
                TailMajorant::Value(v) => {
                    if !(v.is_finite() && *v >= 0.0) {
                        return Err(ExpsumError::Majorant(format!(
                            "tail value {v} must be finite and nonnegative"
                        )));
                    }
                    report.tail_source = Some("declared tail value".into());
                    *v
                }
                TailMajorant::Expr { bound, monotone } => {
                    check_majorant(bound, *monotone, &table, horizon)?;
                    report.tail_source = Some(format!("integral of b(n) = {bound} from H to ∞"));
                    majorant_tail_integral(bound, horizon)?
                }
            };
            report.second_difference_tail = Some(tail);
            (last - tail, last + tail)
        }
        None => {
            let Some(p) = psi else {
                return Ok(Certificate::inconclusive(
                    report,
                    "Δf shows no limit at the horizon",
                ));
            };
            report.tail_source = Some("heuristic |ψ - Δf(H+1)|, not a bound".into());
            report.second_difference_tail = Some((p - last).abs());
            (p.min(last), p.max(last))
        }
    };
    report.psi_low = Some(low);
    report.psi_high = Some(high);
    let strip = low.floor();
    let distance = if high < strip + 1.0 {
        (low - strip).min(strip + 1.0 - high)
    } else {
        0.0
    };
    report.psi_integer_distance = Some(distance);
    if distance < PSI_MARGIN {
        return Ok(Certificate::inconclusive(
            report,
            "ψ is not separated from the integers; the theorem does not apply",
        ));
    }
    report.strip = Some(strip as i64);
    let tail = report.second_difference_tail.unwrap_or(0.0);

    let mut prefix_sup = vec![0.0f64; h + 1];
    for k in 1..=h {
        prefix_sup[k] = prefix_sup[k - 1].max(table.abs_s[k]);
    }
    // Scan n0 downward, keeping the strip margin over [n0, ∞) and the
    // second-difference sum over [n0, H].
    let mut theta = distance.min(edge(table.d1[h + 1], strip));
    let mut d2_sum = NeumaierSum::new();
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for n0 in (1..=h).rev() {
        theta = theta.min(edge(table.d1[n0], strip));
        d2_sum.add(table.d2[n0] + table.slack[n0]);
        if theta <= 0.0 {
            break;
        }
        let t = (std::f64::consts::PI * theta).sin();
        let abel = table.abs_s[n0 - 1]
            + 1.0
            + cot_pi(theta)
            + std::f64::consts::PI / (t * t) * (d2_sum.value() + tail);
        let bound = prefix_sup[n0 - 1].max(abel);
        if best.is_none_or(|b| bound <= b.0) {
            best = Some((bound, n0, theta, d2_sum.value()));
        }
    }
    let Some((bound, n0, theta, prefix)) = best else {
        return Ok(Certificate::inconclusive(
            report,
            "Δf(H+1) is outside every strip [m+θ, m+1-θ]",
        ));
    };
    report.n0 = Some(n0 as u64);
    report.theta = Some(theta);
    report.t = Some((std::f64::consts::PI * theta).sin());
    report.second_difference_prefix = Some(prefix);
    report.prefix_constant = Some(table.abs_s[n0 - 1]);
    report.prefix_sup = Some(prefix_sup[n0 - 1]);
    report
        .notes
        .push("the terms before n0 are bounded by max(prefix_sup, prefix_constant + ...), added by this implementation".into());
    let verdict = if majorant.is_some() {
        Verdict::BoundedCertified
    } else {
        report
            .notes
            .push("no tail majorant supplied: bound_value is heuristic".into());
        Verdict::BoundedEvidence
    };
    Ok(Certificate {
        verdict,
        bound_value: Some(bound),
        report,
    })
}

/// Distance of `d` to the boundary of the strip `[m, m+1]`, negative outside.
fn edge(d: f64, m: f64) -> f64 {
    (d - m).min(m + 1.0 - d)
}

/// Checks a pointwise majorant against the computed `|Δ²f|` on `[H/2, H]`
/// and its declared monotonicity.
fn check_majorant(
    bound: &PhaseExpr,
    monotone: bool,
    table: &Table,
    horizon: u64,
) -> Result<(), ExpsumError> {
    if !monotone {
        return Err(ExpsumError::Majorant(
            "the integral comparison needs a majorant declared nonincreasing".into(),
        ));
    }
    let mut ev = bound.evaluator();
    let mut prev = f64::INFINITY;
    for n in (horizon / 2).max(1)..=horizon {
        let b = ev
            .eval(n)
            .map_err(|e| ExpsumError::Majorant(format!("b({n}) failed: {e}")))?
            .to_f64();
        let i = n as usize;
        if table.d2[i] - table.slack[i] > b * (1.0 + 1e-9) {
            return Err(ExpsumError::MajorantViolated {
                n,
                value: table.d2[i],
                bound: b,
            });
        }
        if b > prev * (1.0 + 1e-12) {
            return Err(ExpsumError::Majorant(format!(
                "b is declared nonincreasing but b({n}) > b({})",
                n - 1
            )));
        }
        prev = b;
    }
    Ok(())
}

const GAUSS_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `∫_H^∞ b(x) dx`, by the substitution `x = H e^s` and 8-point
/// Gauss–Legendre panels of width 1/2 in `s`, with a geometric estimate of
/// the truncated remainder added.
pub fn majorant_tail_integral(bound: &PhaseExpr, horizon: u64) -> Result<f64, ExpsumError> {
    const WIDTH: f64 = 0.5;
    const X_MAX: f64 = 1e150;
    let h = horizon as f64;
    let mut ev = bound.evaluator();
    let mut eval = |x: f64| -> Result<f64, ExpsumError> {
        let v = ev
            .eval_real(x)
            .map_err(|e| ExpsumError::Majorant(format!("b({x:e}) failed: {e}")))?
            .to_f64();
        if v < 0.0 {
            return Err(ExpsumError::Majorant(format!("b({x:e}) = {v} is negative")));
        }
        Ok(v)
    };
    let mut total = NeumaierSum::new();
    let mut prev_panel = f64::INFINITY;
    let mut s0 = 0.0;
    while h * (s0 + WIDTH).exp() < X_MAX {
        let mid = s0 + WIDTH / 2.0;
        let mut panel = 0.0;
        for (node, weight) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            for s in [mid - node * WIDTH / 2.0, mid + node * WIDTH / 2.0] {
                let x = h * s.exp();
                panel += weight * eval(x)? * x;
            }
        }
        panel *= WIDTH / 2.0;
        total.add(panel);
        let value = total.value();
        if panel > 0.0 && prev_panel.is_finite() {
            let q = panel / prev_panel;
            if q < 1.0 {
                let remainder = panel * q / (1.0 - q);
                if s0 >= 10.0 && remainder <= 1e-15 * value {
                    return Ok((value + remainder) * (1.0 + 1e-12));
                }
            }
        } else if panel == 0.0 && s0 >= 10.0 {
            return Ok(value);
        }
        prev_panel = panel;
        s0 += WIDTH;
    }
    Err(ExpsumError::Majorant(
        "the tail integral of b does not converge numerically".into(),
    ))
}

/// Unboundedness test via the Cesàro mean `c(N) = (1/N) Σ |Δf(n) - q|`,
/// `q` the integer nearest to `ψ`.
///
/// With a declared integer limit `ψ` and a strictly decreasing `c` over the
/// top two decades the verdict is certified; with no declaration, a
/// decreasing `c` ending below 0.01 is evidence.
pub fn certify_unbounded(
    f: &PhaseExpr,
    horizon: u64,
    declared_psi: Option<f64>,
) -> Result<Certificate, ExpsumError> {
    if horizon < MIN_HORIZON {
        return Err(ExpsumError::HorizonTooSmall {
            horizon,
            minimum: MIN_HORIZON,
        });
    }
    let h = horizon as usize;
    let mut d1 = vec![0.0f64; h + 1];
    let mut ev = f.evaluator();
    let mut prev = ev.eval(1)?;
    for (n, slot) in d1.iter_mut().enumerate().skip(1) {
        let next = ev.eval(n as u64 + 1)?;
        *slot = (next - prev).to_f64();
        prev = next;
    }
    let mut report = HypothesisReport::new(UNBOUNDED_THEOREM, horizon);
    report.declared_psi = declared_psi;
    let psi = aitken(d1[h / 4], d1[h / 2], d1[h]);
    report.psi_estimate = psi;
    let offset = declared_psi.or(psi).unwrap_or(d1[h]).round();
    report.cesaro_offset = Some(offset);

    let window_start = horizon / 100;
    let grid: Vec<u64> = geometric_grid(horizon, 512)
        .into_iter()
        .filter(|&k| k >= window_start)
        .collect();
    let mut sum = NeumaierSum::new();
    let mut trend = Vec::with_capacity(grid.len());
    let mut next = 0;
    for (n, &d) in d1.iter().enumerate().skip(1) {
        sum.add((d - offset).abs());
        if next < grid.len() && grid[next] == n as u64 {
            trend.push(sum.value() / n as f64);
            next += 1;
        }
    }
    let decreasing = trend.len() >= 3 && trend.windows(2).all(|w| w[1] < w[0]);
    let last = *trend.last().unwrap_or(&f64::NAN);
    report.cesaro_last = Some(last);
    report.cesaro_decreasing = Some(decreasing);

    let mut verdict = Verdict::Inconclusive;
    if let Some(p) = declared_psi {
        let gap = (d1[h] - p).abs();
        report.limit_gap = Some(gap);
        if (p - p.round()).abs() > 1e-12 {
            report
                .notes
                .push("declared limit is not an integer; the corollary does not apply".into());
        } else if !decreasing {
            report
                .notes
                .push("Cesàro mean is not decreasing over the top two decades".into());
        } else if gap >= 0.05 {
            report
                .notes
                .push("Δf(H) is not within 0.05 of the declared limit".into());
        } else {
            verdict = Verdict::UnboundedCertified;
        }
    }
    if verdict == Verdict::Inconclusive && decreasing && last < 0.01 {
        verdict = Verdict::UnboundedEvidence;
        report
            .notes
            .push("unboundedness is inferred from the horizon only".into());
    }
    if verdict == Verdict::Inconclusive && report.notes.is_empty() {
        report
            .notes
            .push("Cesàro mean does not tend to zero at this horizon".into());
    }
    Ok(Certificate {
        verdict,
        bound_value: None,
        report,
    })
}
