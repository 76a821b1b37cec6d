use num_complex::Complex64;
use serde::Serialize;

use super::{simulate_block, JordanBlock, JordanError};
use crate::exec::{chunked_complex_sum, chunks, map_ordered, Execution};
use crate::factpoly::{binom, rising_over_factorial};
use crate::numeric::{
    fit_growth, rotation, ComplexSum, DdComplex, Polar, SampleRecorder, MAX_SAMPLES,
};
use crate::phasefn::SequenceSource;
use crate::scalar::{input_bound, ScalarError, Trajectory, INPUT_PROBE, UNBOUNDED_TREND};

/// Growth exponent of the partial sums above which `C_m` is refused.
pub const TREND_LIMIT: f64 = 0.1;

/// Longest inner series the initializers will sum.
pub const MAX_TERMS: u64 = 100_000_000_000;

/// Decades used by the partial-sum trend check.
const TREND_DECADES: f64 = 2.0;

/// `x(n+1) = J_λ x(n) + y(n)` with `λ = e(-phi)` and
/// `y_m(n) = ỹ_m(n) / n^{m-1}`.
#[derive(Debug, Clone)]
pub struct CriticalCellProblem {
    pub phi: f64,
    pub ytilde: Vec<SequenceSource>,
    /// `C_m = max_{K<=H} |sum_{n<=K} ỹ_m(n) λ^{-n}|` over the probe horizon.
    pub c: Vec<f64>,
    /// Growth exponent of those partial sums over the top two decades.
    pub trend: Vec<f64>,
    pub probe_horizon: u64,
    /// Witnesses `α_m` and `max_n |z_m(n)|` of `z(n+1) = λ z(n) + ỹ_m(n)`,
    /// `z(1) = α_m`, over the probe horizon.
    pub alpha: Option<Vec<Complex64>>,
    pub alpha_sup: Option<Vec<f64>>,
}

impl CriticalCellProblem {
    pub fn new(
        phi: f64,
        ytilde: Vec<SequenceSource>,
        probe_horizon: u64,
        alpha: Option<Vec<Complex64>>,
        exec: Execution,
    ) -> Result<Self, JordanError> {
        let lambda = Polar::new(1.0, phi)
            .ok_or_else(|| JordanError::InvalidBlock(format!("phase {phi}")))?;
        if ytilde.len() < 2 {
            return Err(JordanError::InvalidBlock(
                "the cell theorem needs order M >= 2".into(),
            ));
        }
        if let Some(a) = &alpha {
            if a.len() != ytilde.len() {
                return Err(JordanError::InvalidBlock(format!(
                    "{} witnesses for {} rows",
                    a.len(),
                    ytilde.len()
                )));
            }
        }
        let rows: Vec<usize> = (0..ytilde.len()).collect();
        let measured = map_ordered(exec, &rows, |&j| {
            let witness = alpha.as_ref().map(|a| a[j]);
            measure_partial_sums(&ytilde[j], lambda.phi, probe_horizon, witness)
        });
        let mut c = Vec::new();
        let mut trend = Vec::new();
        let mut alpha_sup = Vec::new();
        for (j, m) in measured.into_iter().enumerate() {
            let (sup, exponent, witness_sup) = m?;
            if exponent > TREND_LIMIT {
                return Err(JordanError::UnboundedPartialSums { row: j + 1, exponent });
            }
            c.push(sup);
            trend.push(exponent);
            alpha_sup.push(witness_sup);
        }
        Ok(CriticalCellProblem {
            phi: lambda.phi,
            ytilde,
            c,
            trend,
            probe_horizon,
            alpha_sup: alpha.as_ref().map(|_| alpha_sup),
            alpha,
        })
    }

    pub fn order(&self) -> usize {
        self.ytilde.len()
    }

    pub fn lambda(&self) -> Polar {
        Polar {
            rho: 1.0,
            phi: self.phi,
        }
    }

    /// The inputs `y_m = ỹ_m / n^{m-1}`.
    pub fn inputs(&self) -> Vec<SequenceSource> {
        self.ytilde
            .iter()
            .enumerate()
            .map(|(j, s)| SequenceSource::scaled(s.clone(), j as u32))
            .collect()
    }

    pub fn block(&self, x1: Vec<Complex64>) -> Result<JordanBlock, JordanError> {
        JordanBlock::new(1.0, self.phi, self.inputs(), x1)
    }
}

/// Sup, trend exponent and witness sup of `sum_{n<=K} ỹ(n) e(n phi)`.
fn measure_partial_sums(
    y: &SequenceSource,
    phi: f64,
    probe: u64,
    witness: Option<Complex64>,
) -> Result<(f64, f64, f64), JordanError> {
    let probe = y.horizon().map_or(probe, |h| h.min(probe));
    let mut cursor = y.cursor();
    let mut sum = ComplexSum::new();
    let mut rec = SampleRecorder::new(probe, MAX_SAMPLES);
    let mut sup = 0.0f64;
    let w = witness.unwrap_or_default();
    let mut witness_sup = w.norm();
    for n in 1..=probe {
        sum.add(cursor.value(n)? * rotation(n, phi));
        let s = sum.value();
        sup = sup.max(s.norm());
        witness_sup = witness_sup.max((w + s).norm());
        rec.offer(n, s);
    }
    let fit = fit_growth(&rec.magnitudes(), probe, TREND_DECADES);
    let exponent = if fit.floor_limited { 0.0 } else { fit.exponent };
    Ok((sup, exponent, witness_sup))
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesReport {
    /// Target row `m`.
    pub row: usize,
    pub r: usize,
    /// Bounded-sum constant `C_{r+m}` used in the tail bound.
    pub constant: f64,
    pub terms: u64,
    pub tail_bound: f64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InitRow {
    pub row: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MainTheoremInit {
    pub tol: f64,
    /// Per-series tail budget `tol / (M (M + 1))`.
    pub budget: f64,
    /// `x_m(1)` for `m = 2..=M`.
    pub rows: Vec<InitRow>,
    pub series: Vec<SeriesReport>,
}

impl MainTheoremInit {
    /// The full initial vector with the free first row set to `x_first`.
    pub fn initial_vector(&self, x_first: Complex64) -> Vec<Complex64> {
        std::iter::once(x_first)
            .chain(self.rows.iter().map(|r| Complex64::new(r.re, r.im)))
            .collect()
    }

    pub fn value(&self, row: usize) -> Option<Complex64> {
        self.rows
            .iter()
            .find(|r| r.row == row)
            .map(|r| Complex64::new(r.re, r.im))
    }
}

/// `(C / r!) (K)^{[r]} / K^{r+m-1}`, the tail bound after `K` terms.
fn series_tail(constant: f64, r: usize, m: usize, k: u64) -> f64 {
    let kf = k as f64;
    let mut v = constant;
    for i in 0..r {
        v *= (1.0 + i as f64 / kf) / (i as f64 + 1.0);
    }
    v * kf.powi(1 - m as i32)
}

/// Smallest `K` with `series_tail(K) <= budget`.
fn terms_needed(constant: f64, r: usize, m: usize, budget: f64) -> Result<u64, JordanError> {
    if constant == 0.0 {
        return Ok(0);
    }
    let mut fact = 1.0;
    for i in 1..=r {
        fact *= i as f64;
    }
    let guess = (constant / (fact * budget)).powf(1.0 / (m as f64 - 1.0)).ceil();
    if !(guess < MAX_TERMS as f64) {
        return Err(JordanError::TruncationTooLong {
            terms: guess.min(u64::MAX as f64) as u64,
            limit: MAX_TERMS,
        });
    }
    let fits = |k: u64| series_tail(constant, r, m, k) <= budget;
    let mut lo = (guess as u64).max(1) - 1;
    let mut hi = lo + 1;
    while !fits(hi) {
        lo = hi;
        hi = hi + hi / 1000 + 1;
        if hi > MAX_TERMS {
            return Err(JordanError::TruncationTooLong {
                terms: hi,
                limit: MAX_TERMS,
            });
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `sum_{k=first}^{last} term(k, y(k))` in fixed chunks; parallel when the
/// source can be entered at any index, otherwise one sequential cursor.
/// Both paths combine identical chunk sums, so the result does not depend
/// on the path.
fn source_series<F>(
    exec: Execution,
    source: &SequenceSource,
    first: u64,
    last: u64,
    term: F,
) -> Result<Complex64, JordanError>
where
    F: Fn(u64, Complex64) -> Result<Complex64, JordanError> + Sync + Send,
{
    let chunk = |cursor: &mut crate::phasefn::SourceCursor<'_>, a: u64, b: u64| {
        let mut s = ComplexSum::new();
        for k in a..=b {
            s.add(term(k, cursor.value(k)?)?);
        }
        Ok::<_, JordanError>(s)
    };
    if source.is_local() {
        chunked_complex_sum(exec, first, last, |a, b| chunk(&mut source.cursor(), a, b))
    } else {
        let mut cursor = source.cursor();
        let mut total = DdComplex::default();
        for (a, b) in chunks(first, last) {
            total.add_parts(chunk(&mut cursor, a, b)?.parts());
        }
        Ok(total.value())
    }
}

/// Sum of the series `sum_{k=1}^{K} ((k)^{[r]} / r!) λ^{-k-r} y(k)`.
fn theorem_series(
    exec: Execution,
    phi: f64,
    y: &SequenceSource,
    r: usize,
    terms: u64,
) -> Result<Complex64, JordanError> {
    source_series(exec, y, 1, terms, |k, v| {
        let w = rising_over_factorial(k as f64, r as u32).ok_or(JordanError::Overflow { n: k })?;
        Ok(rotation(k + r as u64, phi) * v * w)
    })
}

/// `x_m(1) = -sum_{r=0}^{M-m} (-1)^r sum_{k>=1} ((k)^{[r]} / r!) λ^{-k-r} y_{r+m}(k)`
/// for `m = 2..=M`, each series truncated where the bounded-sum tail bound
/// drops below `tol / (M (M + 1))`.
pub fn main_theorem_init(
    p: &CriticalCellProblem,
    tol: f64,
    exec: Execution,
) -> Result<MainTheoremInit, JordanError> {
    main_theorem_init_with_terms(p, tol, exec, 1)
}

/// As [`main_theorem_init`] with every truncation point multiplied by
/// `stretch`; used to check that longer truncations agree within `tol`.
pub fn main_theorem_init_with_terms(
    p: &CriticalCellProblem,
    tol: f64,
    exec: Execution,
    stretch: u64,
) -> Result<MainTheoremInit, JordanError> {
    if !(tol > 0.0) {
        return Err(JordanError::InvalidBlock(format!("tolerance {tol}")));
    }
    let order = p.order();
    let budget = tol / (order * (order + 1)) as f64;
    let inputs = p.inputs();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for m in 2..=order {
        let mut total = ComplexSum::new();
        for r in 0..=order - m {
            let src = r + m - 1;
            let constant = p.c[src];
            let terms = terms_needed(constant, r, m, budget)?.saturating_mul(stretch);
            let value = theorem_series(exec, p.phi, &inputs[src], r, terms)?;
            let tail_bound = if terms == 0 {
                0.0
            } else {
                series_tail(constant, r, m, terms)
            };
            series.push(SeriesReport {
                row: m,
                r,
                constant,
                terms,
                tail_bound,
                re: value.re,
                im: value.im,
            });
            total.add(if r % 2 == 0 { -value } else { value });
        }
        let v = total.value();
        rows.push(InitRow {
            row: m,
            re: v.re,
            im: v.im,
        });
    }
    Ok(MainTheoremInit {
        tol,
        budget,
        rows,
        series,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub row: usize,
    pub delta_re: f64,
    pub delta_im: f64,
    pub horizon: u64,
    pub base: Trajectory,
    pub perturbed: Trajectory,
    /// `|x_1(N)| / N` for the perturbed start.
    pub first_row_ratio: f64,
    pub base_first_row_ratio: f64,
    pub identical: bool,
}

/// Simulates the cell from `x_init` and from `x_init + delta e_row` and
/// compares their growth.
pub fn perturbation_probe(
    p: &CriticalCellProblem,
    x_init: &[Complex64],
    delta: Complex64,
    row: usize,
    horizon: u64,
) -> Result<PerturbationReport, JordanError> {
    if row < 2 || row > p.order() {
        return Err(JordanError::RowOutOfRange {
            row,
            order: p.order(),
        });
    }
    let base = simulate_block(&p.block(x_init.to_vec())?, horizon)?;
    let mut shifted = x_init.to_vec();
    shifted[row - 1] += delta;
    let pert = simulate_block(&p.block(shifted)?, horizon)?;
    let ratio = |t: &super::BlockTrajectory| t.rows[0].final_value().norm() / horizon as f64;
    let identical = base.rows.iter().zip(&pert.rows).all(|(a, b)| {
        a.sup_abs.to_bits() == b.sup_abs.to_bits()
            && a.final_re.to_bits() == b.final_re.to_bits()
            && a.final_im.to_bits() == b.final_im.to_bits()
    });
    Ok(PerturbationReport {
        row,
        delta_re: delta.re,
        delta_im: delta.im,
        horizon,
        first_row_ratio: ratio(&pert),
        base_first_row_ratio: ratio(&base),
        base: base.state,
        perturbed: pert.state,
        identical,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockInit {
    #[serde(skip)]
    pub x1: Vec<Complex64>,
    pub rows: Vec<InitRow>,
    pub terms: u64,
    pub tail_bound: f64,
    pub input_bound: f64,
}

/// `x(1) = -sum_{k>=1} J_λ^{-k} y(k)` for `|λ| > 1`, with
/// `(J_λ^{-k})_{i,i+j} = binom(-k, j) λ^{-k-j}`.
///
/// Entry magnitudes are dominated by `u_k = Y M binom(k+M-2, M-1) ρ^{-k}`,
/// whose ratio `u_{k+1}/u_k` is at most `(K+M) / ((K+1) ρ)` for `k > K`;
/// summation stops once the geometric tail bound drops below `tol`.
pub fn required_init_expanding(b: &JordanBlock, tol: f64) -> Result<BlockInit, JordanError> {
    let rho = b.lambda.rho;
    if b.lambda.is_critical() || rho < 1.0 {
        return Err(JordanError::WrongRegime("> 1"));
    }
    if !(tol > 0.0) {
        return Err(JordanError::InvalidBlock(format!("tolerance {tol}")));
    }
    let m = b.order();
    let mut y_sup = 0.0f64;
    for y in &b.y {
        let (sup, trend) = input_bound(y, INPUT_PROBE)?;
        if trend > UNBOUNDED_TREND {
            return Err(ScalarError::UnboundedInput { exponent: trend }.into());
        }
        y_sup = y_sup.max(sup);
    }
    let zero = Complex64::new(0.0, 0.0);
    if y_sup == 0.0 {
        return Ok(BlockInit {
            x1: vec![zero; m],
            rows: (1..=m).map(|row| InitRow { row, re: 0.0, im: 0.0 }).collect(),
            terms: 0,
            tail_bound: 0.0,
            input_bound: 0.0,
        });
    }
    let log_u = |k: u64| -> f64 {
        let mut l = (y_sup * m as f64).ln() - k as f64 * rho.ln();
        for i in 1..m {
            l += ((k + i as u64 - 1) as f64 / i as f64).ln();
        }
        l
    };
    let mut cursors: Vec<_> = b.y.iter().map(|s| s.cursor()).collect();
    let mut sums = vec![ComplexSum::new(); m];
    let mut ys = vec![zero; m];
    let mut k = 0u64;
    let tail = loop {
        k += 1;
        for (i, c) in cursors.iter_mut().enumerate() {
            ys[i] = c.value(k)?;
        }
        for (i, sum) in sums.iter_mut().enumerate() {
            for j in 0..m - i {
                let coeff = binom(-(k as f64), j as u32).ok_or(JordanError::Overflow { n: k })?;
                sum.add(b.lambda.power(-((k + j as u64) as i64)) * ys[i + j] * coeff);
            }
        }
        let q = (k + m as u64) as f64 / ((k + 1) as f64 * rho);
        if q < 1.0 {
            let tail = log_u(k + 1).exp() / (1.0 - q);
            if tail < tol {
                break tail;
            }
        }
        if k >= MAX_TERMS {
            return Err(JordanError::TruncationTooLong {
                terms: k,
                limit: MAX_TERMS,
            });
        }
    };
    let x1: Vec<Complex64> = sums.iter().map(|s| -s.value()).collect();
    Ok(BlockInit {
        rows: x1
            .iter()
            .enumerate()
            .map(|(i, v)| InitRow {
                row: i + 1,
                re: v.re,
                im: v.im,
            })
            .collect(),
        x1,
        terms: k,
        tail_bound: tail,
        input_bound: y_sup,
    })
}
