use num_complex::Complex64;

use super::{JordanBlock, JordanError};
use crate::factpoly::{binom, rising_over_factorial};
use crate::numeric::ComplexSum;
use crate::phasefn::SourceCursor;

/// Evaluates the explicit cell solution
///
/// `x_m(n) = sum_{i=0}^{M-m} binom(n-1, i) λ^{n-1-i} [x_{i+m}(1)
///     + sum_{r=0}^{M-(i+m)} (-1)^r I_{i+m+r,r}(n)]`,
/// `I_{j,r}(n) = sum_{k=1}^{n-1} ((k)^{[r]} / r!) λ^{-k-r} y_j(k)`,
///
/// for `n = 1, 2, ...` with the inner sums carried as running prefixes.
pub struct ExplicitSweep<'a> {
    block: &'a JordanBlock,
    cursors: Vec<SourceCursor<'a>>,
    /// `inner[j][r]` is `I_{j+1,r}(n)` for the current `n`, `r <= j`.
    inner: Vec<Vec<ComplexSum>>,
    n: u64,
}

impl<'a> ExplicitSweep<'a> {
    pub fn new(block: &'a JordanBlock) -> Self {
        let m = block.order();
        ExplicitSweep {
            block,
            cursors: block.y.iter().map(|s| s.cursor()).collect(),
            inner: (0..m).map(|j| vec![ComplexSum::new(); j + 1]).collect(),
            n: 1,
        }
    }

    /// The current index `n`.
    pub fn index(&self) -> u64 {
        self.n
    }

    /// `x_1(n), ..., x_M(n)` for the current `n`.
    pub fn values(&self) -> Result<Vec<Complex64>, JordanError> {
        let m_order = self.block.order();
        let lambda = self.block.lambda;
        let n = self.n;
        // B_j = x_j(1) + sum_r (-1)^r I_{j+r,r}(n) depends only on j = i + m.
        let brackets: Vec<Complex64> = (0..m_order)
            .map(|j| {
                let mut s = ComplexSum::new();
                s.add(self.block.x1[j]);
                for r in 0..m_order - j {
                    let v = self.inner[j + r][r].value();
                    s.add(if r % 2 == 0 { v } else { -v });
                }
                s.value()
            })
            .collect();
        let mut out = Vec::with_capacity(m_order);
        for m in 0..m_order {
            let mut s = ComplexSum::new();
            for (i, bracket) in brackets.iter().enumerate().skip(m) {
                let shift = (i - m) as u32;
                let coeff = binom((n - 1) as f64, shift).ok_or(JordanError::Overflow { n })?;
                s.add(lambda.power((n - 1) as i64 - shift as i64) * bracket * coeff);
            }
            out.push(s.value());
        }
        Ok(out)
    }

    /// Adds the `k = n` terms to the inner sums and moves to `n + 1`.
    pub fn step(&mut self) -> Result<(), JordanError> {
        let k = self.n;
        let lambda = self.block.lambda;
        for (j, cursor) in self.cursors.iter_mut().enumerate() {
            let y = cursor.value(k)?;
            for (r, inner) in self.inner[j].iter_mut().enumerate() {
                let w = rising_over_factorial(k as f64, r as u32).ok_or(JordanError::Overflow { n: k })?;
                inner.add(lambda.power(-((k + r as u64) as i64)) * y * w);
            }
        }
        self.n += 1;
        Ok(())
    }
}

/// `x_m(n)` from the explicit formula; `m` is 1-based.
pub fn explicit_cell_solution(b: &JordanBlock, m: usize, n: u64) -> Result<Complex64, JordanError> {
    if m == 0 || m > b.order() {
        return Err(JordanError::RowOutOfRange {
            row: m,
            order: b.order(),
        });
    }
    if n == 0 {
        return Err(JordanError::InvalidBlock("n must be at least 1".into()));
    }
    let mut sweep = ExplicitSweep::new(b);
    while sweep.index() < n {
        sweep.step()?;
    }
    Ok(sweep.values()?[m - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jordan::simulate_block;
    use crate::phasefn::{parse_phase, SequenceSource};
    use crate::scalar::{closed_form_scalar, ScalarEquation};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn phase(s: &str) -> SequenceSource {
        SequenceSource::phase(parse_phase(s).unwrap())
    }

    #[test]
    fn first_index_returns_initial_values() {
        let x1 = vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)];
        let b = JordanBlock::new(1.0, 0.2, vec![phase("sqrt(n)"); 3], x1.clone()).unwrap();
        for m in 1..=3 {
            assert_eq!(explicit_cell_solution(&b, m, 1).unwrap(), x1[m - 1]);
        }
        assert!(explicit_cell_solution(&b, 4, 1).is_err());
    }

    #[test]
    fn order_one_is_scalar_closed_form() {
        let y = phase("0.1*n^2");
        let b = JordanBlock::new(1.0, 0.35, vec![y.clone()], vec![c(0.2, 0.0)]).unwrap();
        let eq = ScalarEquation::new(1.0, 0.35, c(0.2, 0.0), y).unwrap();
        for n in [1, 2, 17, 300] {
            let a = explicit_cell_solution(&b, 1, n).unwrap();
            let s = closed_form_scalar(&eq, n).unwrap();
            assert!((a - s).norm() < 1e-11, "n={n}");
        }
    }

    #[test]
    fn ramp_value() {
        let b = JordanBlock::new(
            1.0,
            0.0,
            vec![SequenceSource::Zero; 2],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(explicit_cell_solution(&b, 1, 10).unwrap(), c(9.0, 0.0));
    }

    #[test]
    fn matches_simulation_off_the_circle() {
        let b = JordanBlock::new(
            0.97,
            0.13,
            vec![phase("sqrt(n)"), phase("0.3*n"), phase("log(n)")],
            vec![c(1.0, 0.0), c(0.0, -1.0), c(0.5, 0.5)],
        )
        .unwrap();
        let t = simulate_block(&b, 200).unwrap();
        let mut sweep = ExplicitSweep::new(&b);
        let mut want = t.rows.iter().map(|r| r.values.iter()).collect::<Vec<_>>();
        for n in 1..=200u64 {
            let got = sweep.values().unwrap();
            for (row, it) in want.iter_mut().enumerate() {
                let &(k, x) = it.next().unwrap();
                assert_eq!(k, n);
                assert!((got[row] - x).norm() <= 1e-9 * x.norm().max(1.0), "n={n} row={row}");
            }
            sweep.step().unwrap();
        }
    }
}
