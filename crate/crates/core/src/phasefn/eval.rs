use thiserror::Error;

use super::{BinOp, Func, Node, PhaseExpr};
use crate::numeric::Dd;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{func}({arg}) is outside the domain (index {n})")]
    Domain { func: &'static str, arg: f64, n: i64 },
    #[error("division by zero at index {n}")]
    DivisionByZero { n: i64 },
    #[error("non-finite value at index {n}")]
    NonFinite { n: i64 },
    #[error("finite difference order {0} is not supported (use 1 or 2)")]
    UnsupportedOrder(u8),
    #[error("invalid index range {first}..={last}")]
    InvalidRange { first: u64, last: u64 },
    #[error("csum cannot be evaluated at a non-integer index")]
    CumSumAtRealIndex,
}

/// Checkpoint spacing of the cumulative-sum caches.
const STRIDE: u64 = 4096;

#[derive(Debug, Clone)]
struct CumCache {
    /// `checkpoints[j]` is the sum of the first `j * STRIDE` terms.
    checkpoints: Vec<Dd>,
    terms: u64,
    sum: Dd,
}

impl Default for CumCache {
    fn default() -> Self {
        CumCache {
            checkpoints: vec![Dd::ZERO],
            terms: 0,
            sum: Dd::ZERO,
        }
    }
}

#[derive(Clone, Copy)]
struct Index {
    value: Dd,
    int: Option<i64>,
}

impl Index {
    fn label(self) -> i64 {
        self.int.unwrap_or(self.value.hi as i64)
    }
}

/// Evaluates a [`PhaseExpr`] with memoised cumulative sums.
///
/// Sequential sweeps over `n` cost O(1) amortised per call; jumping back
/// restarts from the nearest checkpoint. One evaluator per thread.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    expr: &'a PhaseExpr,
    caches: Vec<CumCache>,
}

impl<'a> Evaluator<'a> {
    pub fn new(expr: &'a PhaseExpr) -> Self {
        Evaluator {
            expr,
            caches: vec![CumCache::default(); expr.cumsum_count()],
        }
    }

    pub fn eval(&mut self, n: u64) -> Result<Dd, EvalError> {
        let idx = Index {
            value: Dd::from_f64(n as f64),
            int: Some(n as i64),
        };
        let expr: &'a PhaseExpr = self.expr;
        self.node(&expr.root, idx)
    }

    /// Evaluation at a real argument; fails on cumulative sums.
    pub fn eval_real(&mut self, x: f64) -> Result<Dd, EvalError> {
        let idx = Index {
            value: Dd::from_f64(x),
            int: None,
        };
        let expr: &'a PhaseExpr = self.expr;
        self.node(&expr.root, idx)
    }

    pub fn delta_dd(&mut self, n: u64) -> Result<Dd, EvalError> {
        let a = self.eval(n)?;
        let b = self.eval(n + 1)?;
        Ok(b - a)
    }

    pub fn delta(&mut self, n: u64) -> Result<f64, EvalError> {
        Ok(self.delta_dd(n)?.to_f64())
    }

    pub fn delta2(&mut self, n: u64) -> Result<f64, EvalError> {
        let a = self.eval(n)?;
        let b = self.eval(n + 1)?;
        let c = self.eval(n + 2)?;
        Ok((c - b - b + a).to_f64())
    }

    fn node(&mut self, node: &'a Node, idx: Index) -> Result<Dd, EvalError> {
        let n = idx.label();
        let v = match node {
            Node::Literal { value, .. } => *value,
            Node::Pi => Dd::PI,
            Node::Index => idx.value,
            Node::Neg(inner) => -self.node(inner, idx)?,
            Node::Binary { op, lhs, rhs } => {
                let a = self.node(lhs, idx)?;
                let b = self.node(rhs, idx)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.hi == 0.0 {
                            return Err(EvalError::DivisionByZero { n });
                        }
                        a / b
                    }
                    BinOp::Pow => power(a, b, n)?,
                }
            }
            Node::Call { func, arg } => {
                let x = self.node(arg, idx)?;
                apply(*func, x, n)?
            }
            Node::CumSum { start, body, slot } => {
                let upper = idx.int.ok_or(EvalError::CumSumAtRealIndex)?;
                self.cumsum(*slot, *start, body, upper)?
            }
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite { n });
        }
        Ok(v)
    }

    fn cumsum(
        &mut self,
        slot: usize,
        start: i64,
        body: &'a Node,
        upper: i64,
    ) -> Result<Dd, EvalError> {
        if upper < start {
            return Ok(Dd::ZERO);
        }
        let target = (upper - start + 1) as u64;
        let mut cache = std::mem::take(&mut self.caches[slot]);
        if target < cache.terms {
            let j = (target / STRIDE) as usize;
            cache.terms = j as u64 * STRIDE;
            cache.sum = cache.checkpoints[j];
        }
        let mut outcome = Ok(());
        while cache.terms < target {
            let k = start + cache.terms as i64;
            let idx = Index {
                value: Dd::from_f64(k as f64),
                int: Some(k),
            };
            match self.node(body, idx) {
                Ok(v) => cache.sum = cache.sum + v,
                Err(e) => {
                    outcome = Err(e);
                    break;
                }
            }
            cache.terms += 1;
            if cache.terms.is_multiple_of(STRIDE) && cache.checkpoints.len() as u64 == cache.terms / STRIDE
            {
                cache.checkpoints.push(cache.sum);
            }
        }
        let sum = cache.sum;
        self.caches[slot] = cache;
        outcome.map(|_| sum)
    }
}

fn apply(func: Func, x: Dd, n: i64) -> Result<Dd, EvalError> {
    let domain = |arg: f64| EvalError::Domain {
        func: func.name(),
        arg,
        n,
    };
    Ok(match func {
        Func::Sqrt => {
            if x.hi < 0.0 {
                return Err(domain(x.hi));
            }
            x.sqrt()
        }
        Func::Log => {
            if x.hi <= 0.0 {
                return Err(domain(x.hi));
            }
            x.map_with_derivative(x.hi.ln(), 1.0 / x.hi)
        }
        Func::Exp => {
            let e = x.hi.exp();
            x.map_with_derivative(e, e)
        }
        Func::Sin => {
            let (s, c) = x.hi.sin_cos();
            x.map_with_derivative(s, c)
        }
        Func::Cos => {
            let (s, c) = x.hi.sin_cos();
            x.map_with_derivative(c, -s)
        }
        Func::Atan => x.map_with_derivative(x.hi.atan(), 1.0 / (1.0 + x.hi * x.hi)),
    })
}

fn power(base: Dd, exponent: Dd, n: i64) -> Result<Dd, EvalError> {
    let e = exponent.hi;
    if exponent.lo == 0.0 && e.fract() == 0.0 && e.abs() <= 1024.0 {
        if base.hi == 0.0 && e < 0.0 {
            return Err(EvalError::DivisionByZero { n });
        }
        return Ok(base.powi(e as i64));
    }
    if base.hi == 0.0 && e > 0.0 {
        return Ok(Dd::ZERO);
    }
    if base.hi <= 0.0 {
        return Err(EvalError::Domain {
            func: "pow",
            arg: base.hi,
            n,
        });
    }
    let y = base.hi.powf(e);
    let correction = y * (e * base.lo / base.hi + base.hi.ln() * exponent.lo);
    Ok(Dd::new(y, correction))
}

#[cfg(test)]
mod tests {
    use crate::numeric::NeumaierSum;
    use crate::phasefn::{eval_phase, parse_phase, EvalError};

    #[test]
    fn domain_errors() {
        let f = parse_phase("log(n-1)").unwrap();
        assert!(matches!(
            eval_phase(&f, 1),
            Err(EvalError::Domain { func: "log", n: 1, .. })
        ));
        let g = parse_phase("1/(n-2)").unwrap();
        assert!(matches!(eval_phase(&g, 2), Err(EvalError::DivisionByZero { n: 2 })));
        let h = parse_phase("exp(n)").unwrap();
        assert!(matches!(eval_phase(&h, 1000), Err(EvalError::NonFinite { .. })));
        let p = parse_phase("(n-5)^0.5").unwrap();
        assert!(eval_phase(&p, 3).is_err());
        assert_eq!(eval_phase(&p, 9).unwrap(), 2.0);
    }

    #[test]
    fn cumsum_matches_direct_sum_for_any_access_order() {
        let f = parse_phase("csum(1, atan(k))").unwrap();
        let mut ev = f.evaluator();
        let mut direct = NeumaierSum::new();
        let mut expected = Vec::new();
        for k in 1..=20_000u64 {
            direct.add((k as f64).atan());
            expected.push(direct.value());
        }
        for &n in &[20_000u64, 5, 12_345, 4096, 4097, 1, 19_999] {
            let v = ev.eval(n).unwrap().to_f64();
            let want = expected[n as usize - 1];
            assert!((v - want).abs() <= 1e-12 * want.abs(), "n={n}: {v} vs {want}");
        }
        assert_eq!(eval_phase(&f, 0).unwrap(), 0.0);
    }

    #[test]
    fn nested_cumsum() {
        // sum_{r=2}^{n} sum_{k=2}^{r} k = sum_{r=2}^{n} (r(r+1)/2 - 1)
        let f = parse_phase("csum(2, csum(2, k))").unwrap();
        let n = 50u64;
        let want: f64 = (2..=n).map(|r| (r * (r + 1) / 2 - 1) as f64).sum();
        assert_eq!(eval_phase(&f, n).unwrap(), want);
    }

    #[test]
    fn reevaluation_is_deterministic() {
        let f = parse_phase("csum(1, sin(k)/k) + 0.3*n").unwrap();
        let mut a = f.evaluator();
        let forward: Vec<u64> = (1..=9000)
            .map(|n| a.eval(n).unwrap().hi.to_bits())
            .collect();
        let mut b = f.evaluator();
        for n in (1..=9000u64).rev() {
            assert_eq!(b.eval(n).unwrap().hi.to_bits(), forward[n as usize - 1]);
        }
    }

    #[test]
    fn real_evaluation() {
        let f = parse_phase("log(n)/(4*n^1.5)").unwrap();
        let v = f.evaluator().eval_real(2.5).unwrap().to_f64();
        assert!((v - 2.5f64.ln() / (4.0 * 2.5f64.powf(1.5))).abs() < 1e-16);
        let g = parse_phase("csum(1, k)").unwrap();
        assert!(g.evaluator().eval_real(2.5).is_err());
    }
}
