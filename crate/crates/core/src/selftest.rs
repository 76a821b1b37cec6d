//! Exact-identity suites and oracle spot checks behind `recbound selftest`.

use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::exec::Execution;
use crate::expsum::{abel_identity_residual, partial_sum_reference, partial_sums};
use crate::factpoly::{check_lemma, check_reflection, check_vandermonde, int, raising, ExactScalar};
use crate::jordan::{explicit_cell_solution, main_theorem_init, simulate_block, CriticalCellProblem, JordanBlock};
use crate::phasefn::{parse_phase, SequenceSource};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub cases: u64,
    pub failures: u64,
    pub detail: String,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub rows: Vec<CheckRow>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(CheckRow::passed)
    }

    /// Fixed-width pass/fail table; contains no timings, so repeated runs
    /// print identical text.
    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for r in &self.rows {
            let status = if r.passed() { "PASS" } else { "FAIL" };
            let _ = writeln!(
                out,
                "{status}  {:width$}  {:>6} cases  {:>4} failures  {}",
                r.name, r.cases, r.failures, r.detail
            );
        }
        let failed = self.rows.iter().filter(|r| !r.passed()).count();
        let _ = writeln!(out, "{} checks, {failed} failed", self.rows.len());
        out
    }
}

/// A raising factorial that is off by one at order 3.
fn corrupted_raising(x: &ExactScalar, n: u32) -> ExactScalar {
    let v = raising(x, n);
    if n == 3 {
        v + int(1)
    } else {
        v
    }
}

fn oracle(name: &str, err: f64, limit: f64) -> CheckRow {
    CheckRow {
        name: name.to_string(),
        cases: 1,
        failures: u64::from(!(err <= limit)),
        detail: format!("error {err:.3e} (limit {limit:.0e})"),
    }
}

fn failed(name: &str, message: String) -> CheckRow {
    CheckRow {
        name: name.to_string(),
        cases: 1,
        failures: 1,
        detail: message,
    }
}

fn geometric_oracle() -> CheckRow {
    let name = "geometric sum sup";
    let horizon = 10_000u64;
    let f = parse_phase("0.3*n").expect("fixture parses");
    match partial_sums(&f, horizon) {
        Ok(a) => {
            let want = (1..=horizon)
                .map(|k| ((PI * k as f64 * 0.3).sin() / (PI * 0.3).sin()).abs())
                .fold(0.0, f64::max);
            oracle(name, (a.sup_abs - want).abs(), 1e-9)
        }
        Err(e) => failed(name, e.to_string()),
    }
}

fn compensated_oracle() -> CheckRow {
    let name = "compensated vs double-double sum";
    let f = parse_phase("sqrt(n)*log(n)").expect("fixture parses");
    match (partial_sums(&f, 100_000), partial_sum_reference(&f, 100_000)) {
        (Ok(a), Ok(r)) => {
            let got = Complex64::new(a.final_re, a.final_im);
            oracle(name, (got - r).norm(), 1e-9)
        }
        (Err(e), _) | (_, Err(e)) => failed(name, e.to_string()),
    }
}

fn abel_oracle() -> CheckRow {
    let name = "summation by parts identity";
    let f = parse_phase("0.25*n + sqrt(n)").expect("fixture parses");
    match abel_identity_residual(&f, 10, 20_000) {
        Ok(r) => oracle(name, r.residual, 1e-9),
        Err(e) => failed(name, e.to_string()),
    }
}

fn explicit_oracle() -> CheckRow {
    let name = "explicit cell solution vs recurrence";
    let phase = |s: &str| SequenceSource::phase(parse_phase(s).expect("fixture parses"));
    let block = JordanBlock::new(
        1.0,
        0.37,
        vec![phase("sqrt(n)"), phase("0.2*n^2"), phase("log(n + 1)")],
        vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 1.0), Complex64::new(-0.25, 0.5)],
    )
    .expect("fixture is valid");
    let horizon = 500;
    let run = || -> Result<f64, crate::jordan::JordanError> {
        let t = simulate_block(&block, horizon)?;
        let mut worst = 0.0f64;
        for (row, traj) in t.rows.iter().enumerate() {
            let x = traj.final_value();
            let e = explicit_cell_solution(&block, row + 1, horizon)?;
            worst = worst.max((x - e).norm() / x.norm().max(1.0));
        }
        Ok(worst)
    };
    match run() {
        Ok(err) => oracle(name, err, 1e-9),
        Err(e) => failed(name, e.to_string()),
    }
}

fn alternating_harmonic_oracle() -> CheckRow {
    let name = "cell initial value ln 2";
    let tol = 1e-5;
    let run = || -> Result<f64, crate::jordan::JordanError> {
        let ytilde = vec![
            SequenceSource::Zero,
            SequenceSource::phase(parse_phase("0.5*n").expect("fixture parses")),
        ];
        let p = CriticalCellProblem::new(0.0, ytilde, 10_000, None, Execution::default())?;
        let init = main_theorem_init(&p, tol, Execution::default())?;
        Ok((init.value(2).unwrap_or_default() - LN_2).norm())
    };
    match run() {
        Ok(err) => oracle(name, err, tol),
        Err(e) => failed(name, e.to_string()),
    }
}

/// Runs every suite. With `mutate_lemma` the lemma suite uses a corrupted
/// raising-factorial kernel, which must be reported as a failure.
pub fn run_selftest(mutate_lemma: bool) -> SelftestReport {
    let lemma = if mutate_lemma {
        check_lemma(30, 12, corrupted_raising)
    } else {
        check_lemma(30, 12, raising)
    };
    let mut rows: Vec<CheckRow> = [lemma, check_reflection(20), check_vandermonde(15)]
        .into_iter()
        .map(|r| CheckRow {
            name: r.name.to_string(),
            cases: r.cases,
            failures: r.failures.len() as u64,
            detail: r.failures.first().cloned().unwrap_or_else(|| "exact".into()),
        })
        .collect();
    rows.push(geometric_oracle());
    rows.push(compensated_oracle());
    rows.push(abel_oracle());
    rows.push(explicit_oracle());
    rows.push(alternating_harmonic_oracle());
    SelftestReport { rows }
}
