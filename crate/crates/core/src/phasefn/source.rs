use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use super::{EvalError, Evaluator, PhaseExpr};
use crate::numeric::unit_phase_dd;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("sequence exhausted: index {n} requested, horizon is {horizon}")]
    Exhausted { n: u64, horizon: u64 },
    #[error("sequence index must be at least 1")]
    ZeroIndex,
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}, line {line}: {message}")]
    BadRecord {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

/// An input sequence `y_1, y_2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSource {
    /// `y_n = 0`.
    Zero,
    /// `y_n = e(f(n))` with `f` in cycles.
    Phase(PhaseExpr),
    /// `y_n = exp(i f(n))`; stored already divided by `2*pi`.
    PhaseRadians(PhaseExpr),
    /// Finite list; `values[0]` is `y_1`.
    Explicit(Vec<Complex64>),
    /// Finite list loaded from a CSV file of `re,im` rows.
    File { path: PathBuf, values: Vec<Complex64> },
    /// `y_n = inner_n / n^power`.
    Scaled {
        inner: Box<SequenceSource>,
        power: u32,
    },
}

impl SequenceSource {
    pub fn phase(expr: PhaseExpr) -> Self {
        SequenceSource::Phase(expr)
    }

    pub fn phase_radians(expr: &PhaseExpr) -> Self {
        SequenceSource::PhaseRadians(expr.radians_to_cycles())
    }

    pub fn scaled(inner: SequenceSource, power: u32) -> Self {
        SequenceSource::Scaled {
            inner: Box::new(inner),
            power,
        }
    }

    /// Reads `re,im` (or just `re`) rows; a non-numeric first row is
    /// treated as a header.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self, SourceError> {
        let path = path.as_ref().to_path_buf();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(&path)
            .map_err(|e| SourceError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
        let mut values = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let line = i as u64 + 1;
            let record = record.map_err(|e| SourceError::BadRecord {
                path: path.clone(),
                line,
                message: e.to_string(),
            })?;
            let parse = |s: Option<&str>| s.map(str::parse::<f64>);
            let re = parse(record.get(0));
            let im = parse(record.get(1)).unwrap_or(Ok(0.0));
            match (re, im) {
                (Some(Ok(re)), Ok(im)) if record.len() <= 2 => values.push(Complex64::new(re, im)),
                _ if i == 0 => continue,
                _ => {
                    return Err(SourceError::BadRecord {
                        path,
                        line,
                        message: "expected `re,im`".into(),
                    })
                }
            }
        }
        Ok(SequenceSource::File { path, values })
    }

    /// Number of available terms, or `None` when unbounded.
    pub fn horizon(&self) -> Option<u64> {
        match self {
            SequenceSource::Explicit(v) | SequenceSource::File { values: v, .. } => {
                Some(v.len() as u64)
            }
            SequenceSource::Scaled { inner, .. } => inner.horizon(),
            _ => None,
        }
    }

    /// The cycle phase when the source is `e(f(n))`.
    pub fn phase_expr(&self) -> Option<&PhaseExpr> {
        match self {
            SequenceSource::Phase(f) | SequenceSource::PhaseRadians(f) => Some(f),
            _ => None,
        }
    }

    /// True when a cursor can start at any index in O(1).
    pub fn is_local(&self) -> bool {
        match self {
            SequenceSource::Phase(f) | SequenceSource::PhaseRadians(f) => f.is_local(),
            SequenceSource::Scaled { inner, .. } => inner.is_local(),
            _ => true,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SequenceSource::Zero => true,
            SequenceSource::Scaled { inner, .. } => inner.is_zero(),
            _ => false,
        }
    }

    pub fn cursor(&self) -> SourceCursor<'_> {
        let kind = match self {
            SequenceSource::Zero => CursorKind::Zero,
            SequenceSource::Phase(f) | SequenceSource::PhaseRadians(f) => {
                CursorKind::Phase(f.evaluator())
            }
            SequenceSource::Explicit(v) | SequenceSource::File { values: v, .. } => {
                CursorKind::List(v)
            }
            SequenceSource::Scaled { inner, power } => {
                CursorKind::Scaled(Box::new(inner.cursor()), *power)
            }
        };
        SourceCursor { kind }
    }

    /// Materialises `y_1..=y_n`.
    pub fn take(&self, n: u64) -> Result<Vec<Complex64>, SourceError> {
        let mut c = self.cursor();
        (1..=n).map(|k| c.value(k)).collect()
    }
}

#[derive(Debug, Clone)]
enum CursorKind<'a> {
    Zero,
    Phase(Evaluator<'a>),
    List(&'a [Complex64]),
    Scaled(Box<SourceCursor<'a>>, u32),
}

/// Per-thread reader over a [`SequenceSource`].
#[derive(Debug, Clone)]
pub struct SourceCursor<'a> {
    kind: CursorKind<'a>,
}

impl SourceCursor<'_> {
    pub fn value(&mut self, n: u64) -> Result<Complex64, SourceError> {
        if n == 0 {
            return Err(SourceError::ZeroIndex);
        }
        match &mut self.kind {
            CursorKind::Zero => Ok(Complex64::new(0.0, 0.0)),
            CursorKind::Phase(ev) => Ok(unit_phase_dd(ev.eval(n)?)),
            CursorKind::List(v) => v.get(n as usize - 1).copied().ok_or(SourceError::Exhausted {
                n,
                horizon: v.len() as u64,
            }),
            CursorKind::Scaled(inner, power) => {
                let z = inner.value(n)?;
                if *power == 0 {
                    Ok(z)
                } else {
                    Ok(z / (n as f64).powi(*power as i32))
                }
            }
        }
    }
}
