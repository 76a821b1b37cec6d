//! Block-diagonal Jordan systems `x(n+1) = J x(n) + y(n)`.
//!
//! A cell `J_λ` of order `M` has `λ` on the diagonal and 1 on the
//! superdiagonal, so row `i` evolves as
//! `x_i(n+1) = λ x_i(n) + x_{i+1}(n) + y_i(n)`.

mod explicit;
mod theorem;
mod transform;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::numeric::{rotation, ComplexSum, Polar};
use crate::phasefn::{SequenceSource, SourceError};
use crate::scalar::{ScalarError, Trajectory, TrajectoryBuilder};

pub use explicit::{explicit_cell_solution, ExplicitSweep};
pub use theorem::{
    main_theorem_init, main_theorem_init_with_terms, perturbation_probe, required_init_expanding,
    BlockInit, CriticalCellProblem, InitRow, MainTheoremInit, PerturbationReport, SeriesReport,
    MAX_TERMS, TREND_LIMIT,
};
pub use transform::{apply_transform, hs_norm, spectral_norm, Direction, Transform, TransformResult};

#[derive(Debug, Error)]
pub enum JordanError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("row {row} is outside 1..={order}")]
    RowOutOfRange { row: usize, order: usize },
    #[error("operation needs |λ| {0}")]
    WrongRegime(&'static str),
    #[error("non-finite value at n = {n}")]
    Overflow { n: u64 },
    #[error("partial sums of ỹ_{row} λ^-n are not evidently bounded: growth exponent {exponent:.3}")]
    UnboundedPartialSums { row: usize, exponent: f64 },
    #[error("truncation needs {terms} terms, above the limit {limit}")]
    TruncationTooLong { terms: u64, limit: u64 },
    #[error("transform: {0}")]
    Transform(String),
}

impl JordanError {
    pub fn is_refusal(&self) -> bool {
        match self {
            JordanError::UnboundedPartialSums { .. } | JordanError::TruncationTooLong { .. } => true,
            JordanError::Scalar(e) => e.is_refusal(),
            _ => false,
        }
    }
}

/// One Jordan cell with its input rows and initial values.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanBlock {
    pub lambda: Polar,
    /// `y[i]` drives row `i+1`.
    pub y: Vec<SequenceSource>,
    pub x1: Vec<Complex64>,
}

impl JordanBlock {
    pub fn new(
        rho: f64,
        phi: f64,
        y: Vec<SequenceSource>,
        x1: Vec<Complex64>,
    ) -> Result<Self, JordanError> {
        let lambda = Polar::new(rho, phi)
            .ok_or_else(|| JordanError::InvalidBlock(format!("λ = {rho} e(-{phi})")))?;
        if y.is_empty() || y.len() != x1.len() {
            return Err(JordanError::InvalidBlock(format!(
                "{} input rows and {} initial values; both must equal the order M >= 1",
                y.len(),
                x1.len()
            )));
        }
        Ok(JordanBlock { lambda, y, x1 })
    }

    pub fn order(&self) -> usize {
        self.y.len()
    }

    pub fn with_x1(&self, x1: Vec<Complex64>) -> Self {
        JordanBlock {
            x1,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockTrajectory {
    /// Per-row trajectories `x_1, ..., x_M`.
    pub rows: Vec<Trajectory>,
    /// Euclidean norm of the whole state.
    pub state: Trajectory,
}

fn push_row(b: &mut TrajectoryBuilder, n: u64, x: Complex64) -> Result<(), JordanError> {
    b.push(n, x).map_err(|_| JordanError::Overflow { n })
}

/// Iterates a cell for `n = 1..=N`, rows updated top-down in place.
///
/// On the unit circle the rows are kept in the rotating frame
/// `w_i(n) = λ^{-(n-1)} x_i(n)`, which gives
/// `w_i(n+1) = w_i(n) + λ^{-1} w_{i+1}(n) + λ^{-n} y_i(n)`.
pub fn simulate_block(b: &JordanBlock, horizon: u64) -> Result<BlockTrajectory, JordanError> {
    let m = b.order();
    let mut rows: Vec<TrajectoryBuilder> = (0..m).map(|_| TrajectoryBuilder::new(horizon)).collect();
    let mut state = TrajectoryBuilder::new(horizon);
    let mut cursors: Vec<_> = b.y.iter().map(|s| s.cursor()).collect();
    let mut emit = |n: u64, xs: &mut dyn Iterator<Item = Complex64>| -> Result<(), JordanError> {
        let mut norm2 = 0.0;
        for (i, x) in xs.enumerate() {
            norm2 += x.norm_sqr();
            push_row(&mut rows[i], n, x)?;
        }
        push_row(&mut state, n, Complex64::new(norm2.sqrt(), 0.0))
    };
    let mut ys = vec![Complex64::new(0.0, 0.0); m];
    if b.lambda.is_critical() {
        let inv = rotation(1, b.lambda.phi);
        let mut w: Vec<ComplexSum> = b
            .x1
            .iter()
            .map(|&x| {
                let mut s = ComplexSum::new();
                s.add(x);
                s
            })
            .collect();
        for n in 1..=horizon {
            let turn = b.lambda.power(n as i64 - 1);
            emit(n, &mut w.iter().map(|s| turn * s.value()))?;
            if n == horizon {
                break;
            }
            for (i, c) in cursors.iter_mut().enumerate() {
                ys[i] = c.value(n)?;
            }
            let back = rotation(n, b.lambda.phi);
            for i in 0..m {
                if i + 1 < m {
                    let next = w[i + 1].value();
                    w[i].add(inv * next);
                }
                w[i].add(back * ys[i]);
            }
        }
    } else {
        let lambda = b.lambda.power(1);
        let mut x = b.x1.clone();
        for n in 1..=horizon {
            emit(n, &mut x.iter().copied())?;
            if n == horizon {
                break;
            }
            for (i, c) in cursors.iter_mut().enumerate() {
                ys[i] = c.value(n)?;
            }
            for i in 0..m {
                let next = if i + 1 < m { x[i + 1] } else { Complex64::new(0.0, 0.0) };
                x[i] = lambda * x[i] + next + ys[i];
            }
        }
    }
    Ok(BlockTrajectory {
        rows: rows.into_iter().map(TrajectoryBuilder::finish).collect(),
        state: state.finish(),
    })
}

/// Block-diagonal system, optionally with `A = T J T^{-1}`.
#[derive(Debug, Clone)]
pub struct JordanSystem {
    pub blocks: Vec<JordanBlock>,
    pub transform: Option<Transform>,
}

impl JordanSystem {
    pub fn new(blocks: Vec<JordanBlock>, transform: Option<Transform>) -> Result<Self, JordanError> {
        if blocks.is_empty() {
            return Err(JordanError::InvalidBlock("a system needs at least one block".into()));
        }
        let sys = JordanSystem { blocks, transform };
        if let Some(t) = &sys.transform {
            if t.dimension() != sys.dimension() {
                return Err(JordanError::Transform(format!(
                    "T is {0}x{0} but the blocks have total dimension {1}",
                    t.dimension(),
                    sys.dimension()
                )));
            }
        }
        Ok(sys)
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(JordanBlock::order).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BlockRegime {
    Contracting,
    Expanding,
    Critical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SystemVerdict {
    /// Every block is contracting: all solutions are bounded.
    AllBounded,
    /// No block is on the unit circle: a bounded solution exists for
    /// exactly one initial value on the expanding part.
    SplitSolvable,
    /// Some block is on the unit circle and needs its own analysis.
    Critical,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub blocks: Vec<BlockRegime>,
    pub verdict: SystemVerdict,
}

pub fn classify_spectrum(sys: &JordanSystem) -> SpectrumReport {
    let blocks: Vec<BlockRegime> = sys
        .blocks
        .iter()
        .map(|b| {
            if b.lambda.is_critical() {
                BlockRegime::Critical
            } else if b.lambda.rho < 1.0 {
                BlockRegime::Contracting
            } else {
                BlockRegime::Expanding
            }
        })
        .collect();
    let verdict = if blocks.contains(&BlockRegime::Critical) {
        SystemVerdict::Critical
    } else if blocks.iter().all(|r| *r == BlockRegime::Contracting) {
        SystemVerdict::AllBounded
    } else {
        SystemVerdict::SplitSolvable
    };
    SpectrumReport { blocks, verdict }
}
