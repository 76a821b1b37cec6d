use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{JordanError, JordanSystem};

/// Largest Hilbert-Schmidt condition number `|T| |T^{-1}|` accepted.
pub const MAX_CONDITION: f64 = 1e12;

/// Similarity `A = T J T^{-1}` to Jordan form.
#[derive(Debug, Clone)]
pub struct Transform {
    t: DMatrix<Complex64>,
    t_inv: DMatrix<Complex64>,
    /// `|T|_HS |T^{-1}|_HS`.
    pub condition_hs: f64,
    /// `σ_max(T) / σ_min(T)`, the worst factor by which norms change.
    pub distortion: f64,
}

impl Transform {
    pub fn new(rows: Vec<Vec<Complex64>>) -> Result<Self, JordanError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(JordanError::Transform("T must be a non-empty square matrix".into()));
        }
        if rows.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(JordanError::Transform("T has non-finite entries".into()));
        }
        let t = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| JordanError::Transform("T is singular".into()))?;
        let condition_hs = hs_norm(&t) * hs_norm(&t_inv);
        if !(condition_hs < MAX_CONDITION) {
            return Err(JordanError::Transform(format!(
                "T is ill-conditioned: |T| |T^-1| = {condition_hs:e}"
            )));
        }
        let sv = t.singular_values();
        let distortion = sv.max() / sv.min();
        Ok(Transform {
            t,
            t_inv,
            condition_hs,
            distortion,
        })
    }

    pub fn dimension(&self) -> usize {
        self.t.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.t
    }

    pub fn inverse(&self) -> &DMatrix<Complex64> {
        &self.t_inv
    }
}

/// Hilbert-Schmidt (Frobenius) norm.
pub fn hs_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.singular_values().max()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `x ↦ T^{-1} x`.
    ToJordan,
    /// `x ↦ T x`.
    ToOriginal,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransformResult {
    #[serde(skip)]
    pub values: Vec<Vec<Complex64>>,
    pub distortion: f64,
    pub note: String,
}

/// Maps each state vector in `data` between coordinates. Boundedness is
/// preserved in both directions; norms change by at most `distortion`.
pub fn apply_transform(
    sys: &JordanSystem,
    data: &[Vec<Complex64>],
    dir: Direction,
) -> Result<TransformResult, JordanError> {
    let t = sys
        .transform
        .as_ref()
        .ok_or_else(|| JordanError::Transform("the system has no transform T".into()))?;
    let m = match dir {
        Direction::ToJordan => t.inverse(),
        Direction::ToOriginal => t.matrix(),
    };
    let n = t.dimension();
    let mut values = Vec::with_capacity(data.len());
    for v in data {
        if v.len() != n {
            return Err(JordanError::Transform(format!(
                "state has {} entries, expected {n}",
                v.len()
            )));
        }
        let x = m * nalgebra::DVector::from_column_slice(v);
        values.push(x.iter().copied().collect());
    }
    Ok(TransformResult {
        values,
        distortion: t.distortion,
        note: format!(
            "norms change by at most a factor {:.6e}; boundedness is preserved",
            t.distortion
        ),
    })
}
