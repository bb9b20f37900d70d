use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Covariance of the auxiliary momentum, `y ~ N(0, M)`.
#[derive(Debug, Clone)]
pub enum MassMatrix {
    Identity { dim: usize },
    Diagonal { diag: Vec<f64> },
    Dense(DenseMass),
}

/// A symmetric positive-definite mass matrix with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct DenseMass {
    matrix: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

/// Serializable description of a mass matrix, used in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MassSpec {
    Identity,
    Diagonal { diag: Vec<f64> },
    Dense { rows: Vec<Vec<f64>> },
}

impl MassMatrix {
    pub fn identity(dim: usize) -> Self {
        MassMatrix::Identity { dim }
    }

    pub fn diagonal(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidMass("empty diagonal".into()));
        }
        if let Some(v) = diag.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidMass(format!(
                "diagonal entries must be positive, found {v}"
            )));
        }
        Ok(MassMatrix::Diagonal { diag })
    }

    /// Builds a dense mass matrix from row-major entries. The matrix must be
    /// symmetric and admit a Cholesky factorization.
    pub fn dense(dim: usize, row_major: &[f64]) -> Result<Self> {
        if dim == 0 || row_major.len() != dim * dim {
            return Err(Error::InvalidMass(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                row_major.len()
            )));
        }
        let matrix = DMatrix::from_row_slice(dim, dim, row_major);
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (matrix[(i, j)], matrix[(j, i)]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidMass("matrix is not symmetric".into()));
                }
            }
        }
        let chol = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::InvalidMass("matrix is not positive definite".into()))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        Ok(MassMatrix::Dense(DenseMass {
            matrix,
            chol,
            log_det,
        }))
    }

    pub fn from_spec(spec: &MassSpec, dim: usize) -> Result<Self> {
        let mass = match spec {
            MassSpec::Identity => Self::identity(dim),
            MassSpec::Diagonal { diag } => Self::diagonal(diag.clone())?,
            MassSpec::Dense { rows } => {
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Self::dense(rows.len(), &flat)?
            }
        };
        if mass.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mass.dim(),
            });
        }
        Ok(mass)
    }

    pub fn dim(&self) -> usize {
        match self {
            MassMatrix::Identity { dim } => *dim,
            MassMatrix::Diagonal { diag } => diag.len(),
            MassMatrix::Dense(d) => d.matrix.nrows(),
        }
    }

    pub fn log_det(&self) -> f64 {
        match self {
            MassMatrix::Identity { .. } => 0.0,
            MassMatrix::Diagonal { diag } => diag.iter().map(|v| v.ln()).sum(),
            MassMatrix::Dense(d) => d.log_det,
        }
    }

    /// `y^T M^{-1} y`.
    pub fn inv_quad(&self, y: &[f64]) -> f64 {
        match self {
            MassMatrix::Identity { .. } => y.iter().map(|v| v * v).sum(),
            MassMatrix::Diagonal { diag } => y.iter().zip(diag).map(|(v, m)| v * v / m).sum(),
            MassMatrix::Dense(d) => {
                let v = DVector::from_column_slice(y);
                v.dot(&d.chol.solve(&v))
            }
        }
    }

    /// Velocity `M^{-1} y` written into `out`.
    pub fn velocity(&self, y: &[f64], out: &mut [f64]) {
        match self {
            MassMatrix::Identity { .. } => out.copy_from_slice(y),
            MassMatrix::Diagonal { diag } => {
                for ((o, v), m) in out.iter_mut().zip(y).zip(diag) {
                    *o = v / m;
                }
            }
            MassMatrix::Dense(d) => {
                let v = d.chol.solve(&DVector::from_column_slice(y));
                out.copy_from_slice(v.as_slice());
            }
        }
    }

    /// Draws `y ~ N(0, M)` into `out`, consuming exactly `dim` standard
    /// normals from `rng` in coordinate order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for o in out.iter_mut() {
            *o = rng.sample(StandardNormal);
        }
        match self {
            MassMatrix::Identity { .. } => {}
            MassMatrix::Diagonal { diag } => {
                for (o, m) in out.iter_mut().zip(diag) {
                    *o *= m.sqrt();
                }
            }
            MassMatrix::Dense(d) => {
                let z = DVector::from_column_slice(out);
                let y = d.chol.l() * z;
                out.copy_from_slice(y.as_slice());
            }
        }
    }
}
