use serde::{Deserialize, Serialize};

use super::eigen::eigh;
use super::matrix::MatC;
use super::{HERMITIAN_TOL, PSD_TOL, TRACE_TOL, UNITARY_TOL};
use crate::error::{Error, Result};

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: MatC,
}

impl DensityMatrix {
    pub fn new(mat: MatC) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        let deviation = mat.hermiticity_defect();
        if deviation > HERMITIAN_TOL {
            return Err(Error::InvalidDensity {
                invariant: "hermitian",
                detail: format!("max |rho - rho^dagger| = {deviation:.3e}"),
            });
        }
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensity {
                invariant: "trace",
                detail: format!("trace = {tr}"),
            });
        }
        let min = eigh(&mat)?.values[0];
        if min < PSD_TOL {
            return Err(Error::InvalidDensity {
                invariant: "positive_semidefinite",
                detail: format!("minimum eigenvalue = {min:.3e}"),
            });
        }
        Ok(Self { mat })
    }

    /// Skips the eigenvalue check; only for results that are density
    /// matrices by construction (unitary conjugation, partial trace, convex
    /// mixtures of valid states).
    pub(crate) fn from_trusted(mat: MatC) -> Self {
        debug_assert!(mat.is_square());
        debug_assert!(
            mat.hermiticity_defect() <= 1e-8,
            "trusted state not hermitian"
        );
        debug_assert!((mat.trace().re - 1.0).abs() <= 1e-8, "trusted state trace");
        Self { mat }
    }

    /// Pure state |psi><psi|, normalizing `psi`.
    pub fn from_pure(psi: &[super::C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        let unit: Vec<_> = psi.iter().map(|z| z / norm).collect();
        Ok(Self::from_trusted(MatC::outer(&unit, &unit)))
    }

    /// Maximally mixed state I/n.
    pub fn maximally_mixed(n: usize) -> Self {
        Self::from_trusted(MatC::identity(n).scale_real(1.0 / n as f64))
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &MatC {
        &self.mat
    }

    pub fn into_matrix(self) -> MatC {
        self.mat
    }

    /// tr(rho^2), used for purity preconditions.
    pub fn purity(&self) -> f64 {
        self.mat.trace_product(&self.mat).expect("square").re
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.purity() - 1.0).abs() <= tol
    }

    /// Tensor product of two states.
    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_trusted(self.mat.kron(&other.mat))
    }

    /// Convex combination sum_i w_i rho_i; weights must be a probability vector.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidEnsemble("empty mixture".into()))?;
        let n = first.1.dim();
        let mut acc = MatC::zeros(n, n);
        for (w, rho) in parts {
            if rho.dim() != n {
                return Err(Error::mismatch("mixture", n, rho.dim()));
            }
            if !(*w >= 0.0) {
                return Err(Error::InvalidEnsemble(format!("negative weight {w}")));
            }
            acc = acc.add(&rho.mat.scale_real(*w))?;
        }
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        Ok(Self::from_trusted(acc))
    }
}

/// Matrix with U^dagger U = I.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOperator {
    mat: MatC,
}

impl UnitaryOperator {
    pub fn new(mat: MatC) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        let gram = mat.dagger().matmul(&mat)?;
        let deviation = gram.max_abs_diff(&MatC::identity(mat.rows()));
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { mat })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: MatC::identity(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &MatC {
        &self.mat
    }

    pub fn dagger(&self) -> Self {
        Self {
            mat: self.mat.dagger(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            mat: self.mat.conj(),
        }
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self {
            mat: self.mat.kron(&other.mat),
        }
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            mat: self.mat.matmul(&other.mat)?,
        })
    }

    /// Multiplies by the global phase e^{i gamma}.
    pub fn with_global_phase(&self, gamma: f64) -> Self {
        Self {
            mat: self.mat.scale(super::C64::from_polar(1.0, gamma)),
        }
    }

    /// Columns as vectors; for basis-change unitaries these are the basis states.
    pub fn columns(&self) -> Vec<Vec<super::C64>> {
        (0..self.dim()).map(|j| self.mat.column(j)).collect()
    }
}

/// Local dimensions of a bipartite system, both at least 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteShape {
    da: usize,
    db: usize,
}

impl BipartiteShape {
    pub fn new(da: usize, db: usize) -> Result<Self> {
        if da < 2 || db < 2 {
            return Err(Error::InvalidShape { da, db });
        }
        Ok(Self { da, db })
    }

    pub fn square(d: usize) -> Result<Self> {
        Self::new(d, d)
    }

    pub fn da(&self) -> usize {
        self.da
    }

    pub fn db(&self) -> usize {
        self.db
    }

    pub fn dim(&self) -> usize {
        self.da * self.db
    }

    /// Common local dimension when `da == db`.
    pub fn local_dim(&self) -> Option<usize> {
        (self.da == self.db).then_some(self.da)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}
