//! Dense complex linear algebra for small bipartite systems.

mod eigen;
mod matrix;
mod types;

pub use eigen::{
    eigh, expm_hermitian, spectral_norm_hermitian, trace_norm, Eigh, MAX_SWEEPS, OFF_DIAGONAL_TOL,
};
pub use matrix::{MatC, C64};
pub use types::{BipartiteShape, DensityMatrix, Subsystem, UnitaryOperator};

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = -1e-9;
pub const UNITARY_TOL: f64 = 1e-10;

pub fn matmul(a: &MatC, b: &MatC) -> Result<MatC> {
    a.matmul(b)
}

pub fn kron(a: &MatC, b: &MatC) -> MatC {
    a.kron(b)
}

fn check_shape(op: &'static str, n: usize, shape: BipartiteShape) -> Result<()> {
    if n != shape.dim() {
        return Err(Error::mismatch(
            op,
            format!("{}x{} = {}", shape.da(), shape.db(), shape.dim()),
            n,
        ));
    }
    Ok(())
}

/// Reduced state of the `keep` subsystem.
pub fn partial_trace(
    rho: &DensityMatrix,
    shape: BipartiteShape,
    keep: Subsystem,
) -> Result<DensityMatrix> {
    Ok(DensityMatrix::from_trusted(partial_trace_mat(
        rho.matrix(),
        shape,
        keep,
    )?))
}

pub(crate) fn partial_trace_mat(m: &MatC, shape: BipartiteShape, keep: Subsystem) -> Result<MatC> {
    check_shape("partial_trace", m.rows(), shape)?;
    let (da, db) = (shape.da(), shape.db());
    Ok(match keep {
        Subsystem::A => MatC::from_fn(da, da, |i, j| {
            (0..db).map(|k| m.get(i * db + k, j * db + k)).sum()
        }),
        Subsystem::B => MatC::from_fn(db, db, |i, j| {
            (0..da).map(|k| m.get(k * db + i, k * db + j)).sum()
        }),
    })
}

/// Transposes the indices of one tensor factor.
pub fn partial_transpose(
    rho: &DensityMatrix,
    shape: BipartiteShape,
    side: Subsystem,
) -> Result<MatC> {
    partial_transpose_mat(rho.matrix(), shape, side)
}

pub(crate) fn partial_transpose_mat(
    m: &MatC,
    shape: BipartiteShape,
    side: Subsystem,
) -> Result<MatC> {
    check_shape("partial_transpose", m.rows(), shape)?;
    let db = shape.db();
    let n = shape.dim();
    Ok(MatC::from_fn(n, n, |r, c| {
        let (a, b) = (r / db, r % db);
        let (a2, b2) = (c / db, c % db);
        match side {
            Subsystem::A => m.get(a2 * db + b, a * db + b2),
            Subsystem::B => m.get(a * db + b2, a2 * db + b),
        }
    }))
}
