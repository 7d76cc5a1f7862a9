//! Brute-force reference values built only from `qmat` primitives.
//!
//! Nothing here touches the interferometer or the protocol code, so the
//! protocol estimates can be checked against these values.

use crate::error::{Error, Result};
use crate::qmat::{
    kron, matmul, partial_trace, partial_transpose, trace_norm, BipartiteShape, DensityMatrix,
    MatC, Subsystem, UnitaryOperator, HERMITIAN_TOL,
};
use crate::states::SchmidtSpec;

/// tr(rho^2) via an explicit matrix product.
pub fn purity(rho: &DensityMatrix) -> f64 {
    matmul(rho.matrix(), rho.matrix())
        .expect("square")
        .trace()
        .re
}

/// 1 - tr(rho_A^2) of a pure bipartite state.
pub fn linear_entropy(rho: &DensityMatrix, shape: BipartiteShape) -> Result<f64> {
    Ok(1.0 - purity(&partial_trace(rho, shape, Subsystem::A)?))
}

/// (||rho^{T_B}||_1 - 1) / 2
pub fn negativity_ppt(rho: &DensityMatrix, shape: BipartiteShape) -> Result<f64> {
    let pt = partial_transpose(rho, shape, Subsystem::B)?;
    Ok(((trace_norm(&pt)? - 1.0) / 2.0).max(0.0))
}

/// 1/2 sum_{i != j} sqrt(lambda_i lambda_j)
pub fn schmidt_negativity(spec: &SchmidtSpec) -> f64 {
    let l = spec.lambdas();
    let mut s = 0.0;
    for (i, a) in l.iter().enumerate() {
        for (j, b) in l.iter().enumerate() {
            if i != j {
                s += (a * b).sqrt();
            }
        }
    }
    s / 2.0
}

/// sum_k <a_k b_k| rho |a_k b_k> for bases given as unitary columns.
pub fn mutual_predictability_direct(
    rho: &DensityMatrix,
    basis_a: &UnitaryOperator,
    basis_b: &UnitaryOperator,
) -> Result<f64> {
    let d = basis_a.dim();
    if basis_b.dim() != d || rho.dim() != d * d {
        return Err(Error::mismatch(
            "mutual_predictability_direct",
            format!("bases of dim {} and state of dim {}", d, d * d),
            format!("{}, {}", basis_b.dim(), rho.dim()),
        ));
    }
    let mut total = 0.0;
    for (a, b) in basis_a.columns().iter().zip(basis_b.columns()) {
        let projector = kron(&MatC::outer(a, a), &MatC::outer(&b, &b));
        total += matmul(&projector, rho.matrix())?.trace().re;
    }
    Ok(total)
}

/// tr(W rho) for Hermitian W.
pub fn witness_expectation(rho: &DensityMatrix, w: &MatC) -> Result<f64> {
    w.require_hermitian(HERMITIAN_TOL)?;
    if w.rows() != rho.dim() {
        return Err(Error::mismatch("witness_expectation", rho.dim(), w.rows()));
    }
    let value = matmul(w, rho.matrix())?.trace();
    debug_assert!(
        value.im.abs() <= 1e-10,
        "tr(W rho) imaginary part {}",
        value.im
    );
    Ok(value.re)
}
