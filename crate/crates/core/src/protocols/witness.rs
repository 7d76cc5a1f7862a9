//! Witness detection through the interferometric phase.

use super::{fit_flags, Measured, ProtocolKind, ProtocolReport, RunSettings, Verdict, VERDICT_TOL};
use crate::error::{Error, Result};
use crate::numfmt::sig17;
use crate::oracle;
use crate::qmat::{
    expm_hermitian, spectral_norm_hermitian, BipartiteShape, DensityMatrix, MatC, HERMITIAN_TOL,
};
use crate::states::swap_operator;

pub const DEFAULT_SMALL_THETA: f64 = 1e-3;
pub const MAX_SMALL_THETA: f64 = 0.01;

fn witness_verdict(estimate: f64, tol: f64) -> Verdict {
    if estimate < -tol {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    }
}

/// U = F; F is Hermitian and unitary, so tr(F rho) = V cos(alpha) with alpha in {0, pi}.
pub fn witness_swap_protocol(
    rho: &DensityMatrix,
    d: usize,
    settings: &RunSettings,
) -> Result<ProtocolReport> {
    let shape = BipartiteShape::square(d)?;
    if rho.dim() != shape.dim() {
        return Err(Error::mismatch(
            "witness_swap_protocol",
            shape.dim(),
            rho.dim(),
        ));
    }
    let f = swap_operator(d);
    let fit = settings.measure(rho, &f, 0)?;
    let estimate = fit.signed_visibility();
    let mut flags = Vec::new();
    fit_flags(&fit, &mut flags);
    Ok(ProtocolReport::new(
        ProtocolKind::Witness,
        settings,
        Measured::One(fit.visibility),
        Measured::One(fit.phase),
        estimate,
        witness_verdict(estimate, VERDICT_TOL),
        Some(oracle::witness_expectation(rho, f.matrix())?),
        flags,
    ))
}

/// First-order error of alpha/theta as an estimate of tr(W rho).
pub fn small_theta_error_bound(theta: f64, w_norm: f64) -> f64 {
    theta * w_norm * w_norm / 2.0
}

/// U = e^{i theta W}; for small theta the fringe phase is theta tr(W rho).
pub fn witness_small_theta_protocol(
    rho: &DensityMatrix,
    w: &MatC,
    theta: f64,
    settings: &RunSettings,
) -> Result<ProtocolReport> {
    if !(theta > 0.0 && theta <= MAX_SMALL_THETA) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            range: "(0, 0.01]",
        });
    }
    w.require_hermitian(HERMITIAN_TOL)?;
    if w.rows() != rho.dim() {
        return Err(Error::mismatch(
            "witness_small_theta_protocol",
            rho.dim(),
            w.rows(),
        ));
    }
    let u = expm_hermitian(w, theta)?;
    let fit = settings.measure(rho, &u, 0)?;
    let estimate = fit.phase / theta;
    let bound = small_theta_error_bound(theta, spectral_norm_hermitian(w)?);
    let tol = VERDICT_TOL.max(2.0 * bound);
    let mut flags = vec![format!("error_bound={}", sig17(bound))];
    fit_flags(&fit, &mut flags);
    Ok(ProtocolReport::new(
        ProtocolKind::Witness,
        settings,
        Measured::One(fit.visibility),
        Measured::One(fit.phase),
        estimate,
        witness_verdict(estimate, tol),
        Some(oracle::witness_expectation(rho, w)?),
        flags,
    ))
}
