//! Linear entropy from a single copy of the reduced state.
//!
//! Input `rho_A (x) I_B/d` with the reflection `U = I - 2|Psi><Psi|` gives
//! `V = 1 - (2/d) tr(rho_A^2)`, so `E = 1 - (d/2)(1 - V)`.

use super::{fit_flags, Measured, ProtocolKind, ProtocolReport, RunSettings, Verdict, VERDICT_TOL};
use crate::error::{Error, Result};
use crate::oracle;
use crate::qmat::{
    eigh, partial_trace, BipartiteShape, DensityMatrix, MatC, Subsystem, UnitaryOperator, C64,
};
use crate::states::PURITY_TOL;

fn require_pure(psi: &DensityMatrix) -> Result<()> {
    if !psi.is_pure(PURITY_TOL) {
        return Err(Error::NotPure {
            purity: psi.purity(),
        });
    }
    Ok(())
}

/// `I - 2 P` for the projector `P = psi` (must be pure).
pub fn oracle_unitary(psi: &DensityMatrix) -> Result<UnitaryOperator> {
    require_pure(psi)?;
    let n = psi.dim();
    UnitaryOperator::new(MatC::identity(n).sub(&psi.matrix().scale_real(2.0))?)
}

pub fn linear_entropy_from_visibility(visibility: f64, d: usize) -> f64 {
    1.0 - d as f64 / 2.0 * (1.0 - visibility)
}

/// Upper bound `1 - d(1 - V)/2` on the convex-roof linear entropy, clamped
/// to [0, 1]; `d` is the B-side dimension used in the run.
pub fn linear_entropy_upper_bound(shape: BipartiteShape, visibility: f64) -> f64 {
    linear_entropy_from_visibility(visibility, shape.db()).clamp(0.0, 1.0)
}

fn reduced_input(rho_a: &DensityMatrix, db: usize) -> DensityMatrix {
    rho_a.tensor(&DensityMatrix::maximally_mixed(db))
}

pub fn linear_entropy_protocol(
    psi: &DensityMatrix,
    shape: BipartiteShape,
    settings: &RunSettings,
) -> Result<ProtocolReport> {
    require_pure(psi)?;
    let u = oracle_unitary(psi)?;
    let rho_a = partial_trace(psi, shape, Subsystem::A)?;
    let fit = settings.measure(&reduced_input(&rho_a, shape.db()), &u, 0)?;
    let estimate = linear_entropy_from_visibility(fit.visibility, shape.db());
    let verdict = if estimate > VERDICT_TOL {
        Verdict::Entangled
    } else {
        Verdict::Separable
    };
    let mut flags = Vec::new();
    fit_flags(&fit, &mut flags);
    Ok(ProtocolReport::new(
        ProtocolKind::LinearEntropy,
        settings,
        Measured::One(fit.visibility),
        Measured::One(fit.phase),
        estimate,
        verdict,
        Some(oracle::linear_entropy(psi, shape)?),
        flags,
    ))
}

/// A pure state on `A (x) B'` (dim B' = `ancilla_dim`) whose A-marginal is `rho_a`.
pub fn purification(rho_a: &DensityMatrix, ancilla_dim: usize) -> Result<DensityMatrix> {
    let e = eigh(rho_a.matrix())?;
    let da = rho_a.dim();
    let support: Vec<usize> = (0..da).filter(|&k| e.values[k] > 1e-14).collect();
    if support.len() > ancilla_dim {
        return Err(Error::Purification {
            rank: support.len(),
            capacity: ancilla_dim,
        });
    }
    let vecs = e.vectors.matrix();
    let mut psi = vec![C64::new(0.0, 0.0); da * ancilla_dim];
    for (slot, &k) in support.iter().enumerate() {
        let amp = e.values[k].sqrt();
        for i in 0..da {
            psi[i * ancilla_dim + slot] += vecs.get(i, k) * amp;
        }
    }
    DensityMatrix::from_pure(&psi)
}

/// Mixed-state variant: purifies `rho_A`, runs the same interferometer and
/// reports the visibility bound on the convex-roof linear entropy.
pub fn convex_roof_bound_protocol(
    rho: &DensityMatrix,
    shape: BipartiteShape,
    settings: &RunSettings,
) -> Result<ProtocolReport> {
    let rho_a = partial_trace(rho, shape, Subsystem::A)?;
    let psi = purification(&rho_a, shape.db())?;
    let u = oracle_unitary(&psi)?;
    let fit = settings.measure(&reduced_input(&rho_a, shape.db()), &u, 0)?;
    let bound = linear_entropy_upper_bound(shape, fit.visibility);
    let verdict = if bound <= VERDICT_TOL {
        Verdict::Separable
    } else {
        Verdict::Inconclusive
    };
    let mut flags = vec!["upper_bound".to_string()];
    fit_flags(&fit, &mut flags);
    Ok(ProtocolReport::new(
        ProtocolKind::LinearEntropy,
        settings,
        Measured::One(fit.visibility),
        Measured::One(fit.phase),
        bound,
        verdict,
        Some(1.0 - oracle::purity(&rho_a)),
        flags,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_pure_schmidt, SchmidtSpec};

    fn run(l: Vec<f64>) -> ProtocolReport {
        let (psi, shape) = make_pure_schmidt(&SchmidtSpec::new(l).unwrap());
        linear_entropy_protocol(&psi, shape, &RunSettings::exact()).unwrap()
    }

    #[test]
    fn product_state() {
        let r = run(vec![1.0, 0.0]);
        assert!(r.estimate.abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Separable);
        assert!(r.has_flag("phase_undefined"));
    }

    #[test]
    fn bell_visibility_equals_entropy() {
        let r = run(vec![0.5, 0.5]);
        let Measured::One(v) = r.visibility else {
            panic!()
        };
        assert!((v - 0.5).abs() < 1e-12);
        assert!((r.estimate - 0.5).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Entangled);
    }

    #[test]
    fn qutrit_example() {
        // tr(rho_A^2) = 0.375, V = 1 - (2/3) 0.375 = 0.75, E = 0.625
        let r = run(vec![0.5, 0.25, 0.25]);
        let Measured::One(v) = r.visibility else {
            panic!()
        };
        assert!((v - 0.75).abs() < 1e-12);
        assert!((r.estimate - 0.625).abs() < 1e-12);
        assert!(r.discrepancy.unwrap() < 1e-12);
    }

    #[test]
    fn oracle_unitary_properties() {
        let (psi, _) = make_pure_schmidt(&SchmidtSpec::new(vec![1.0, 0.0]).unwrap());
        let u = oracle_unitary(&psi).unwrap();
        assert!(
            u.matrix()
                .max_abs_diff(&MatC::diag_real(&[-1.0, 1.0, 1.0, 1.0]))
                < 1e-15
        );
        let sq = u.compose(&u).unwrap();
        assert!(sq.matrix().max_abs_diff(&MatC::identity(4)) < 1e-15);
        let err = oracle_unitary(&DensityMatrix::maximally_mixed(4)).unwrap_err();
        assert!(err.is_precondition_refusal());
    }

    #[test]
    fn maximally_mixed_bound() {
        let shape = BipartiteShape::square(2).unwrap();
        let r = convex_roof_bound_protocol(
            &DensityMatrix::maximally_mixed(4),
            shape,
            &RunSettings::exact(),
        )
        .unwrap();
        assert!((r.estimate - 0.5).abs() < 1e-12);
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn purification_reproduces_marginal() {
        let rho_a = DensityMatrix::new(MatC::diag_real(&[0.5, 0.3, 0.2])).unwrap();
        let psi = purification(&rho_a, 3).unwrap();
        let back = partial_trace(&psi, BipartiteShape::square(3).unwrap(), Subsystem::A).unwrap();
        assert!(back.matrix().max_abs_diff(rho_a.matrix()) < 1e-12);
        assert!(matches!(
            purification(&rho_a, 2),
            Err(Error::Purification {
                rank: 3,
                capacity: 2
            })
        ));
    }
}
