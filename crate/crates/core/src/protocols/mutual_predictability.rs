//! Mutual predictability over pairs of mutually unbiased bases.
//!
//! `U = I - 2 sum_k |a_k><a_k| (x) |b_k><b_k|` is a Hermitian reflection, so
//! `tr(U rho) = 1 - 2C` is real and the fitted phase sits at 0 or pi.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::mub::mub_set;
use super::{Measured, ProtocolKind, ProtocolReport, RunSettings, Verdict, VERDICT_TOL};
use crate::error::{Error, Result};
use crate::oracle;
use crate::qmat::{BipartiteShape, DensityMatrix, MatC, UnitaryOperator};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Same basis on both sides.
    #[default]
    Same,
    /// Complex-conjugated basis on B.
    Conjugate,
}

impl Pairing {
    pub fn partner(self, basis: &UnitaryOperator) -> UnitaryOperator {
        match self {
            Pairing::Same => basis.clone(),
            Pairing::Conjugate => basis.conj(),
        }
    }
}

pub fn mp_unitary(basis_a: &UnitaryOperator, basis_b: &UnitaryOperator) -> Result<UnitaryOperator> {
    let d = basis_a.dim();
    if basis_b.dim() != d {
        return Err(Error::mismatch("mp_unitary", d, basis_b.dim()));
    }
    let mut m = MatC::identity(d * d);
    for (a, b) in basis_a.columns().iter().zip(basis_b.columns()) {
        let p = MatC::outer(a, a).kron(&MatC::outer(&b, &b));
        m = m.sub(&p.scale_real(2.0))?;
    }
    UnitaryOperator::new(m)
}

/// Which fringe branch the runs landed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseBranch {
    /// Every phase at 0 (all C <= 1/2).
    Zero,
    /// Every phase at pi (all C >= 1/2).
    Pi,
    Mixed,
}

/// Separability condition in visibility form. With `B = 1 + (m-1)/d`, a
/// separable state satisfies `sum V_i >= m - 2B` on the zero-phase branch
/// and `sum V_i <= 2B - m` on the pi branch; in general
/// `sum V_i cos(alpha_i) >= m - 2B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilityBound {
    pub lower: f64,
    pub upper: f64,
    pub branch: PhaseBranch,
    pub visibility_sum: f64,
    pub signed_sum: f64,
    /// A negative bound can never be met by a sum of visibilities.
    pub lower_attainable: bool,
    pub upper_attainable: bool,
    pub violated: bool,
}

impl VisibilityBound {
    pub fn evaluate(visibilities: &[f64], phases: &[f64], d: usize) -> Self {
        let m = visibilities.len() as f64;
        let b = separability_bound(d, visibilities.len());
        let lower = m - 2.0 * b;
        let upper = 2.0 * b - m;
        let signed: Vec<f64> = visibilities
            .iter()
            .zip(phases)
            .map(|(&v, &a)| if a.abs() > FRAC_PI_2 { -v } else { v })
            .collect();
        let branch = if signed.iter().all(|&s| s >= 0.0) {
            PhaseBranch::Zero
        } else if signed.iter().all(|&s| s <= 0.0) {
            PhaseBranch::Pi
        } else {
            PhaseBranch::Mixed
        };
        let visibility_sum: f64 = visibilities.iter().sum();
        let signed_sum: f64 = signed.iter().sum();
        // C-side tolerance carried over: sum C = (m - signed_sum)/2.
        let tol = 2.0 * VERDICT_TOL;
        let violated = match branch {
            PhaseBranch::Zero => visibility_sum < lower - tol,
            PhaseBranch::Pi => visibility_sum > upper + tol,
            PhaseBranch::Mixed => signed_sum < lower - tol,
        };
        Self {
            lower,
            upper,
            branch,
            visibility_sum,
            signed_sum,
            lower_attainable: lower >= 0.0,
            upper_attainable: upper >= 0.0,
            violated,
        }
    }
}

/// 1 + (m - 1)/d
pub fn separability_bound(d: usize, m: usize) -> f64 {
    1.0 + (m as f64 - 1.0) / d as f64
}

/// C from one fringe: (1 - V)/2 on the zero-phase branch, (1 + V)/2 on the pi branch.
pub fn predictability_from_fit(visibility: f64, phase: f64) -> f64 {
    if phase.abs() > FRAC_PI_2 {
        (1.0 + visibility) / 2.0
    } else {
        (1.0 - visibility) / 2.0
    }
}

#[derive(Clone, Debug)]
pub struct MutualPredictabilityOutcome {
    pub report: ProtocolReport,
    pub correlations: Vec<f64>,
    pub sum: f64,
    pub bound: f64,
    pub sum_violated: bool,
    pub visibility_bound: VisibilityBound,
}

pub fn mutual_predictability_protocol(
    rho: &DensityMatrix,
    d: usize,
    m: usize,
    pairing: Pairing,
    settings: &RunSettings,
) -> Result<MutualPredictabilityOutcome> {
    let shape = BipartiteShape::square(d)?;
    if rho.dim() != shape.dim() {
        return Err(Error::mismatch(
            "mutual_predictability_protocol",
            shape.dim(),
            rho.dim(),
        ));
    }
    let mubs = mub_set(d, m)?;
    let mut visibilities = Vec::with_capacity(m);
    let mut phases = Vec::with_capacity(m);
    let mut correlations = Vec::with_capacity(m);
    let mut oracle_sum = 0.0;
    let mut flags = Vec::new();
    for (i, basis) in mubs.bases().iter().enumerate() {
        let partner = pairing.partner(basis);
        let u = mp_unitary(basis, &partner)?;
        let fit = settings.measure(rho, &u, i as u64)?;
        if fit.phase_undefined {
            flags.push(format!("phase_undefined={i}"));
        }
        if fit.visibility_clamped {
            flags.push(format!("visibility_clamped={i}"));
        }
        correlations.push(predictability_from_fit(fit.visibility, fit.phase));
        visibilities.push(fit.visibility);
        phases.push(fit.phase);
        oracle_sum += oracle::mutual_predictability_direct(rho, basis, &partner)?;
    }
    let sum: f64 = correlations.iter().sum();
    let bound = separability_bound(d, m);
    let sum_violated = sum - bound > VERDICT_TOL;
    let visibility_bound = VisibilityBound::evaluate(&visibilities, &phases, d);
    if !visibility_bound.lower_attainable {
        flags.push("lower_visibility_bound_negative".into());
    }
    if !visibility_bound.upper_attainable {
        flags.push("upper_visibility_bound_negative".into());
    }
    if visibility_bound.violated != sum_violated {
        flags.push("bound_forms_disagree".into());
    }
    let verdict = if sum_violated {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    };
    let report = ProtocolReport::new(
        ProtocolKind::MutualPredictability,
        settings,
        Measured::Many(visibilities),
        Measured::Many(phases),
        sum,
        verdict,
        Some(oracle_sum),
        flags,
    );
    Ok(MutualPredictabilityOutcome {
        report,
        correlations,
        sum,
        bound,
        sum_violated,
        visibility_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_isotropic, make_max_entangled};

    #[test]
    fn computational_unitary() {
        let id = UnitaryOperator::identity(2);
        let u = mp_unitary(&id, &id).unwrap();
        assert!(
            u.matrix()
                .max_abs_diff(&MatC::diag_real(&[-1.0, 1.0, 1.0, -1.0]))
                < 1e-15
        );
        let id3 = UnitaryOperator::identity(3);
        assert!((mp_unitary(&id3, &id3).unwrap().matrix().trace().re - 3.0).abs() < 1e-15);
        assert!(mp_unitary(&id, &id3).is_err());
    }

    #[test]
    fn bell_pauli_pairs() {
        let bell = make_max_entangled(2).unwrap();
        let out =
            mutual_predictability_protocol(&bell, 2, 3, Pairing::Conjugate, &RunSettings::exact())
                .unwrap();
        for c in &out.correlations {
            assert!((c - 1.0).abs() < 1e-12);
        }
        assert!((out.sum - 3.0).abs() < 1e-12);
        assert_eq!(out.bound, 2.0);
        assert_eq!(out.report.verdict, Verdict::Entangled);
        assert_eq!(out.visibility_bound.branch, PhaseBranch::Pi);
        assert!(out.visibility_bound.violated);
    }

    #[test]
    fn isotropic_half() {
        let rho = make_isotropic(3, 0.5).unwrap();
        let out =
            mutual_predictability_protocol(&rho, 3, 4, Pairing::Conjugate, &RunSettings::exact())
                .unwrap();
        for c in &out.correlations {
            assert!((c - 2.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(out.report.verdict, Verdict::Entangled);
        assert!(out.report.discrepancy.unwrap() < 1e-12);
    }

    #[test]
    fn product_state_sits_on_the_bound() {
        let e0 = DensityMatrix::new(MatC::basis_projector(3, 0)).unwrap();
        let rho = e0.tensor(&e0);
        let out = mutual_predictability_protocol(&rho, 3, 4, Pairing::Same, &RunSettings::exact())
            .unwrap();
        assert!((out.sum - 2.0).abs() < 1e-12);
        assert_eq!(out.report.verdict, Verdict::Inconclusive);
        assert_eq!(out.visibility_bound.branch, PhaseBranch::Mixed);
        assert!(!out.visibility_bound.violated);
        assert!(!out.report.has_flag("bound_forms_disagree"));
    }

    #[test]
    fn sign_resolution() {
        assert_eq!(predictability_from_fit(0.5, 0.0), 0.25);
        assert_eq!(predictability_from_fit(0.5, std::f64::consts::PI), 0.75);
        assert_eq!(predictability_from_fit(0.5, -3.0), 0.75);
    }
}
