//! Negativity from a single copy of the joint state.
//!
//! `X = sum_{i != j} |i><j|` satisfies `X^2 = (d-1) I + (d-2) X`, so every
//! power is `f_n X + g_n I` and `e^{i theta X}` has a two-term closed form.
//! For states with vanishing local X marginals, `tr(U rho)` with
//! `U = e^{i theta X} (x) e^{i theta X}` depends on the state only through
//! `t = tr((X (x) X) rho)`; for Schmidt-basis pure states and the
//! classical-plus-maximally-entangled family, `t = 2N`.

use std::f64::consts::PI;

use super::{
    angle_diff, fit_flags, Measured, ProtocolKind, ProtocolReport, RunSettings, Verdict,
    VERDICT_TOL,
};
use crate::error::{Error, Result};
use crate::interferometer::FringeFit;
use crate::oracle;
use crate::qmat::{BipartiteShape, DensityMatrix, MatC, UnitaryOperator, C64};
use crate::states::PURITY_TOL;

/// Tolerance on |tr((X (x) I) rho)| and |tr((I (x) X) rho)|.
pub const MARGINAL_TOL: f64 = 1e-8;
/// Tolerance on the fitted phase against -2 pi/d.
pub const PHASE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct XOperator {
    d: usize,
    mat: MatC,
}

impl XOperator {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &MatC {
        &self.mat
    }
}

pub fn x_operator(d: usize) -> Result<XOperator> {
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: ">= 2",
        });
    }
    let mat = MatC::from_fn(d, d, |i, j| C64::new(if i == j { 0.0 } else { 1.0 }, 0.0));
    Ok(XOperator { d, mat })
}

/// Coefficients of `X^n = f_n X + g_n I`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LucasCoefficients {
    pub d: usize,
    pub n: u32,
    pub f_n: f64,
    pub g_n: f64,
}

/// Closed form: f_n = ((d-1)^n - (-1)^n)/d, g_n = (d-1)((d-1)^{n-1} - (-1)^{n-1})/d.
pub fn lucas(d: usize, n: u32) -> LucasCoefficients {
    assert!(n >= 1, "powers start at n = 1");
    let df = d as f64;
    let sign = |k: u32| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let f_n = ((df - 1.0).powi(n as i32) - sign(n)) / df;
    let g_n = (df - 1.0) * ((df - 1.0).powi(n as i32 - 1) - sign(n - 1)) / df;
    LucasCoefficients { d, n, f_n, g_n }
}

/// Same coefficients from f_1 = 1, f_2 = d - 2, f_n = (d-2) f_{n-1} + (d-1) f_{n-2},
/// g_n = (d-1) f_{n-1}.
pub fn lucas_recursive(d: usize, n: u32) -> LucasCoefficients {
    assert!(n >= 1, "powers start at n = 1");
    let df = d as f64;
    // f_0 = 0 makes g_1 = 0 and the recursion valid from n = 2.
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 1..n {
        let next = (df - 2.0) * cur + (df - 1.0) * prev;
        prev = cur;
        cur = next;
    }
    LucasCoefficients {
        d,
        n,
        f_n: cur,
        g_n: (df - 1.0) * prev,
    }
}

/// Closed-form `e^{i theta X} = e^{-i theta}/d [(e^{i theta d} - 1) X + (e^{i theta d} + d - 1) I]`.
pub fn negativity_unitary(d: usize, theta: f64) -> Result<UnitaryOperator> {
    let x = x_operator(d)?;
    let df = d as f64;
    let e = C64::from_polar(1.0, theta * df);
    let pre = C64::from_polar(1.0 / df, -theta);
    let off = pre * (e - 1.0);
    let diag = pre * (e + (df - 1.0));
    UnitaryOperator::new(MatC::from_fn(d, d, |i, j| {
        if i == j {
            diag
        } else {
            off * x.mat.get(i, j)
        }
    }))
}

pub fn joint_negativity_unitary(d: usize, theta: f64) -> Result<UnitaryOperator> {
    let u = negativity_unitary(d, theta)?;
    Ok(u.kron(&u))
}

pub fn default_theta(d: usize) -> f64 {
    PI / d as f64
}

/// tr(U rho) for a state with vanishing X marginals and joint value `t`.
pub fn forward_trace(t: f64, d: usize, theta: f64) -> C64 {
    let df = d as f64;
    let e = C64::from_polar(1.0, theta * df);
    C64::from_polar(1.0 / (df * df), -2.0 * theta)
        * ((e - 1.0).powi(2) * t + (e + (df - 1.0)).powi(2))
}

/// Inverts [`forward_trace`] for `t` given a measured V e^{i alpha}.
pub fn invert_joint_expectation(amplitude: C64, d: usize, theta: f64) -> Result<C64> {
    let df = d as f64;
    let e = C64::from_polar(1.0, theta * df);
    let lever = (e - 1.0).powi(2);
    if lever.norm() < 1e-6 {
        return Err(Error::OutOfRange {
            name: "theta",
            value: theta,
            range: "theta * d not a multiple of 2 pi",
        });
    }
    Ok((amplitude * C64::from_polar(df * df, 2.0 * theta) - (e + (df - 1.0)).powi(2)) / lever)
}

/// (tr((X (x) I) rho), tr((I (x) X) rho))
pub fn marginal_expectations(rho: &DensityMatrix, d: usize) -> Result<(f64, f64)> {
    let x = x_operator(d)?;
    let id = MatC::identity(d);
    let xa = x.mat.kron(&id).trace_product(rho.matrix())?;
    let xb = id.kron(&x.mat).trace_product(rho.matrix())?;
    Ok((xa.re, xb.re))
}

pub fn joint_expectation(rho: &DensityMatrix, d: usize) -> Result<f64> {
    let x = x_operator(d)?;
    Ok(x.mat.kron(&x.mat).trace_product(rho.matrix())?.re)
}

fn check_marginals(rho: &DensityMatrix, d: usize) -> Result<(), String> {
    let (xa, xb) = marginal_expectations(rho, d).map_err(|e| e.to_string())?;
    if xa.abs() > MARGINAL_TOL || xb.abs() > MARGINAL_TOL {
        return Err(format!(
            "tr((X (x) I) rho) = {xa:.3e}, tr((I (x) X) rho) = {xb:.3e}"
        ));
    }
    Ok(())
}

/// The state must be `sum_j sqrt(lambda_j) |jj>` up to a global phase: no
/// weight off the |jj> diagonal and non-negative real |jj>-|kk> coherences.
fn check_schmidt_form(psi: &DensityMatrix, d: usize) -> Result<()> {
    check_marginals(psi, d).map_err(Error::SchmidtBasis)?;
    let m = psi.matrix();
    for r in 0..d * d {
        for c in 0..d * d {
            let z = m.get(r, c);
            let on_diagonal_pair = r / d == r % d && c / d == c % d;
            if !on_diagonal_pair && z.norm() > MARGINAL_TOL {
                return Err(Error::SchmidtBasis(format!(
                    "amplitude outside span{{|jj>}} (entry ({r},{c}) = {z})"
                )));
            }
            if on_diagonal_pair && (z.im.abs() > MARGINAL_TOL || z.re < -MARGINAL_TOL) {
                return Err(Error::SchmidtBasis(format!(
                    "Schmidt amplitudes are not real non-negative (entry ({r},{c}) = {z})"
                )));
            }
        }
    }
    Ok(())
}

fn square_dim(shape: BipartiteShape) -> Result<usize> {
    shape.local_dim().ok_or_else(|| {
        Error::mismatch(
            "negativity protocol",
            "dA = dB",
            format!("{}x{}", shape.da(), shape.db()),
        )
    })
}

struct Inversion {
    negativity: f64,
    flags: Vec<String>,
}

fn invert(fit: &FringeFit, d: usize, theta: f64, settings: &RunSettings) -> Result<Inversion> {
    let df = d as f64;
    let mut flags = Vec::new();
    fit_flags(fit, &mut flags);
    // At theta = pi/d this is (d^2 V cos(alpha + 2 pi/d) - (d-2)^2)/4: the
    // visibility projected onto the expected phase, so a fringe on the
    // opposite branch inverts to t < 0 instead of a spurious positive value.
    let t = invert_joint_expectation(fit.complex_amplitude(), d, theta)?;
    if settings.is_exact() {
        if (theta - default_theta(d)).abs() < 1e-15 {
            if !fit.phase_undefined && angle_diff(fit.phase, -2.0 * PI / df).abs() > PHASE_TOL {
                flags.push("phase_mismatch".into());
            }
        } else if t.im.abs() > 1e-8 {
            flags.push("complex_inversion".into());
        }
    }
    let t = t.re;
    let raw = t / 2.0;
    let cap = (df - 1.0) / 2.0;
    let negativity = raw.clamp(0.0, cap);
    if negativity != raw && (raw < -VERDICT_TOL || raw > cap + VERDICT_TOL) {
        flags.push("negativity_clamped".into());
    }
    Ok(Inversion { negativity, flags })
}

pub fn negativity_protocol_pure(
    psi: &DensityMatrix,
    shape: BipartiteShape,
    settings: &RunSettings,
) -> Result<ProtocolReport> {
    let d = square_dim(shape)?;
    negativity_protocol_pure_at(psi, shape, default_theta(d), settings)
}

/// Pure Schmidt-basis states at an arbitrary rotation angle.
pub fn negativity_protocol_pure_at(
    psi: &DensityMatrix,
    shape: BipartiteShape,
    theta: f64,
    settings: &RunSettings,
) -> Result<ProtocolReport> {
    if !psi.is_pure(PURITY_TOL) {
        return Err(Error::NotPure {
            purity: psi.purity(),
        });
    }
    let d = square_dim(shape)?;
    check_schmidt_form(psi, d)?;
    let u = joint_negativity_unitary(d, theta)?;
    let fit = settings.measure(psi, &u, 0)?;
    let inv = invert(&fit, d, theta, settings)?;
    let verdict = if inv.negativity > VERDICT_TOL {
        Verdict::Entangled
    } else {
        Verdict::Separable
    };
    Ok(ProtocolReport::new(
        ProtocolKind::Negativity,
        settings,
        Measured::One(fit.visibility),
        Measured::One(fit.phase),
        inv.negativity,
        verdict,
        Some(oracle::negativity_ppt(psi, shape)?),
        inv.flags,
    ))
}

pub fn negativity_protocol_cna(
    rho: &DensityMatrix,
    d: usize,
    settings: &RunSettings,
) -> Result<ProtocolReport> {
    negativity_protocol_cna_at(rho, d, default_theta(d), settings)
}

/// Mixed states with vanishing X marginals (the classical-plus-maximally-
/// entangled family).
pub fn negativity_protocol_cna_at(
    rho: &DensityMatrix,
    d: usize,
    theta: f64,
    settings: &RunSettings,
) -> Result<ProtocolReport> {
    let shape = BipartiteShape::square(d)?;
    if rho.dim() != shape.dim() {
        return Err(Error::mismatch(
            "negativity_protocol_cna",
            shape.dim(),
            rho.dim(),
        ));
    }
    check_marginals(rho, d).map_err(Error::MarginalCondition)?;
    let u = joint_negativity_unitary(d, theta)?;
    let fit = settings.measure(rho, &u, 0)?;
    let inv = invert(&fit, d, theta, settings)?;
    let verdict = if inv.negativity > VERDICT_TOL {
        Verdict::Entangled
    } else {
        Verdict::Inconclusive
    };
    Ok(ProtocolReport::new(
        ProtocolKind::Negativity,
        settings,
        Measured::One(fit.visibility),
        Measured::One(fit.phase),
        inv.negativity,
        verdict,
        Some(oracle::negativity_ppt(rho, shape)?),
        inv.flags,
    ))
}
