//! Mach-Zehnder circuit with a controlled unitary in one arm.
//!
//! The ancilla qubit is the which-arm degree of freedom. Starting from
//! `|0><0| (x) rho`, the circuit applies H, a phase `phi` on arm |0>, the
//! controlled `U` (active on arm |1>) and a second H. The detection
//! probability at arm |0> follows `c0 (1 + V cos(phi - alpha))` with
//! `V e^{i alpha} = tr(U rho)`. Intensities are always obtained from the
//! evolved state, never from that closed form.

use std::f64::consts::{PI, TAU};

use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::numfmt::sig17;
use crate::qmat::{DensityMatrix, MatC, UnitaryOperator, C64};
use crate::rng;

pub const DEFAULT_PHASE_POINTS: usize = 16;

/// Below this visibility the fringe phase is reported as 0.
pub const PHASE_UNDEFINED_BELOW: f64 = 1e-12;

/// `n` uniform points on [0, 2 pi).
pub fn default_phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

fn hadamard() -> MatC {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    MatC::from_rows(&[
        vec![C64::new(s, 0.0), C64::new(s, 0.0)],
        vec![C64::new(s, 0.0), C64::new(-s, 0.0)],
    ])
    .expect("2x2")
}

/// Full circuit operator on ancilla (x) system.
pub fn circuit_operator(u: &UnitaryOperator, phi: f64) -> MatC {
    let n = u.dim();
    let id = MatC::identity(n);
    let h = hadamard().kron(&id);
    let p0 = MatC::basis_projector(2, 0);
    let p1 = MatC::basis_projector(2, 1);
    let controlled = p0.kron(&id).add(&p1.kron(u.matrix())).expect("same shape");
    // e^{i phi} on arm |0>
    let phase = MatC::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => C64::from_polar(1.0, phi),
        (1, 1) => C64::new(1.0, 0.0),
        _ => C64::new(0.0, 0.0),
    })
    .kron(&id);
    h.matmul(&controlled)
        .and_then(|m| m.matmul(&phase))
        .and_then(|m| m.matmul(&h))
        .expect("conformable")
}

fn check_dims(rho: &DensityMatrix, u: &UnitaryOperator) -> Result<()> {
    if rho.dim() != u.dim() {
        return Err(Error::mismatch(
            "interferometer",
            format!("unitary of dim {}", rho.dim()),
            u.dim(),
        ));
    }
    Ok(())
}

/// Final ancilla-system state for input `|0><0| (x) rho`.
pub fn evolve(rho: &DensityMatrix, u: &UnitaryOperator, phi: f64) -> Result<DensityMatrix> {
    check_dims(rho, u)?;
    let total = circuit_operator(u, phi);
    let input = MatC::basis_projector(2, 0).kron(rho.matrix());
    let out = total.matmul(&input)?.matmul(&total.dagger())?;
    Ok(DensityMatrix::from_trusted(out))
}

/// tr((|0><0| (x) I) rho_f)
pub fn arm_zero_probability(rho_f: &DensityMatrix) -> f64 {
    let n = rho_f.dim() / 2;
    (0..n).map(|i| rho_f.matrix().get(i, i).re).sum()
}

/// Detection probability at arm |0>.
pub fn intensity(rho: &DensityMatrix, u: &UnitaryOperator, phi: f64) -> Result<f64> {
    Ok(arm_zero_probability(&evolve(rho, u, phi)?))
}

/// Sampled or exact intensity curve.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferencePattern {
    phases: Vec<f64>,
    intensities: Vec<f64>,
    shots: Option<u64>,
    counts: Option<Vec<u64>>,
}

impl InterferencePattern {
    pub fn new(phases: Vec<f64>, intensities: Vec<f64>) -> Result<Self> {
        if phases.len() != intensities.len() {
            return Err(Error::InvalidPattern(format!(
                "{} phases but {} intensities",
                phases.len(),
                intensities.len()
            )));
        }
        if let Some(bad) = intensities
            .iter()
            .find(|p| !(-1e-12..=1.0 + 1e-12).contains(*p))
        {
            return Err(Error::InvalidPattern(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidPattern("non-finite phase".into()));
        }
        let intensities = intensities.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok(Self {
            phases,
            intensities,
            shots: None,
            counts: None,
        })
    }

    pub fn with_counts(phases: Vec<f64>, counts: Vec<u64>, shots: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::InvalidPattern("shots must be positive".into()));
        }
        if counts.len() != phases.len() {
            return Err(Error::InvalidPattern(format!(
                "{} phases but {} counts",
                phases.len(),
                counts.len()
            )));
        }
        if let Some(c) = counts.iter().find(|c| **c > shots) {
            return Err(Error::InvalidPattern(format!(
                "count {c} exceeds shots {shots}"
            )));
        }
        let intensities = counts.iter().map(|&c| c as f64 / shots as f64).collect();
        let mut p = Self::new(phases, intensities)?;
        p.shots = Some(shots);
        p.counts = Some(counts);
        Ok(p)
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn shots(&self) -> Option<u64> {
        self.shots
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Multiplies every intensity by `factor` (drops counts).
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            phases: self.phases.clone(),
            intensities: self.intensities.iter().map(|p| p * factor).collect(),
            shots: None,
            counts: None,
        }
    }

    /// CSV with header `phi,intensity[,counts,shots]`, reals at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match (&self.counts, self.shots) {
            (Some(counts), Some(shots)) => {
                out.push_str("phi,intensity,counts,shots\n");
                for ((phi, p), c) in self.phases.iter().zip(&self.intensities).zip(counts) {
                    out.push_str(&format!("{},{},{c},{shots}\n", sig17(*phi), sig17(*p)));
                }
            }
            _ => {
                out.push_str("phi,intensity\n");
                for (phi, p) in self.phases.iter().zip(&self.intensities) {
                    out.push_str(&format!("{},{}\n", sig17(*phi), sig17(*p)));
                }
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidPattern("empty CSV".into()))?;
        let with_counts = match header.trim() {
            "phi,intensity" => false,
            "phi,intensity,counts,shots" => true,
            other => {
                return Err(Error::InvalidPattern(format!(
                    "unexpected header {other:?}"
                )))
            }
        };
        let bad = |line: &str| Error::InvalidPattern(format!("malformed row {line:?}"));
        let (mut phases, mut intensities, mut counts, mut shots) = (vec![], vec![], vec![], None);
        for line in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != if with_counts { 4 } else { 2 } {
                return Err(bad(line));
            }
            phases.push(fields[0].parse::<f64>().map_err(|_| bad(line))?);
            intensities.push(fields[1].parse::<f64>().map_err(|_| bad(line))?);
            if with_counts {
                counts.push(fields[2].parse::<u64>().map_err(|_| bad(line))?);
                let s = fields[3].parse::<u64>().map_err(|_| bad(line))?;
                if shots.is_some_and(|prev| prev != s) {
                    return Err(Error::InvalidPattern(
                        "shots must be constant across rows".into(),
                    ));
                }
                shots = Some(s);
            }
        }
        match shots {
            Some(s) => Self::with_counts(phases, counts, s),
            None => Self::new(phases, intensities),
        }
    }
}

/// Result of fitting `c0 + c1 cos(phi) + c2 sin(phi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeFit {
    pub mean_level: f64,
    pub visibility: f64,
    /// Radians in (-pi, pi].
    pub phase: f64,
    /// Root-mean-square fit error.
    pub residual: f64,
    pub phase_undefined: bool,
    /// Set when noise pushed the raw visibility above 1.
    pub visibility_clamped: bool,
}

impl FringeFit {
    /// V e^{i alpha}, the fitted estimate of tr(U rho).
    pub fn complex_amplitude(&self) -> C64 {
        C64::from_polar(self.visibility, self.phase)
    }

    /// V cos(alpha), the real part of the fitted tr(U rho).
    pub fn signed_visibility(&self) -> f64 {
        self.visibility * self.phase.cos()
    }
}

fn distinct_phase_count(phases: &[f64]) -> usize {
    let mut reduced: Vec<f64> = phases.iter().map(|p| p.rem_euclid(TAU)).collect();
    reduced.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last: Option<f64> = None;
    for p in &reduced {
        if last.is_none_or(|l| (p - l).abs() > 1e-12) {
            count += 1;
            last = Some(*p);
        }
    }
    // 0 and 2 pi - eps wrap around
    if count > 1 && (reduced[0] + TAU - reduced[reduced.len() - 1]).abs() <= 1e-12 {
        count -= 1;
    }
    count
}

fn check_grid(phases: &[f64]) -> Result<()> {
    let distinct = distinct_phase_count(phases);
    if distinct < 3 {
        return Err(Error::DegenerateGrid { distinct });
    }
    Ok(())
}

/// Rows of (A^T A)^{-1} A^T for the design A = [1, cos phi, sin phi].
fn least_squares_operator(phases: &[f64]) -> Result<[Vec<f64>; 3]> {
    check_grid(phases)?;
    let design: Vec<[f64; 3]> = phases.iter().map(|p| [1.0, p.cos(), p.sin()]).collect();
    let mut normal = [[0.0f64; 3]; 3];
    for row in &design {
        for i in 0..3 {
            for j in 0..3 {
                normal[i][j] += row[i] * row[j];
            }
        }
    }
    let inv = invert3(normal).ok_or_else(|| Error::FitFailed("singular design matrix".into()))?;
    let op = std::array::from_fn(|i| {
        design
            .iter()
            .map(|row| (0..3).map(|j| inv[i][j] * row[j]).sum())
            .collect()
    });
    Ok(op)
}

/// Gauss-Jordan with partial pivoting.
fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut a = m;
    let mut inv = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..3 {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..3 {
            if i != col {
                let f = a[i][col];
                for j in 0..3 {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

fn wrap_phase(alpha: f64) -> f64 {
    let mut a = alpha;
    if a <= -PI {
        a += TAU;
    }
    if a > PI {
        a -= TAU;
    }
    a
}

/// Linear least squares of `I(phi) = c0 + c1 cos phi + c2 sin phi`.
pub fn fit_fringe(pattern: &InterferencePattern) -> Result<FringeFit> {
    let op = least_squares_operator(pattern.phases())?;
    let data = pattern.intensities();
    let coef: [f64; 3] = std::array::from_fn(|i| op[i].iter().zip(data).map(|(a, b)| a * b).sum());
    let [c0, c1, c2] = coef;
    if !(c0 > 0.0) {
        return Err(Error::FitFailed(format!("non-positive mean level {c0}")));
    }
    let sq: f64 = pattern
        .phases()
        .iter()
        .zip(data)
        .map(|(p, y)| {
            let r = y - (c0 + c1 * p.cos() + c2 * p.sin());
            r * r
        })
        .sum();
    let residual = (sq / data.len() as f64).sqrt();
    let raw = c1.hypot(c2) / c0;
    let phase_undefined = raw < PHASE_UNDEFINED_BELOW;
    let phase = if phase_undefined {
        0.0
    } else {
        wrap_phase(c2.atan2(c1))
    };
    Ok(FringeFit {
        mean_level: c0,
        visibility: raw.min(1.0),
        phase,
        residual,
        phase_undefined,
        visibility_clamped: raw > 1.0,
    })
}

/// Delta-method standard errors of the fitted (visibility, phase) when each
/// point is an independent binomial(shots, p_k) frequency.
#[derive(Clone, Copy, Debug)]
pub struct FitUncertainty {
    pub visibility: f64,
    pub phase: f64,
}

pub fn fit_standard_errors(
    phases: &[f64],
    probabilities: &[f64],
    shots: u64,
) -> Result<FitUncertainty> {
    if phases.len() != probabilities.len() || shots == 0 {
        return Err(Error::InvalidPattern(
            "need one probability per phase and shots > 0".into(),
        ));
    }
    let op = least_squares_operator(phases)?;
    let coef: [f64; 3] =
        std::array::from_fn(|i| op[i].iter().zip(probabilities).map(|(a, b)| a * b).sum());
    let [c0, c1, c2] = coef;
    let r = c1.hypot(c2);
    if !(c0 > 0.0) || r == 0.0 {
        return Err(Error::FitFailed(
            "standard errors need c0 > 0 and V > 0".into(),
        ));
    }
    let grad_v = [-r / (c0 * c0), c1 / (r * c0), c2 / (r * c0)];
    let grad_a = [0.0, -c2 / (r * r), c1 / (r * r)];
    let (mut var_v, mut var_a) = (0.0, 0.0);
    for (k, p) in probabilities.iter().enumerate() {
        let var_k = p * (1.0 - p) / shots as f64;
        let dv: f64 = (0..3).map(|i| grad_v[i] * op[i][k]).sum();
        let da: f64 = (0..3).map(|i| grad_a[i] * op[i][k]).sum();
        var_v += dv * dv * var_k;
        var_a += da * da * var_k;
    }
    Ok(FitUncertainty {
        visibility: var_v.sqrt(),
        phase: var_a.sqrt(),
    })
}

pub fn run_exact(
    rho: &DensityMatrix,
    u: &UnitaryOperator,
    phase_grid: &[f64],
) -> Result<InterferencePattern> {
    check_dims(rho, u)?;
    check_grid(phase_grid)?;
    let intensities = phase_grid
        .iter()
        .map(|&phi| intensity(rho, u, phi))
        .collect::<Result<Vec<_>>>()?;
    InterferencePattern::new(phase_grid.to_vec(), intensities)
}

/// Binomial(shots, intensity) counts per phase point; point `k` draws from
/// its own stream of `seed`.
pub fn run_sampled(
    rho: &DensityMatrix,
    u: &UnitaryOperator,
    phase_grid: &[f64],
    shots: u64,
    seed: u64,
) -> Result<InterferencePattern> {
    if shots == 0 {
        return Err(Error::InvalidPattern("shots must be positive".into()));
    }
    let exact = run_exact(rho, u, phase_grid)?;
    let counts = exact
        .intensities()
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let dist = Binomial::new(shots, p).map_err(|e| Error::InvalidPattern(e.to_string()))?;
            Ok(dist.sample(&mut rng::stream(seed, k as u64)))
        })
        .collect::<Result<Vec<u64>>>()?;
    InterferencePattern::with_counts(phase_grid.to_vec(), counts, shots)
}

/// Fitted (|tr(U rho)|, arg tr(U rho)) from the default 16-point grid.
pub fn visibility_and_phase(rho: &DensityMatrix, u: &UnitaryOperator) -> Result<(f64, f64)> {
    let fit = fit_fringe(&run_exact(
        rho,
        u,
        &default_phase_grid(DEFAULT_PHASE_POINTS),
    )?)?;
    Ok((fit.visibility, fit.phase))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit_plus() -> DensityMatrix {
        DensityMatrix::maximally_mixed(2)
    }

    #[test]
    fn identity_unitary_ancilla_marginals() {
        let rho = qubit_plus();
        let u = UnitaryOperator::identity(2);
        let f0 = evolve(&rho, &u, 0.0).unwrap();
        assert!((arm_zero_probability(&f0) - 1.0).abs() < 1e-15);
        let fpi = evolve(&rho, &u, PI).unwrap();
        assert!(arm_zero_probability(&fpi).abs() < 1e-15);
        assert!((fpi.matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_checks() {
        assert!(matches!(
            check_grid(&[0.0, TAU, 0.0]),
            Err(Error::DegenerateGrid { distinct: 1 })
        ));
        assert!(matches!(
            check_grid(&[0.0, 1.0, TAU + 1.0]),
            Err(Error::DegenerateGrid { distinct: 2 })
        ));
        assert!(check_grid(&[0.0, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn synthesized_curve_recovers_parameters() {
        // tr(U rho) = 0.5 e^{-2 pi i / 3}
        let (v, a) = (0.5, -2.0 * PI / 3.0);
        let grid = default_phase_grid(16);
        let data = grid
            .iter()
            .map(|p| 0.5 * (1.0 + v * (p - a).cos()))
            .collect();
        let fit = fit_fringe(&InterferencePattern::new(grid, data).unwrap()).unwrap();
        assert!((fit.visibility - v).abs() < 1e-10);
        assert!((fit.phase - a).abs() < 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn flat_curve_phase_convention() {
        let grid = default_phase_grid(8);
        let fit = fit_fringe(&InterferencePattern::new(grid, vec![0.5; 8]).unwrap()).unwrap();
        assert!(fit.visibility < 1e-15);
        assert_eq!(fit.phase, 0.0);
        assert!(fit.phase_undefined);
    }

    #[test]
    fn negative_real_trace_gives_pi() {
        let grid = default_phase_grid(16);
        let data = grid.iter().map(|p| 0.5 * (1.0 - 0.3 * p.cos())).collect();
        let fit = fit_fringe(&InterferencePattern::new(grid, data).unwrap()).unwrap();
        assert!((fit.phase - PI).abs() < 1e-12, "{}", fit.phase);
    }

    #[test]
    fn zero_mean_level_rejected() {
        let grid = vec![0.0, 1.0, 2.0];
        let err = fit_fringe(&InterferencePattern::new(grid, vec![0.0; 3]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::FitFailed(_)));
    }

    #[test]
    fn pattern_validation() {
        assert!(InterferencePattern::new(vec![0.0], vec![0.1, 0.2]).is_err());
        assert!(InterferencePattern::new(vec![0.0], vec![1.5]).is_err());
        assert!(InterferencePattern::with_counts(vec![0.0], vec![11], 10).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let p = InterferencePattern::with_counts(vec![0.0, 1.0, 2.0], vec![3, 5, 10], 10).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("phi,intensity,counts,shots\n"));
        assert_eq!(InterferencePattern::from_csv(&csv).unwrap(), p);
        let q = InterferencePattern::new(vec![0.0, 0.1], vec![1.0 / 3.0, 0.25]).unwrap();
        assert_eq!(InterferencePattern::from_csv(&q.to_csv()).unwrap(), q);
    }

    #[test]
    fn dimension_mismatch() {
        let rho = qubit_plus();
        let u = UnitaryOperator::identity(4);
        assert!(matches!(
            evolve(&rho, &u, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
