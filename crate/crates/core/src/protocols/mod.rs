//! Entanglement estimation and detection protocols.
//!
//! Each protocol builds a unitary, feeds a prescribed input state through
//! the interferometer, fits the fringe and inverts (V, alpha) into the
//! target quantity. Reports carry the matching [`crate::oracle`] value.

pub mod linear_entropy;
pub mod mub;
pub mod mutual_predictability;
pub mod negativity;
pub mod witness;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interferometer::{
    default_phase_grid, fit_fringe, run_exact, run_sampled, FringeFit, DEFAULT_PHASE_POINTS,
};
use crate::qmat::{DensityMatrix, UnitaryOperator};
use crate::rng;
use crate::states::StateSpec;

pub use linear_entropy::{
    convex_roof_bound_protocol, linear_entropy_from_visibility, linear_entropy_protocol,
    linear_entropy_upper_bound, oracle_unitary, purification,
};
pub use mub::{max_mubs, mub_set, MubSet};
pub use mutual_predictability::{
    mp_unitary, mutual_predictability_protocol, MutualPredictabilityOutcome, Pairing, PhaseBranch,
    VisibilityBound,
};
pub use negativity::{
    joint_negativity_unitary, lucas, negativity_protocol_cna, negativity_protocol_cna_at,
    negativity_protocol_pure, negativity_protocol_pure_at, negativity_unitary, x_operator,
    LucasCoefficients, XOperator,
};
pub use witness::{witness_small_theta_protocol, witness_swap_protocol, DEFAULT_SMALL_THETA};

/// Threshold on estimates for "strictly positive" or "strictly negative".
pub const VERDICT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    LinearEntropy,
    Negativity,
    MutualPredictability,
    Witness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Entangled,
    Separable,
    Inconclusive,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeLabel {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Exact intensities on the phase grid.
    Exact,
    /// Binomial counts per phase point.
    Sampled { shots: u64, seed: u64 },
}

/// How every interferometer run of a protocol is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunSettings {
    pub mode: Mode,
    pub phase_points: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self::exact()
    }
}

impl RunSettings {
    pub fn exact() -> Self {
        Self {
            mode: Mode::Exact,
            phase_points: DEFAULT_PHASE_POINTS,
        }
    }

    pub fn sampled(shots: u64, seed: u64) -> Self {
        Self {
            mode: Mode::Sampled { shots, seed },
            phase_points: DEFAULT_PHASE_POINTS,
        }
    }

    pub fn with_phase_points(mut self, n: usize) -> Self {
        self.phase_points = n;
        self
    }

    pub fn is_exact(&self) -> bool {
        self.mode == Mode::Exact
    }

    /// Runs one interferometer configuration; `stream` separates the random
    /// draws of different runs that share a seed.
    pub fn measure(
        &self,
        rho: &DensityMatrix,
        u: &UnitaryOperator,
        stream: u64,
    ) -> Result<FringeFit> {
        let grid = default_phase_grid(self.phase_points);
        let pattern = match self.mode {
            Mode::Exact => run_exact(rho, u, &grid)?,
            Mode::Sampled { shots, seed } => {
                run_sampled(rho, u, &grid, shots, rng::derive_seed(seed, stream))?
            }
        };
        fit_fringe(&pattern)
    }
}

/// One number, or one per unitary for multi-unitary protocols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Measured {
    One(f64),
    Many(Vec<f64>),
}

impl Measured {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Measured::One(x) => vec![*x],
            Measured::Many(xs) => xs.clone(),
        }
    }
}

/// Outcome of one protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub protocol: ProtocolKind,
    pub state: Option<StateSpec>,
    pub mode: ModeLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub visibility: Measured,
    pub phase: Measured,
    pub estimate: f64,
    pub verdict: Verdict,
    pub oracle: Option<f64>,
    pub discrepancy: Option<f64>,
    pub flags: Vec<String>,
}

impl ProtocolReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        protocol: ProtocolKind,
        settings: &RunSettings,
        visibility: Measured,
        phase: Measured,
        estimate: f64,
        verdict: Verdict,
        oracle: Option<f64>,
        flags: Vec<String>,
    ) -> Self {
        let (mode, shots, seed) = match settings.mode {
            Mode::Exact => (ModeLabel::Exact, None, None),
            Mode::Sampled { shots, seed } => (ModeLabel::Sampled, Some(shots), Some(seed)),
        };
        Self {
            protocol,
            state: None,
            mode,
            shots,
            seed,
            visibility,
            phase,
            estimate,
            verdict,
            oracle,
            discrepancy: oracle.map(|o| (estimate - o).abs()),
            flags,
        }
    }

    pub fn with_state(mut self, spec: StateSpec) -> Self {
        self.state = Some(spec);
        self
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags
            .iter()
            .any(|f| f == flag || f.starts_with(&format!("{flag}=")))
    }
}

pub(crate) fn fit_flags(fit: &FringeFit, flags: &mut Vec<String>) {
    if fit.phase_undefined {
        flags.push("phase_undefined".into());
    }
    if fit.visibility_clamped {
        flags.push("visibility_clamped".into());
    }
}

/// Signed angular distance a - b wrapped into (-pi, pi].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut x = (a - b).rem_euclid(TAU);
    if x > PI {
        x -= TAU;
    }
    x
}
