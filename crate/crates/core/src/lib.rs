//! Simulation of Mach-Zehnder interferometric protocols that estimate and
//! detect bipartite entanglement, with brute-force reference values for
//! every protocol output.

// `!(x >= 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod error;
pub mod interferometer;
pub mod numfmt;
pub mod oracle;
pub mod protocols;
pub mod qmat;
pub mod rng;
pub mod selftest;
pub mod states;

pub use error::{Error, Result};
pub use interferometer::{fit_fringe, FringeFit, InterferencePattern};
pub use protocols::{Measured, Mode, ProtocolKind, ProtocolReport, RunSettings, Verdict};
pub use qmat::{BipartiteShape, DensityMatrix, MatC, Subsystem, UnitaryOperator, C64};
pub use states::{PreparedState, SchmidtSpec, StateSpec};
