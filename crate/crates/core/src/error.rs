use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    /// A density-matrix invariant failed; `invariant` is one of
    /// `hermitian`, `trace`, `positive_semidefinite`.
    #[error("invalid density matrix: {invariant} ({detail})")]
    InvalidDensity {
        invariant: &'static str,
        detail: String,
    },

    #[error("invalid bipartite shape {da}x{db}: both local dimensions must be >= 2")]
    InvalidShape { da: usize, db: usize },

    #[error("invalid schmidt coefficients: {0}")]
    InvalidSchmidt(String),

    #[error("{name} out of range: {value} not in {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("state is not pure (purity {purity:.12})")]
    NotPure { purity: f64 },

    #[error("schmidt-basis precondition violated: {0}")]
    SchmidtBasis(String),

    #[error("marginal condition violated: {0}")]
    MarginalCondition(String),

    #[error("degenerate phase grid: need at least 3 distinct phases mod 2pi, found {distinct}")]
    DegenerateGrid { distinct: usize },

    #[error("invalid interference pattern: {0}")]
    InvalidPattern(String),

    #[error("fringe fit failed: {0}")]
    FitFailed(String),

    #[error("cannot build {requested} mutually unbiased bases in dimension {d} (max {available})")]
    MubUnavailable {
        d: usize,
        requested: usize,
        available: usize,
    },

    #[error("purification needs rank(rho_A) = {rank} <= {capacity}")]
    Purification { rank: usize, capacity: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("state spec parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error is a protocol refusing an input that is well
    /// formed but outside the protocol's domain (as opposed to a malformed
    /// input).
    pub fn is_precondition_refusal(&self) -> bool {
        matches!(
            self,
            Error::NotPure { .. }
                | Error::SchmidtBasis(_)
                | Error::MarginalCondition(_)
                | Error::Purification { .. }
        )
    }

    pub fn mismatch(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
