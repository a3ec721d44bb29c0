use thiserror::Error;

/// Errors raised by the lab's operations.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("insufficient window: n_max = {actual}, need at least {required}")]
    InsufficientWindow { required: usize, actual: usize },

    #[error("value is not unimodular: |z| = {modulus}")]
    NotUnimodular { modulus: f64 },

    #[error("operator is not unitary on the window interior (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("operator is not an orthoprojection (residual {residual:.3e})")]
    NotProjection { residual: f64 },

    #[error("symmetry violated: {what} (residual {residual:.3e})")]
    SymmetryViolation { what: &'static str, residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("indeterminate rank: singular value {value:.3e} lies inside the gap ({zero:.1e}, {gap:.1e})")]
    IndeterminateRank { value: f64, zero: f64, gap: f64 },

    #[error("index not stabilized across windows {windows:?}: {values:?}; try a larger n_max")]
    NotStabilized { windows: Vec<usize>, values: Vec<i64> },

    #[error("internal consistency failure in {what}: {left} vs {right}")]
    Consistency { what: &'static str, left: f64, right: f64 },

    #[error("margin exhausted: state {state:#b} touches the window boundary")]
    MarginExhausted { state: u64 },

    #[error("argument lift failed: sample {index} has modulus {modulus:.3e}")]
    LiftFailed { index: usize, modulus: f64 },

    #[error("operator is not charge homogeneous")]
    NotChargeHomogeneous,

    #[error("sector dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("operator is not a multiplication (Toeplitz) operator")]
    NotToeplitz,

    #[error("support undeclared for a localized generator")]
    SupportUndeclared,

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("check `{0}` does not take a window parameter")]
    NotSweepable(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
