use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown material or constant `{0}`")]
    UnknownMaterial(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("gap must be positive, got {0} m")]
    NonPositiveGap(f64),

    #[error("finite-difference oracle needs at least {min} nodes, got {got}")]
    InsufficientNodes { got: usize, min: usize },

    #[error("eigen-solve returned fewer than {0} modes")]
    EigenSolve(usize),

    #[error("response curve has no interior peak")]
    NoPeak,

    #[error("half-power {side} cutoff lies outside the sampled range")]
    CutoffOutsideRange { side: &'static str },

    #[error("frequency grid [{start}, {stop}] Hz does not cover the resonance at {resonance} Hz")]
    GridMissesPeak { start: f64, stop: f64, resonance: f64 },

    #[error("no pull-in within the swept voltage range")]
    NoPullIn,

    #[error("measured and model curves share no common voltage range")]
    NoOverlap,

    #[error("{path}:{line}: {reason}")]
    Parse { path: String, line: usize, reason: String },

    #[error("{path}:{line}: x values must be strictly increasing")]
    NonMonotonic { path: String, line: usize },

    #[error("{path}: expected columns `{expected}`, found `{found}`")]
    UnitMismatch { path: String, expected: String, found: String },

    #[error("curve needs at least {min} points, got {got}")]
    TooFewPoints { got: usize, min: usize },

    #[error("sweep has {0} points, limit is 1000000")]
    TooManyPoints(u64),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("config: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// Stable machine-readable tag, used as the CLI `error_code=` value.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownMaterial(_) => "unknown_material",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NonPositiveGap(_) => "non_positive_gap",
            Error::InsufficientNodes { .. } => "insufficient_nodes",
            Error::EigenSolve(_) => "eigen_solve",
            Error::NoPeak => "no_peak",
            Error::CutoffOutsideRange { .. } => "cutoff_outside_range",
            Error::GridMissesPeak { .. } => "grid_misses_peak",
            Error::NoPullIn => "no_pull_in",
            Error::NoOverlap => "no_overlap",
            Error::Parse { .. } => "parse",
            Error::NonMonotonic { .. } => "non_monotonic",
            Error::UnitMismatch { .. } => "unit_mismatch",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::TooManyPoints(_) => "too_many_points",
            Error::InvalidSweep(_) => "invalid_sweep",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }

    /// Errors caused by malformed user input rather than a failed computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::UnknownMaterial(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidSweep(_)
                | Error::TooManyPoints(_)
                | Error::Config(_)
        )
    }
}

pub(crate) fn require_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {value}")))
    }
}

// `powi` may constant-fold differently from its runtime evaluation; plain
// products keep compile-time and run-time results bit-identical.
pub(crate) fn cube(x: f64) -> f64 {
    x * x * x
}

pub(crate) fn quartic(x: f64) -> f64 {
    let sq = x * x;
    sq * sq
}
