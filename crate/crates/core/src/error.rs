use thiserror::Error;

pub type Result<T> = std::result::Result<T, PtvError>;

#[derive(Debug, Error)]
pub enum PtvError {
    #[error("input has {got} channels, kernel expects {expected}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("sample periods differ: {a} s vs {b} s")]
    RateMismatch { a: f64, b: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("period {period_s} s is not an integer multiple of sample period {sample_period_s} s")]
    IncommensurateRate { period_s: f64, sample_period_s: f64 },

    #[error("sinc tail energy {tail_energy:.3e} outside lag window [{lag_min}, {lag_max}] exceeds tolerance {tolerance:.3e}")]
    WindowTooSmall {
        lag_min: i64,
        lag_max: i64,
        tail_energy: f64,
        tolerance: f64,
    },

    #[error("kernel is {n_out}x{n_in}, expected single-input single-output")]
    NotSiso { n_out: usize, n_in: usize },

    #[error("kernel is {n_out}x{n_in}, expected square")]
    NotSquare { n_out: usize, n_in: usize },

    #[error("factor {factor} does not divide period {period}")]
    IndivisiblePeriod { period: usize, factor: usize },

    #[error("transfer matrix at normalized frequency {frequency} has condition number {condition:.3e} (limit {limit:.3e})")]
    NotInvertible {
        frequency: f64,
        condition: f64,
        limit: f64,
    },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("circuit graph contains a cycle")]
    CyclicGraph,

    #[error("incommensurate periods: {0}")]
    IncommensuratePeriods(String),

    #[error("signal is empty")]
    EmptySignal,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PtvError {
    /// Stable variant name, used for machine-readable diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            PtvError::ChannelMismatch { .. } => "ChannelMismatch",
            PtvError::RateMismatch { .. } => "RateMismatch",
            PtvError::DimensionMismatch(_) => "DimensionMismatch",
            PtvError::InvalidArgument(_) => "InvalidArgument",
            PtvError::InvalidKernel(_) => "InvalidKernel",
            PtvError::InvalidSignal(_) => "InvalidSignal",
            PtvError::IncommensurateRate { .. } => "IncommensurateRate",
            PtvError::WindowTooSmall { .. } => "WindowTooSmall",
            PtvError::NotSiso { .. } => "NotSiso",
            PtvError::NotSquare { .. } => "NotSquare",
            PtvError::IndivisiblePeriod { .. } => "IndivisiblePeriod",
            PtvError::NotInvertible { .. } => "NotInvertible",
            PtvError::GridTooSmall(_) => "GridTooSmall",
            PtvError::CyclicGraph => "CyclicGraph",
            PtvError::IncommensuratePeriods(_) => "IncommensuratePeriods",
            PtvError::EmptySignal => "EmptySignal",
            PtvError::Format(_) => "Format",
            PtvError::Io(_) => "Io",
            PtvError::Json(_) => "Json",
        }
    }
}

/// Relative tolerance used when comparing physical sample periods.
pub(crate) const RATE_TOL: f64 = 1e-9;

pub(crate) fn check_rates(a: Option<f64>, b: Option<f64>) -> Result<()> {
    if let (Some(a), Some(b)) = (a, b) {
        if (a - b).abs() > RATE_TOL * a.abs().max(b.abs()) {
            return Err(PtvError::RateMismatch { a, b });
        }
    }
    Ok(())
}
