use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("outside the saddle-point regime: {0}")]
    OutOfRegime(String),

    #[error(
        "root solver did not converge after {iterations} iterations (last residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error(
        "numerical and analytic x'' disagree: {numeric:e} vs {analytic:e} (relative {relative:e})"
    )]
    DerivativeMismatch {
        numeric: f64,
        analytic: f64,
        relative: f64,
    },

    #[error("n = {n} exceeds the configured cap {cap} for {what}")]
    Resource {
        what: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty input")]
    Empty,

    #[error("every chi-square bin was merged into one; need more observations")]
    AllBinsMerged,
}

impl CycleError {
    /// Stable snake_case tag for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            CycleError::Domain(_) => "domain",
            CycleError::OutOfRegime(_) => "out_of_regime",
            CycleError::NoConvergence { .. } => "no_convergence",
            CycleError::DerivativeMismatch { .. } => "derivative_mismatch",
            CycleError::Resource { .. } => "resource",
            CycleError::Overflow(_) => "overflow",
            CycleError::Degenerate(_) => "degenerate",
            CycleError::Empty => "empty",
            CycleError::AllBinsMerged => "all_bins_merged",
        }
    }

    pub fn is_resource(&self) -> bool {
        matches!(self, CycleError::Resource { .. })
    }
}

pub type Result<T> = std::result::Result<T, CycleError>;
