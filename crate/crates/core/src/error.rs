use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid region: window [{xi}, {xi} + 1/{n}] does not fit inside [0, 1]")]
    InvalidRegion { xi: f64, n: u32 },

    #[error("degenerate weight: sin(mu_{mode} * xi) vanishes, the F' norm is undefined")]
    DegenerateWeight { mode: usize },

    #[error(
        "sampled forcing too coarse: {samples_per_period:.2} samples per period of mode {mode} (need at least 10)"
    )]
    Accuracy { mode: usize, samples_per_period: f64 },

    #[error(
        "Gramian is not invertible: near-null direction concentrated on mode {mode} (lambda_min / lambda_max = {ratio:.3e})"
    )]
    NonInvertible { mode: usize, ratio: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, BeamError>;

pub(crate) fn invalid(msg: impl Into<String>) -> BeamError {
    BeamError::InvalidArgument(msg.into())
}
