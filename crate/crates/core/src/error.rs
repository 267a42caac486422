use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// Statistical failures are not errors: they are reported through
/// [`crate::randstats::StatReport`] and friends.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("combinatorial budget exceeded: {required} nodes required, cap is {cap}")]
    Budget { required: u128, cap: u128 },

    #[error("grid of size {grid} aliases the shell (need more than {min})")]
    Aliasing { grid: usize, min: f64 },

    #[error("radius {radius} exceeds the admissible radius {max_radius:.3} for truncation order {n_trunc}")]
    Truncation {
        radius: f64,
        max_radius: f64,
        n_trunc: usize,
    },

    #[error("ill-conditioned coefficient m={m}: best |J_m(r)| = {best:.3e} below threshold")]
    Conditioning { m: i32, best: f64 },

    #[error("grid resolution too coarse: {0}")]
    Resolution(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T, E = WaveError> = std::result::Result<T, E>;
