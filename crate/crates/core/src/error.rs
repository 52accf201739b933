use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QiopaError {
    #[error("gain must be finite and non-negative, got {0}")]
    InvalidGain(f64),

    #[error("invalid qubit: {0}")]
    InvalidQubit(String),

    #[error("cutoff {given} leaves a pair-number tail of {tail:e}; at least {required} pairs are needed")]
    CutoffTooSmall {
        given: usize,
        required: usize,
        tail: f64,
    },

    #[error("matrix is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("invalid Bloch path: {0}")]
    InvalidPath(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("reduced state is not block diagonal in the kept photon number")]
    NotBlockDiagonal,

    #[error("density has eigenvalue {0:e} below the negativity tolerance")]
    NegativeEigenvalue(f64),

    #[error("propagation did not converge: infidelity {infidelity:e} between {steps} and {doubled} steps")]
    NonConvergence {
        steps: usize,
        doubled: usize,
        infidelity: f64,
    },

    #[error("signal-to-noise ratio is undefined at zero gain")]
    UndefinedRatio,

    #[error("invalid detector configuration: {0}")]
    InvalidDetector(String),

    #[error("target visibility {target} is not attainable (ideal value {ideal})")]
    UnattainableTarget { target: f64, ideal: f64 },
}

pub type Result<T> = std::result::Result<T, QiopaError>;
