use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The two-body tensor breaks one of the eight index relations.
    #[error("symmetry violation: max defect {defect:e} exceeds tolerance {tolerance:e}")]
    Symmetry { defect: f64, tolerance: f64 },

    /// The interaction integrals are not real after antisymmetrization.
    #[error(
        "realness violation: imaginary part {imag:e}, mirror defect {mirror:e} (tolerance {tolerance:e})"
    )]
    Realness {
        imag: f64,
        mirror: f64,
        tolerance: f64,
    },

    #[error("decomposition failure: {0}")]
    Decomposition(String),

    #[error("{n_modes} modes exceeds the dense Fock-space limit of {max}")]
    SizeGuard { n_modes: usize, max: usize },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
