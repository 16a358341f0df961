use num_complex::Complex64;

/// Errors produced by parameter validation, singular special-function
/// arguments, contour placement and fitting.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Evaluation too close to a pole or zero of the hyperbolic gamma
    /// function. Carries the offending point and the nearest lattice point.
    #[error("singular argument {} (nearest lattice point {}, distance {distance:.3e}): {context}", fmt_c(*.at), fmt_c(*.nearest))]
    Singularity {
        at: Complex64,
        nearest: Complex64,
        distance: f64,
        context: String,
    },

    #[error("contour error: {0}")]
    Contour(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("accuracy failure: error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Accuracy { estimate: f64, tolerance: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("unknown claim id: {0}")]
    UnknownClaim(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn fmt_c(z: Complex64) -> String {
    format!("{:.9}{:+.9}i", z.re, z.im)
}
