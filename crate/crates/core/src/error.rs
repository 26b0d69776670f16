use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Argument outside the domain of a special function or kernel.
    #[error("{what}: argument {value} outside domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// Frequency window could not be built.
    #[error("invalid window (n={n}, g={g}): {reason}")]
    Window { n: u32, g: f64, reason: String },

    /// `1 - Gamma^2` too small for the Kac-Rice conditioning.
    #[error("degenerate conditioning at theta={theta:e}: 1-Gamma^2={one_minus_sq:e}")]
    Degenerate { theta: f64, one_minus_sq: f64 },

    /// Covariance matrix is not positive semi-definite.
    #[error("covariance not positive semi-definite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge on [{a}, {b}]: error {error:e} > tol {tol:e}")]
    Quadrature { a: f64, b: f64, error: f64, tol: f64 },

    /// Mesh too coarse for the requested window.
    #[error("mesh level {level} too coarse for n={n}: need level >= {min_level}")]
    MeshResolution { level: u32, n: u32, min_level: u32 },

    /// Evaluation point not on the unit sphere.
    #[error("point {index} has norm {norm}, expected 1")]
    NotUnit { index: usize, norm: f64 },

    /// Mismatched input sizes.
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },

    /// Invalid sampling request.
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
