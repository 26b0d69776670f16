//! Nodal length statistics for band-limited Gaussian random fields on the
//! two-sphere.
//!
//! The field is `T = C * sum_{l=L0}^{n} T_l`, a sum of independent random
//! spherical harmonics over a frequency window `[L0, n]`, normalized to unit
//! pointwise variance. The crate provides:
//!
//! - [`specfun`]: Legendre, Jacobi, Bessel and Hermite evaluators.
//! - [`kernel`]: the covariance kernel and its angular derivatives.
//! - [`kacrice`]: the Kac-Rice two-point correlation and the variance integral.
//! - [`field`]: spherical-harmonic synthesis and nodal-line extraction on a
//!   geodesic mesh.
//! - [`chaos`]: second-chaos variance and Hermite sample functionals.

pub mod chaos;
mod error;
pub mod field;
pub mod kacrice;
pub mod kernel;
pub mod quad;
pub mod specfun;
mod sum;

pub use error::{Error, Result};
pub use chaos::ChaosReport;
pub use field::{FieldSample, Mesh, NodalStats};

pub use kacrice::{ConditionalCovariance, Domain, KMethod, VarianceReport};
pub use kernel::{Approx, BandWindow, KernelMethod, KernelValues};
pub use sum::pairwise_sum;
