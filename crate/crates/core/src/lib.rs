//! Joint eigenfunctions of the hyperbolic relativistic Calogero-Moser
//! system, built recursively from the hyperbolic gamma function, together
//! with the contour-shift residue representation and the factorized
//! scattering asymptotics.
//!
//! Modules:
//! - [`params`]: period lengths, coupling strips, domain predicates
//! - [`gamma`]: the hyperbolic gamma function and c/u/phi scalar functions
//! - [`kernels`]: the multivariate function algebra (C_N, W_N, kernels)
//! - [`quad`]: contour-aware tensor-product Gauss-Legendre quadrature
//! - [`eigen`]: the recursion for J_N and E_N with grid caching
//! - [`asym`]: the factorized asymptotic form and decay-rate fitting
//! - [`residue`]: the shifted-contour plus residue-sum representation
//! - [`bounds`]: polynomial-bound machinery and envelope fitting
//! - [`suites`]: seeded verification suites behind the CLI

pub mod asym;
pub mod bounds;
pub mod eigen;
pub mod error;
pub mod gamma;
pub mod kernels;
pub mod params;
pub mod quad;
pub mod residue;
pub mod suites;

pub use error::{Error, Result};
pub use gamma::{GammaEngine, PoleZeroData, Tail};
pub use kernels::KernelContext;
pub use params::{Configuration, Coupling, Params};
pub use quad::{ContourSpec, EvalResult};

pub use num_complex::Complex64;
