//! Solvers and convergence studies for the multi-term time-fractional
//! diffusion equation
//!
//! ```text
//!     d^a u/dt^a + sum_i b_i d^{a_i} u/dt^{a_i} - laplace(u) = f
//! ```
//!
//! on the unit interval and unit square with homogeneous Dirichlet boundary
//! conditions, where the time derivatives are of Caputo type with orders
//! `0 < a_m <= ... <= a_1 < a < 1`.
//!
//! The crate provides:
//!
//! * [`mml`] — evaluation of the multinomial Mittag-Leffler function and the
//!   per-mode relaxation kernels, with an independent Laplace-inversion
//!   quadrature oracle;
//! * [`spectral`] — exact eigen-expansion solutions used as references;
//! * [`fem`] — P1 finite elements on uniform meshes, projections and the
//!   discrete eigenproblem;
//! * [`semidiscrete`] — spatially discrete, exact-in-time Galerkin solutions;
//! * [`timestepper`] — the fully discrete scheme with L1 time discretization;
//! * [`experiments`] — the data-case catalog, convergence harness and CSV
//!   emitters behind the `fracfem` CLI.

pub mod data;
mod dd;
pub mod experiments;
pub mod fem;
mod gamma;
pub mod mml;
mod quad;
pub mod semidiscrete;
pub mod spectral;
pub mod timestepper;

pub use gamma::{gamma, ln_gamma};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The power series cannot deliver the requested tolerance, either
    /// because the truncation tail does not shrink within the layer budget
    /// or because intermediate terms are too large for compensated
    /// accumulation. Callers switch to the Laplace-inversion route.
    #[error("series evaluation failed: {0}")]
    SeriesFailed(String),
    #[error("quadrature did not reach the requested tolerance: {0}")]
    QuadratureBudget(String),
    #[error("eigenvalue solve failed: {0}")]
    EigenFailed(String),
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("reference solution failed its truncation check: {0}")]
    ReferenceTruncation(String),
    #[error("degenerate convergence ladder: {0}")]
    DegenerateLadder(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
