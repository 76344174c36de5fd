//! Solvers for the symmetric Toeplitz systems `R_k h = x` and the
//! block-Toeplitz systems `R g = z`.
//!
//! The structured operators are never materialized outside of the direct
//! solver: products go through circulant embeddings and the FFT, and the
//! preconditioners are diagonalized by the FFT of length `L`.

mod cgd;
mod direct;
mod levinson;
mod precond;
mod toeplitz;

pub use cgd::{cgd_solve, cgd_solve_many, CgdOptions, CgdOutcome};
pub use direct::{direct_solve, direct_solve_dense};
pub use levinson::levinson_solve;
pub use precond::{BlockCirculantPreconditioner, CirculantPreconditioner, Identity, Preconditioner};
pub use toeplitz::{BlockToeplitz, SymmetricToeplitz};

pub(crate) use direct::factor_loaded;

/// A symmetric linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Diagonal loading added to the lag-0 term of every Gram block before a solve.
///
/// It is a few ulps of the diagonal, enough to keep factorizations of
/// exactly rank-deficient Gram matrices from failing outright, while leaving
/// the metrics of well-posed problems unchanged far below `1e-8` dB.
pub fn base_loading(lag0: f64, taps: usize) -> f64 {
    lag0.abs() * taps as f64 * f64::EPSILON
}

/// First escalation step used when a factorization fails with the base loading.
pub fn escalated_loading(lag0: f64, taps: usize) -> f64 {
    1e-10 * lag0.abs() * taps as f64
}

/// Largest loading tried before a system is declared singular.
pub(crate) fn max_loading(lag0: f64) -> f64 {
    1e-2 * lag0.abs()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
