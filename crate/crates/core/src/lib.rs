//! Exact and numeric calculus for the minimal principal series of SU(2,1).
//!
//! The crate is organised bottom-up:
//!
//! - [`surd`]: exact scalars (sums of rational multiples of square roots),
//!   half-integers and polynomials of degree at most two in the induction
//!   parameter.
//! - [`compact`]: U(2) calculus: Euler angles, Wigner D-functions,
//!   Clebsch-Gordan coefficients and 3j symbols.
//! - [`structure`]: concrete 3x3 matrices for su(2,1), the Cayley transform and
//!   both Iwasawa decompositions.
//! - [`action`]: the (g,K)-module of the principal series realised on Wigner
//!   D-functions, operator assembly and Casimir checks.
//! - [`decomposition`]: Weyl chambers, composition series and closure checks.
//! - [`intertwine`]: the long intertwining operator by three independent paths.

#![forbid(unsafe_code)]

pub mod action;
pub mod compact;
pub mod decomposition;
pub mod intertwine;
pub mod special;
pub mod structure;
pub mod surd;

use num_complex::Complex64;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// Text could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    /// An exact polynomial product would exceed degree two in lambda.
    #[error("degree overflow: product of degree {0} exceeds the cap of 2")]
    DegreeOverflow(usize),
    /// The requested evaluation path does not support these parameters.
    #[error("unsupported: {0}")]
    Unsupported(String),
    /// A matrix is not in the span of the requested basis.
    #[error("not in span: {0}")]
    NotInSpan(String),
    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate}, error bound {bound:e}")]
    Quadrature { estimate: Complex64, bound: f64 },
}

/// Library result type.
pub type Result<T> = std::result::Result<T, Error>;
