//! Numerical library for meromorphic Jacobi forms given as theta quotients:
//! evaluation, canonical Fourier coefficients, finite/polar decomposition,
//! non-holomorphic completions, and transformation-law verification.

pub mod completions;
pub mod decompose;
pub mod error;
pub mod formspec;
pub mod laurent;
pub mod numerics;
pub mod operators;
pub mod qexp;
pub mod theta;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{EllipticPoint, ModularPoint, Precision, TorsionPoint};
