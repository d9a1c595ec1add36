//! Limit-point / limit-circle classification of `−d²/dx² + q(x)` and the
//! self-adjoint extensions of the half-line Laplacian.

pub mod error;
pub mod odeint;
pub mod potential;

pub use error::{Error, Result};
pub mod classify;
pub mod extensions;
pub mod sobolev;
