//! Local theta-matching computations over Q_p for odd p.
//!
//! - [`padic`]: truncated p-adic numbers, Hilbert symbols, characters,
//!   Gauss integrals and Weil indices.
//! - [`quadspace`]: quaternion algebras, the ternary space of pure
//!   quaternions and weighted orbital integrals on the quadric nu = kappa.
//! - [`schwartz`]: Schwartz-Bruhat functions and the Weil representation.
//! - [`theta_match`]: the transform phi -> phi_0, Whittaker functions and
//!   the verification batteries.

pub mod error;
pub mod exec;
pub mod padic;
pub mod quadspace;
pub mod schwartz;
pub mod theta_match;

pub use error::{Result, ThetaError};
pub use exec::Exec;
