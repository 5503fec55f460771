//! p-adic regulators of Asai-Flach classes for real quadratic fields.
//!
//! The pipeline runs from Hilbert eigenvalue data through p-depletion,
//! the inverse of `Theta_1`, the diagonal pullback and Rankin-Cohen bracket,
//! and finally the overconvergent Eisenstein projection computed from an
//! explicit `U_p` matrix on a Kolberg-type Banach basis.

pub mod error;
pub mod ring;
pub mod padic;
pub mod plinalg;
pub mod qfield;
pub mod lvalues;
pub mod qseries;
pub mod ocspace;
pub mod hilbert;
pub mod euler;
pub mod eisproj;

pub use error::{Error, Result};
