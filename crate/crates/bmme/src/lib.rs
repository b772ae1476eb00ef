//! Block majorization-minimization with extrapolation, applied to
//! nonnegative matrix factorization.
//!
//! The crate provides:
//! - beta-divergence objectives and gradients for beta in [1, 2]
//!   ([`divergence`]);
//! - majorizer constructions and their validation oracles ([`majorizer`]);
//! - the safeguarded Nesterov/classical extrapolation schedules
//!   ([`extrapolation`]);
//! - a generic per-block extrapolate/majorize/minimize engine with
//!   convergence-condition monitors ([`engine`]);
//! - multiplicative-update solvers for beta-NMF ([`beta_nmf`]) and the
//!   simplex-constrained minimum-volume KL-NMF solver ([`minvol`]);
//! - matrix and trace I/O plus synthetic data generation ([`matrixio`]).

pub mod beta_nmf;
pub mod divergence;
pub mod engine;
mod error;
pub mod extrapolation;
mod linalg;
pub mod majorizer;
pub mod matrixio;
pub mod minvol;

pub use error::{Error, Result};
