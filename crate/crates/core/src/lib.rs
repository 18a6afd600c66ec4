//! Rank-adaptive low-rank time integration for matrix evolution equations.
//!
//! The crate evolves matrix-valued ODEs in SVD form, combining collocation in
//! time (Gauss-Legendre or Radau-Legendre nodes) with soft-thresholded Picard
//! or spectral-deferred-correction fixed-point sweeps. Rank control comes from
//! singular value soft thresholding with a decreasing threshold schedule, so
//! the ranks of all iterates stay comparable to the best-approximation ranks
//! at the achieved accuracy.

pub mod error;
pub mod integrator;
pub mod lowrank;
pub mod models;
pub mod props;
pub mod reference;
pub mod quadrature;

pub use error::{Error, Result};
