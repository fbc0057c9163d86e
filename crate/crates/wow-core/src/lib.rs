//! WOW: WAIC-optimized gating of mixture priors for external-data borrowing.
//!
//! The library decouples the decision to borrow external control data from
//! the method of borrowing. A two-component mixture prior
//! w_h·π_h + (1−w_h)·π₀ combines an informative component π_h built from a
//! historical summary with a vague component π₀. The gate compares the
//! widely applicable information criterion at full borrowing against no
//! borrowing, k = WAIC(w_h=1) − WAIC(w_h=0), and permits borrowing only when
//! k ≤ 0. Any weight policy (fixed rMAP, SAM, EB-rMAP) can then run inside
//! the gate.
//!
//! Modules:
//! - [`specfun`]: ψ, ψ₁, ln B, regularized incomplete beta, beta-binomial
//!   log-pmf, Φ, and Gauss-Legendre nodes.
//! - [`model`]: conjugate Beta and known-σ Normal mixture posteriors.
//! - [`waic`]: closed-form WAIC, the gate, and connected borrowing regions.
//! - [`policy`]: borrowing-weight policies and the gated wrapper.
//! - [`sim`]: deterministic parallel Monte-Carlo operating characteristics.

pub mod error;
pub mod model;
pub mod policy;
pub mod sim;
pub mod specfun;
pub mod waic;

pub use error::{Error, Result};
