//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by domain validation, numerical integrity checks, and
/// configuration handling.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument that must be strictly positive (and finite) was not.
    #[error("domain error: {name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    /// A real argument fell outside its closed range.
    #[error("domain error: {name} = {value} lies outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// An integer pair violated an ordering requirement such as x ≤ n.
    #[error("domain error: require {relation}, got {lhs} and {rhs}")]
    CountOrder {
        relation: &'static str,
        lhs: u64,
        rhs: u64,
    },

    /// The borrow set {x : k(x) ≤ 0} is not a single interval under the
    /// uniform Beta(1,1) prior. Connectedness is guaranteed for that prior,
    /// so a disconnected scan signals a numerical defect.
    #[error("integrity error: borrow set is disconnected under Beta(1,1): {detail}")]
    DisconnectedRegion { detail: String },

    /// Invalid policy or scenario configuration.
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
