//! Error type shared by all modules of the crate.

use alloc::string::String;
use core::fmt;

/// Errors surfaced by the numerical routines.
///
/// `InvalidInput` marks contract violations by the caller (bad dimensions,
/// out-of-range tolerances, malformed specifications). The other variants
/// mark numerical conditions detected at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// The caller passed arguments violating a documented precondition.
    InvalidInput(String),
    /// A matrix entry or state coordinate was NaN or infinite; for
    /// trajectories, `last_finite_t` is the last time with a finite state.
    NonFinite { context: String, last_finite_t: Option<f64> },
    /// A derivative was requested at a point where the map is not
    /// differentiable (activation margin below threshold).
    NonDifferentiable { margin: f64 },
    /// A law-count probe produced inconsistent ranks across perturbations,
    /// so the base point cannot be certified as generic.
    NonGenericPoint { ranks: alloc::vec::Vec<usize> },
    /// A sign-flow gradient was requested at a point where it is undefined.
    SignUndefined { coordinate: usize },
    /// The evaluation point lies outside the documented domain of validity.
    OutsideDomain(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            CoreError::NonFinite { context, last_finite_t } => match last_finite_t {
                Some(t) => write!(f, "non-finite value in {context} (last finite t = {t})"),
                None => write!(f, "non-finite value in {context}"),
            },
            CoreError::NonDifferentiable { margin } => {
                write!(f, "not differentiable: activation margin {margin:e} below threshold")
            }
            CoreError::NonGenericPoint { ranks } => {
                write!(f, "rank not constant under perturbation (saw {ranks:?}); point not generic")
            }
            CoreError::SignUndefined { coordinate } => {
                write!(f, "sign-flow gradient undefined: coordinate {coordinate} is zero")
            }
            CoreError::OutsideDomain(msg) => write!(f, "outside domain of validity: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}

/// Convenience alias used across the crate.
pub type Result<T> = core::result::Result<T, CoreError>;

/// Builds an `InvalidInput` error from format arguments.
#[macro_export]
macro_rules! invalid_input {
    ($($arg:tt)*) => {
        $crate::CoreError::InvalidInput(alloc::format!($($arg)*))
    };
}
