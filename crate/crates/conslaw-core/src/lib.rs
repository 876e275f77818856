//! Numerical laboratory for conservation laws of neural-network training dynamics.
//!
//! The crate implements, counts, and empirically verifies quantities that stay
//! constant while elementary network blocks (two-layer linear/ReLU maps,
//! convolutions, attention, softmax classifiers) and their deep compositions
//! are trained — under gradient flow with optional weight decay, under the
//! sign (Adam-like) flow, and under discrete SGD/Adam steps.
//!
//! Layout:
//! - [`numerics`]: dense row-major matrices, Jacobi singular values, numerical
//!   rank, incremental orthonormal bases, finite-difference Jacobians.
//! - [`rng`]: a small seeded RNG with a pinned value stream.
//! - [`models`]: block specifications, parameter vectors, forward maps,
//!   vector–Jacobian products, losses, and one-parameter invariance groups.
//! - [`laws`]: closed-form conserved-quantity catalogs per block, with
//!   gradients, Hessian data, and orthogonality verification.
//! - [`liealg`]: linear vector-field families attached to reparameterizations,
//!   Lie-bracket closures, trace dimensions, and exact law counting.
//! - [`spanprobe`]: empirical rank probes of the function-space span, both for
//!   whole networks and for blocks inside deep compositions, plus the
//!   sign-flow span and a worked four-parameter residual example.
//! - [`flows`]: fixed-step RK4/Euler integration of gradient flow with
//!   weight-decay schedules, the rescaling structure check, and the sign flow.
//! - [`discrete`]: SGD and sign-update sweeps, per-step drift bounds, and
//!   log–log slope fits.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod discrete;
pub mod error;
pub mod flows;
pub mod laws;
pub mod liealg;
pub mod models;
pub mod numerics;
mod rmath;
pub mod rng;
pub mod spanprobe;

pub use error::CoreError;

/// Library version string, embedded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
