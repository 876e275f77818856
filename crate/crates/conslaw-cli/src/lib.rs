//! Library surface of the `conslaw` command-line driver. The binary in
//! `main.rs` is a thin wrapper, so integration tests can reach the config,
//! artifact, and recipe plumbing directly.

pub mod artifact;
pub mod cmd;
pub mod config;
pub mod error;
pub mod recipes;
