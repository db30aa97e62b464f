//! Exact and Monte-Carlo tooling for memory-carrying walks on graphs:
//! non-backtracking and window-constrained walks, their stationary measures
//! and reversal symmetries, partial-reversal perturbations with their
//! regeneration structure, and the electrical-network machinery (Dirichlet
//! forms, capacities, flows) used to compare them.

pub mod cayley;
pub mod cover;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod orientation;
pub mod potential;
pub mod ratio;
pub mod regeneration;
pub mod space;
pub mod stationary;
pub mod walks;

pub use error::{Error, Result};
