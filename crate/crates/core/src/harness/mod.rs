//! Numerical harness for scaling experiments.

pub mod cells;
pub mod counterexample;
pub mod dispersive;
pub mod ensemble;
pub mod estimates;
pub mod multilinear;
pub mod physical;
pub mod sweep;
