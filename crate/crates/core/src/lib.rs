//! Numerical laboratory for space-time bounds on solutions of
//! u_t + d_x Lap u = +-d_x(u^{k+1}) with x in R, y periodic.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod exact;
pub mod field;
pub mod grid;
pub mod harness;
pub mod io;
pub mod norms;
pub mod projectors;
pub mod runner;
pub mod measure;
pub mod propagator;
pub mod solver;
pub mod stats;
pub mod symbols;

pub use error::{Result, ZkError};
pub use field::{fft_forward, fft_inverse, PhysicalField, SpaceTimeField, SpectralField, C64};
pub use grid::{FrequencyPoint, Grid};
