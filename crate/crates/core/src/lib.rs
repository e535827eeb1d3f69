//! Sufficient coupling strengths for frequency synchronization of
//! heterogeneous Kuramoto oscillators on graphs of diameter two.
//!
//! * [`graph`]: diameter, common-neighbour matrix, Laplacian spectrum and a
//!   random diameter-two generator.
//! * [`model`]: the deviation-normalized system and its potential function.
//! * [`simulator`]: fixed-step RK4 with synchronization detection and
//!   spread-bound monitoring.
//! * [`bounds`]: the equal-coupling analytic bound and three competing
//!   conditions.
//! * [`coupling_opt`]: per-edge minimum-sum couplings by linear programming.
//! * [`harness`]: reproducible worked examples and Monte-Carlo comparisons.

pub mod bounds;
pub mod coupling_opt;
pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod model;
pub mod simplex;
pub mod simulator;

pub use error::{Error, Result};
