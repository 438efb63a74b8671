//! Training laboratory for probing how small sigmoid networks fit low and
//! high frequencies when they are trained by something other than gradient
//! descent.
//!
//! The crate is organised bottom-up:
//!
//! - [`objective`]: the black-box loss contract and finite-difference
//!   derivatives every gradient-using optimizer consumes.
//! - [`mlp`]: fully connected sigmoid networks, their Gaussian initialization
//!   and the mean-squared-error objective.
//! - [`linesearch`]: strong-Wolfe line search with interpolation, and golden
//!   section search.
//! - [`optimizers`]: gradient descent, Polak-Ribière CG, truncated Newton,
//!   BFGS, L-BFGS, Powell, particle swarm and a Monte-Carlo-like random search.
//! - [`spectrum`]: per-frequency DFT error and Gaussian low/high-pass label
//!   decomposition.
//! - [`harness`]: datasets, experiment orchestration, CSV/JSON/SVG output.

pub mod error;
pub mod harness;
pub mod linesearch;
pub mod mlp;
pub mod objective;
pub mod optimizers;
pub mod spectrum;

pub use error::{Error, Result};
pub use objective::{FdConfig, FnObjective, Objective, ObjectiveHandle, ParamVector};
