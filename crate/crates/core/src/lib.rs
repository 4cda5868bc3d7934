//! Deterministic laboratory for the local convergence rates of gradient
//! descent, heavy-ball momentum, RMSprop and Adam.
//!
//! The crate is organised bottom-up:
//!
//! * [`optim`] implements the four optimizers both as history functions
//!   (weighted sums over the full gradient history) and as O(1) recursions,
//!   and runs trajectories against an [`Objective`].
//! * [`objectives`] provides quadratic and quartic-perturbed test objectives
//!   with a known minimizer and Hessian spectrum.
//! * [`spectral`] builds the linearised momentum/Adam iteration matrix,
//!   evaluates its eigenvalues in closed form and numerically, and predicts
//!   local rates.
//! * [`ratefit`] fits the geometric decay rate of a distance sequence.
//! * [`harness`] ties everything together behind a config file and a CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod objectives;
pub mod optim;
pub mod ratefit;
pub mod rng;
pub mod spectral;
mod vector;

pub use error::{Error, FieldError, Result};
pub use objectives::{Objective, ObjectiveFamily};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState, Termination, Trajectory};
pub use ratefit::{RateEstimate, Verdict};
pub use spectral::{SpectralReport, SquareMatrix};
pub use vector::ParamVector;

/// Default distance below which trajectories stop and rate fits discard points.
pub const DEFAULT_DISTANCE_FLOOR: f64 = 1e-12;

/// Distances above this are treated as divergence.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
