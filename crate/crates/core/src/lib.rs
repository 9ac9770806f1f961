//! Data-driven reachability analysis and nonlinear zonotopic predictive
//! control (NZPC) for unknown discrete-time systems
//!
//! ```text
//! x(k+1) = f(x(k), u(k)) + w(k)
//! y(k)   = H x(k) + v(k)
//! ```
//!
//! where `f` is unknown, `H` is known with full row rank, and the noises are
//! bounded by zonotopes. The crate is organized bottom-up:
//!
//! - [`sets`]: zonotopes, matrix zonotopes and interval vectors.
//! - [`data`]: trajectories, stacked data windows and the output-to-state set.
//! - [`reach`]: learning an implicit linearized model from a data window and
//!   propagating over-approximating output reachable sets.
//! - [`nzpc`]: the receding-horizon controller built on those sets, including
//!   the QP assembly and an operator-splitting QP solver.
//! - [`plant`]: ground-truth simulators (CSTR benchmark, linear test plant)
//!   and Monte-Carlo containment checks.
//! - [`benchmark`]: parameter bundles for the stirred-tank experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod data;
mod error;
pub mod linalg;
pub mod nzpc;
pub mod plant;
pub mod reach;
pub mod sets;

pub use error::{Error, Result};

pub use data::{DataWindow, PlantDimensions, Trajectory};
pub use nzpc::{
    AffinePredictor, ClosedLoopLog, NzpcConfig, QpProblem, QpSettings, QpSolution, QpStatus,
};
pub use plant::{CstrParams, CstrPlant, LinearPlant, PlantSimulator};
pub use reach::{LinearizationPoint, LinearizedModel, ReachConfig, ReachResult};
pub use sets::{IntervalVector, MatrixZonotope, Zonotope};
