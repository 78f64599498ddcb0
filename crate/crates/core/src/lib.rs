//! Joint-sparse transmit beamforming for dual-function radar-communications
//! (DFRC) arrays.
//!
//! The design problem is `min ‖w‖² + η‖w‖_{2,1}` over the stacked per-user
//! beamformers `w`, subject to mainlobe/stopband beampattern rows,
//! per-antenna power caps and per-user SINR floors, all of the form
//! `w^H F w <= f`. It is solved with consensus ADMM: one auxiliary copy of
//! `w` per constraint, a closed-form consensus update, block
//! soft-thresholding and an exact single-constraint projection. The `K`
//! strongest antenna groups are then kept and the beamformers refit on the
//! subarray.
//!
//! Modules, bottom-up:
//!
//! - [`array`]: ULA steering vectors, channels, angle grids, unit conversions
//! - [`problem`]: stacked variable, constraint rows, problem assembly
//! - [`prox`]: block soft-thresholding
//! - [`qcqp`]: projection onto one quadratic constraint
//! - [`admm`]: the consensus ADMM engine and feasible-point search
//! - [`select`]: antenna ranking, support selection, refit, random baseline
//! - [`eval`]: TxPower, MSRR, beampattern, SINR, feasibility report
//! - [`scenario`], [`experiment`], [`io`]: configuration, orchestration, output files

pub mod admm;
pub mod array;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod problem;
pub mod prox;
pub mod qcqp;
pub mod scenario;
pub mod select;

pub use num_complex::Complex64;

pub use crate::admm::{AdmmConfig, AdmmState};
pub use crate::array::{AngleGrids, AngleRegion, ArrayGeometry, UserChannel};
pub use crate::error::{DfrcError, Result};
pub use crate::problem::{BeamformerStack, ConstraintClass, ProblemInstance, QuadraticConstraint};
pub use crate::scenario::Scenario;
