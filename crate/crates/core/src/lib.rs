//! Coordination engine for distributed energy resources on a radial feeder.
//!
//! A network operator iterates a regularized dual ascent over voltage-band
//! multipliers and broadcasts per-node incentive signals; self-interested
//! device agents answer with power trajectories over a look-ahead window,
//! recovering discrete setpoints by randomized rounding of the relaxed
//! solution. Batch and online (receding-horizon, asynchronous, measurement-
//! feedback) drivers are provided, together with an analysis layer that
//! computes the method's convergence constants and bound reports.

pub mod agent;
pub mod analysis;
pub mod coordinator;
pub mod device;
pub mod error;
pub mod grid;
pub mod online;
pub mod plant;
pub mod run;
pub mod scenario;

pub use error::{CoreError, Result};
