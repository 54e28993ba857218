//! Model predictive current control for permanent magnet synchronous motors
//! with polynomial current trajectories and an LP-based constrained solve.
//!
//! The pieces, bottom up:
//!
//! - [`motor`]: dq model, losses, plant integrator and ZOH discretization
//! - [`constraints`]: current box and voltage rectangle
//! - [`trajectory`]: polynomial currents, flat voltages, quadratic cost and
//!   sampled constraints
//! - [`lp`] and [`qp`]: dense simplex and a reference active-set QP
//! - [`optimizer`]: least-distance transform and the LP-based solve
//! - [`controller`]: the predictive controller and PI speed loop
//! - [`harness`]: scenarios, closed-loop simulation and metrics
//!
//! Runnable examples live in `examples/`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constraints;
pub mod controller;
pub mod error;
pub mod harness;
pub mod lp;
pub mod motor;
pub mod optimizer;
pub mod qp;
pub mod trajectory;

pub use constraints::{build_constraint_set, ConstraintSet, VoltageRect};
pub use controller::{ControllerConfig, MpcController};
pub use error::{Error, Result};
pub use motor::{DqState, DqVoltage, MotorParams};
pub use optimizer::SolverKind;
pub use trajectory::{Horizon, PolyTrajectory};
