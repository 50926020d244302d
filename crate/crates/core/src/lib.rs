//! Random coordinate descent (RCD) for the resource allocation problem in an
//! open multi-agent system where agents are replaced while the algorithm runs.
//!
//! The crate is organised bottom-up:
//!
//! * [`cost`]: the admissible 1-D cost function class and the replacement
//!   samplers (random piecewise quadratic, adversarial quadratic, uniform
//!   quadratic).
//! * [`allocation`]: feasible states on `S_n = {x >= 0 : sum(x) = n}`, the
//!   selfish point, the instantaneous optimum (dual bisection) and a simplex
//!   projection used by brute-force oracles.
//! * [`rcd`]: the pairwise coordinate descent update and its contraction rate.
//! * [`events`]: the i.i.d. update/replacement event stream and the trajectory
//!   driver.
//! * [`metrics`]: dynamical regret, benefit and potential benefit ledgers.
//! * [`bounds`]: closed-form upper bounds on the expected metrics.
//! * [`harness`]: seeded Monte Carlo experiments, executed in parallel with
//!   rayon when the `parallel` feature is enabled (the default).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod allocation;
pub mod bounds;
pub mod config;
pub mod cost;
mod error;
pub mod events;
mod exec;
pub mod harness;
pub mod metrics;
pub mod output;
pub mod rcd;
pub mod seed;

pub use error::{Error, Result};
pub use exec::Execution;
