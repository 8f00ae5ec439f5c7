//! Distributed min-max optimization by dual decomposition.
//!
//! Every agent holds a private polyhedral set and per-slot convex costs; the
//! network jointly minimizes the peak of the aggregate cost profile. Agents
//! only exchange edge multipliers and local dual vectors with neighbors.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`.

pub mod error;
pub mod graph;
pub mod harness;
pub mod local;
pub mod lp;
pub mod model;
pub mod protocol;
pub mod reference;
pub mod scalar;
pub mod tcl;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use error::{Error, Result};
pub use graph::Graph;
pub use scalar::Scalar;

pub type LpProblem64 = lp::LpProblem<f64>;
pub type LpSolution64 = lp::LpSolution<f64>;
pub type AgentSpec64 = model::AgentSpec<f64>;
pub type MinMaxProblem64 = model::MinMaxProblem<f64>;
pub type LocalPrimalDual64 = local::LocalPrimalDual<f64>;
pub type AgentState64 = protocol::AgentState<f64>;
pub type OracleResult64 = reference::OracleResult<f64>;
pub type RunTrace64 = harness::RunTrace<f64>;
pub type FinalReport64 = harness::FinalReport<f64>;

pub type LpProblem32 = lp::LpProblem<f32>;
pub type MinMaxProblem32 = model::MinMaxProblem<f32>;
