//! Solvers for the stochastic traveling salesperson problem with generalized
//! latency (STSP-GL): choose a tour through a subset of nodes that serves
//! enough origin-destination demand in enough scenarios, trading off tour
//! length against expected passenger travel time.
//!
//! Entry points are in [`orchestrate`]: branch-and-price ([`orchestrate::run_bp`]),
//! the hybrid variant, the local-search heuristic and a monolithic MIP.

pub mod colgen;
pub mod covers;
pub mod error;
pub mod eval;
pub mod model;
pub mod mp;
pub mod orchestrate;
pub mod scenarios;
pub mod tspgl;

pub use error::{Error, Result};
pub use model::{Instance, Status, StspGlResult, TspGlSolution};
