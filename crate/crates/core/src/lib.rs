//! Fairness-aware seed allocation for independent-cascade spread on
//! degree-corrected stochastic block model networks.
//!
//! The pipeline: describe or estimate a block model ([`model`],
//! [`estimate`]), build the spread operator ([`spread`]), score allocations
//! with the coverage-plus-entropy objective ([`objective`]), optimize and round
//! them ([`optimizer`]) and evaluate by Monte Carlo ([`experiment`]).

pub mod error;
pub mod estimate;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod model;
pub mod objective;
pub mod optimizer;
pub mod spread;

pub use error::{Error, Result};
pub use graph::Network;
pub use model::{CommunityLabels, DcsbmParams};
pub use objective::{ApproxObjective, ObjectiveConfig, ObjectiveEval};
pub use optimizer::{Proposal, SolverOptions, Strategy, UniqueClasses};
pub use spread::{SpreadOperator, TransmissionSpec};
