//! Maximum-cardinality weakly stable matching for SMTI and HRT instances.
//!
//! The crate provides the instance model ([`model`]), tie-breaking strategies
//! ([`strategy`]), deferred-acceptance base algorithms ([`basealg`]), the
//! tie-breaking local search and its equity mode ([`tbls`]), a random
//! instance generator ([`gen`]), a brute-force oracle for small instances
//! ([`oracle`]) and the text file formats ([`format`]).
//!
//! ```
//! use tbls_core::{fixtures, tbls, SolverParams};
//!
//! let inst = fixtures::toy();
//! let sol = tbls::run(&inst, &SolverParams { seed: 7, ..SolverParams::default() }).unwrap();
//! assert_eq!(sol.matching.size(), 4);
//! ```

pub mod basealg;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod gen;
pub mod model;
pub mod oracle;
pub mod strategy;
pub mod tbls;

pub use basealg::{BalancedBase, BaseAlgorithm, GaleShapley};
pub use error::{ModelError, SolveError};
pub use model::{
    Agent, AgentRef, Favored, Instance, InstanceSpec, Kind, Matching, OriginalRanks, Rank, Ranking,
    RunReport, Side,
};
pub use strategy::TieBreakingStrategy;
pub use tbls::{Solution, SolverParams, Threshold};
