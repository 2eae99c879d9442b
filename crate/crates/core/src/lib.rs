//! Divide & conquer heuristics for the proctor assignment covering knapsack.
//!
//! Rooms with capacities `c` and proctor costs `p` must host a demand `D`;
//! the goal is the cheapest set of rooms whose capacity covers `D`. The crate
//! provides exact and heuristic solvers, recursive room partitions (D&C
//! trees), per-height efficiency metrics and a seeded Monte Carlo harness.

pub mod cli;
pub mod dctree;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod montecarlo;
pub mod rational;
pub mod solvers;

pub use error::{Error, Result};
pub use rational::RationalValue;
