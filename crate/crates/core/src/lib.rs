//! Competing first passage percolation with fixed unequal speeds on
//! configuration-model graphs with infinite-variance degrees.
//!
//! Two colors spread from distinct sources: red crosses an edge in one time
//! unit, blue in `lambda > 1` units. The crate simulates the race, estimates
//! branching-process limits, evaluates the asymptotic predictions for the
//! losing color and measures layer statistics of the graph.

pub mod bp;
pub mod compete;
pub mod degrees;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod measure;
pub mod numeric;
pub mod predict;
pub mod verify;

pub use error::{Error, Result};
