//! Parcel locker location under the threshold Luce choice model.
//!
//! The crate covers the whole pipeline: problem data and synthetic
//! generation ([`instance`]), the choice rule and profit evaluation
//! ([`choice`]), per-zone dominance graphs ([`domgraph`]), integer and conic
//! formulations with text export ([`model`]), an exact branch-and-bound
//! solver ([`solver`]) and the comparison metrics and parameter sweeps
//! ([`eval`]).

pub mod choice;
pub mod domgraph;
pub mod error;
pub mod eval;
pub mod instance;
pub mod jsonfmt;
pub mod model;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use instance::{Costs, GeneratorSpec, Instance};
