//! Nurse scheduling as a weighted constraint satisfaction problem.
//!
//! Two pipelines share the types in [`model`]: an implicit one that mines
//! historical schedules ([`mining`], [`bayes`]) and generates new ones, and
//! an explicit one that solves a WCSP ([`solver`]) whose constraints may be
//! learned from past schedules ([`learner`]). [`eval`] scores the output.

pub mod bayes;
pub mod error;
pub mod eval;
pub mod io;
pub mod learner;
pub mod mining;
pub mod model;
pub mod rational;
pub mod solver;

pub use error::{Error, Result};
pub use model::{
    pattern_cost, solution_cost, Assignment, Horizon, NspInstance, Schedule, ShiftPattern, WcspInstance,
};
pub use rational::Rational;
pub use solver::{Sense, SolveResult, SolveStatus};
