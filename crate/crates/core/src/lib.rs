//! Multiplier search and attainability analysis for constraint injection by
//! regularization.
//!
//! A [`Problem`] couples a parameter space with a loss `L(w)` and a
//! non-negative violation vector `C(w)`. The regularized problem PR(λ)
//! minimizes `L + λ·C`; the constrained problem PC(θ) minimizes `L` subject
//! to `C <= θ`. This crate provides
//!
//! - exact grid oracles and a projected-descent solver for both ([`solvers`]),
//! - multiplier search strategies that solve PC through PR ([`search`]),
//! - certificates for when a constrained optimum can or cannot be reached by
//!   any multiplier ([`analysis`]),
//! - a library of small instances exhibiting each failure mode ([`instances`]),
//! - a batch experiment runner ([`cli`]).

pub mod analysis;
pub mod cli;
pub mod error;
pub mod instances;
pub mod par;
pub mod problem;
pub mod search;
pub mod solvers;

pub use error::{Error, Result};
pub use instances::{make_instance, InstanceName, InstanceSpec};
pub use problem::{Assignment, Multipliers, ParamSpace, Problem, Provenance, SolveResult, Threshold};
