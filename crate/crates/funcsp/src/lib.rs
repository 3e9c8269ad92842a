//! A toolkit for binary constraint satisfaction problems built around
//! functional constraints.
//!
//! A constraint is *functional* on a variable when each value of the other
//! variable admits at most one partner. Such constraints let a variable be
//! substituted away: its constraints are rewritten onto the determining
//! variable by relation composition, shrinking the problem that search has
//! to handle while keeping the solution space intact. This crate provides:
//!
//! - the relation algebra and problem model ([`relation`], [`csp`]);
//! - two reducers that rewrite a problem into a star-shaped canonical form,
//!   plus solution extension back to the full variable set ([`elimination`]);
//! - arc consistency and a MAC backtracking solver with a brute-force
//!   enumeration oracle ([`solver`]);
//! - a seeded random instance generator ([`generator`]);
//! - the same substitution machinery for extensional n-ary relations
//!   ([`nonbinary`]);
//! - a text instance format, a paired benchmark harness, and the `funcsp`
//!   command line driver ([`format`], [`bench`], [`cli`]).
//!
//! See the crate examples for end-to-end walkthroughs of each capability.

pub mod bench;
pub mod cli;
pub mod csp;
pub mod elimination;
pub mod error;
pub mod format;
pub mod generator;
pub mod nonbinary;
pub mod relation;
pub mod solver;

pub use csp::{ConstraintId, Csp, Domain, VariableId};
pub use elimination::{
    build_functional_graph, eliminate_variable, extend_solution, functional_elimination_ordering,
    is_canonical, is_trivially_functional, linear_elimination, substitute, variable_elimination,
    CanonicalForm, EliminationOrdering, FunctionalGraph, FunctionalSnapshot, ReductionStats,
};
pub use error::{Error, Result};
pub use generator::{generate, verify_spec, ProblemSpec};
pub use relation::{BinaryRelation, Value};
pub use solver::{ac_enforce, brute_force, solve, SearchConfig, SolveOutcome, SolveStats};
