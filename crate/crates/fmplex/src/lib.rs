//! Exact decision procedures for conjunctions of linear constraints over
//! the rationals.
//!
//! The crate revolves around [`system::LinearSystem`], a matrix of rows
//! `a·x ≤ b` whose bounds live in [`rational::DeltaRational`] so strict
//! comparisons stay exact. Three solvers share that representation:
//!
//! * [`fm::fm_solve`] — classic pairwise variable elimination,
//! * [`fmplex::solve`] — elimination restructured as a depth-first search
//!   over bound designations, with conflict-driven backjumping,
//! * [`simplex::simplex_solve`] — a pivoting check used as the reference.
//!
//! Satisfiable systems come back with a model, unsatisfiable ones with an
//! unsat core and (where the method admits one) a Farkas certificate that
//! [`farkas::check_farkas`] validates independently. The [`smtlib`] module
//! reads and writes the fragment of SMT-LIB 2 covering `QF_LRA`
//! conjunctions, [`pipeline`] wires parsing, preprocessing, and solving
//! together, and [`cli`] exposes the whole thing as a command-line tool.

pub mod cli;
pub mod error;
pub mod farkas;
pub mod fm;
pub mod fmplex;
pub mod generate;
pub mod linalg;
pub mod outcome;
pub mod pipeline;
pub mod rational;
pub mod simplex;
pub mod smtlib;
pub mod system;

pub use error::{Error, Result};
pub use outcome::{Budgets, SolveOutcome, Stats};
pub use rational::{DeltaRational, Rational};
pub use system::{Assignment, Constraint, LinearSystem};
