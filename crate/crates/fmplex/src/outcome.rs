//! Solver outcomes, resource budgets, and instrumentation counters shared by
//! all backends.

use crate::farkas::FarkasCertificate;
use crate::system::Assignment;
use std::collections::BTreeSet;

/// Result of a satisfiability search over a system of rows.
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    /// Satisfiable, with a delta-rational model.
    Sat(Assignment),
    /// Unsatisfiable. `core` indexes rows of the input system. A certificate
    /// is attached whenever the conclusion came from a single nonnegative
    /// conflict combination; the one certificate-free source is the
    /// level-0 union of failed branches in the backtracking search.
    Unsat {
        core: BTreeSet<usize>,
        certificate: Option<FarkasCertificate>,
    },
    /// Internal to the search: the subtree is unsatisfiable and the search
    /// should resume at `level`.
    PartialUnsat { level: usize, core: BTreeSet<usize> },
}

impl SolveOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveOutcome::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveOutcome::Unsat { .. })
    }
}

/// Resource limits. A search that would exceed one aborts with a budget
/// error instead of deciding.
#[derive(Debug, Clone, Copy)]
pub struct Budgets {
    pub max_nodes: u64,
    pub max_rows: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_nodes: 1_000_000,
            max_rows: 10_000_000,
        }
    }
}

/// Work counters. Each backend fills the counters that make sense for it and
/// leaves the others at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    /// Intermediate systems visited by the branching search.
    pub nodes_visited: u64,
    /// Rows materialized in derived systems (projections and eliminations).
    pub rows_generated: u64,
    /// Simplex pivots.
    pub pivots: u64,
    /// Deepest search level reached.
    pub max_depth: u64,
}
