//! Bound-designating projection and the depth-first satisfiability search
//! built on it.
//!
//! Instead of combining every lower bound on a variable with every upper
//! bound the way [`crate::fm`] does, the restricted projection designates one
//! bound row as the extremal one (the greatest lower bound or the smallest
//! upper bound) and only pairs the other rows against it. The union of the
//! projections over all designees of one side covers the full projection, so
//! satisfiability splits into cases that a search can explore one at a time.
//! [`restricted_projection`] builds a single case, [`fmp_set`] enumerates the
//! family for one variable, [`fmplex_qe`] iterates that family construction
//! into a disjunction over several variables, and [`search::solve`] runs the
//! depth-first decision procedure with conflict-driven pruning.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::{BudgetKind, Error, Result};
use crate::outcome::Budgets;
use crate::rational::Rational;
use crate::system::{LinearSystem, RowCombination};

mod heuristics;
mod search;
mod trace;

pub use heuristics::{Heuristic, NodeProgram};
pub use search::{construct_model, solve, SearchRun, SolveOptions};
pub use trace::{BranchEdge, ChoiceRecord, NodeRecord, SearchTrace, TraceOutcome};

/// Which side of a variable's bounds a projection or branching step works on.
///
/// Rows with a negative coefficient on the variable are lower bounds, rows
/// with a positive coefficient are upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Lower,
    Upper,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Lower => write!(f, "lower"),
            Side::Upper => write!(f, "upper"),
        }
    }
}

/// The search variant: how much pruning information the search maintains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Plain case splitting.
    A,
    /// Adds the exclusion set: bound rows whose designated subtree has
    /// already been refuted elsewhere are not designated again.
    B,
    /// Adds backtrack levels on top of the exclusion set, so a conflict can
    /// discard every level between its origin and its cause at once.
    C,
}

/// How rows copied verbatim into a projection obtain their backtrack level.
///
/// A copied row took no part in the projection step, so by default it keeps
/// the level of its source row ([`CopiedRowLevel::Inherit`]). The
/// alternative stamps copies with the level of the system being created,
/// treating a copy like any other row that is not a sum of two bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CopiedRowLevel {
    Inherit,
    ChildLevel,
}

/// One branching alternative: designate row `designee` as the extremal bound
/// on `var`, or (`None`) project away a variable that is unbounded on one
/// side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchChoice {
    pub var: usize,
    pub designee: Option<usize>,
}

/// A full set of alternatives for one variable and one side; exploring every
/// choice in one set covers the projection of the solution set, so a search
/// only ever needs to commit to a single set per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceSet {
    pub var: usize,
    /// `None` marks the single-choice set for a variable with no bounds on
    /// one side; `rows` is empty in that case.
    pub side: Option<Side>,
    /// Eligible designee rows, ascending.
    pub rows: Vec<usize>,
}

impl ChoiceSet {
    /// Number of alternatives in the set. The unbounded projection is a
    /// single choice.
    pub fn len(&self) -> usize {
        if self.side.is_none() {
            1
        } else {
            self.rows.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The alternatives as explicit choices.
    pub fn choices(&self) -> Vec<BranchChoice> {
        if self.side.is_none() {
            vec![BranchChoice {
                var: self.var,
                designee: None,
            }]
        } else {
            self.rows
                .iter()
                .map(|&i| BranchChoice {
                    var: self.var,
                    designee: Some(i),
                })
                .collect()
        }
    }
}

/// Classification of a row of the form `0 <= b` with `b < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictClass {
    /// The row is a nonnegative combination of original rows, so it refutes
    /// the original system.
    Global,
    /// The row refutes only the current branch; its combination uses
    /// subtraction.
    Local,
    NotAConflict,
}

/// Classify row `i` of `system` as a global conflict, a local conflict, or
/// no conflict at all.
pub fn classify_conflict(system: &LinearSystem, i: usize) -> ConflictClass {
    let row = system.row(i);
    if !row.is_zero_row() || row.bound.is_nonnegative() {
        return ConflictClass::NotAConflict;
    }
    if system.provenance(i).is_nonnegative() {
        ConflictClass::Global
    } else {
        ConflictClass::Local
    }
}

/// The original row that row `i` of a derived system stands in for: the
/// unique row of its provenance support that is not in the non-basis `n`.
///
/// The search maintains the invariant that this element exists and is unique
/// for every row it produces; a [`Error::MappingViolation`] therefore
/// indicates a broken invariant, not bad input.
pub fn nonbasis_map(system: &LinearSystem, i: usize, nonbasis: &BTreeSet<usize>) -> Result<usize> {
    let mut outside = system
        .provenance(i)
        .support()
        .filter(|k| !nonbasis.contains(k));
    match (outside.next(), outside.next()) {
        (Some(k), None) => Ok(k),
        (first, _) => {
            let found = first.into_iter().count() + outside.count() + 1;
            Err(Error::MappingViolation {
                row: i,
                found: if first.is_none() { 0 } else { found },
            })
        }
    }
}

/// All choice sets of `system`: for every variable still present, either the
/// two one-side-designated sets (with rows in `excluded` removed) or the
/// single unbounded choice.
pub fn branch_choices(system: &LinearSystem, excluded: &BTreeSet<usize>) -> Vec<ChoiceSet> {
    let mut out = Vec::new();
    for j in 0..system.nvars() {
        if system.column_is_zero(j) {
            continue;
        }
        let sets = system.index_sets(j);
        if sets.lower.is_empty() || sets.upper.is_empty() {
            out.push(ChoiceSet {
                var: j,
                side: None,
                rows: Vec::new(),
            });
        } else {
            for (side, rows) in [(Side::Lower, &sets.lower), (Side::Upper, &sets.upper)] {
                out.push(ChoiceSet {
                    var: j,
                    side: Some(side),
                    rows: rows
                        .iter()
                        .copied()
                        .filter(|i| !excluded.contains(i))
                        .collect(),
                });
            }
        }
    }
    out
}

/// A restricted projection step: the projected system together with the
/// one-step combination matrix that produced each row from the input rows.
#[derive(Debug, Clone)]
pub struct Projection {
    pub system: LinearSystem,
    /// `step[k]` combines the input rows into row `k` of `system`.
    pub step: Vec<RowCombination>,
}

/// Project variable `j` out of `system` under the assumption that row
/// `designee` is the extremal bound on it (`None`: the variable is unbounded
/// on one side and simply drops out).
///
/// With a designee `i`, every other lower bound `p` contributes the row
/// `(1/a_ij)·row_i − (1/a_pj)·row_p`, every other upper bound `p` contributes
/// `−(1/a_ij)·row_i + (1/a_pj)·row_p`, and rows without the variable are
/// copied. Rows appear in exactly that order, each group ascending by input
/// row index. Without a designee only the copies remain. The designee must
/// have a nonzero coefficient on `x_j` and both bound sides must be
/// nonempty; the unbounded form instead requires one side to be empty.
///
/// `new_lvl` is the backtrack level of the system being created: rows built
/// by subtracting two bounds from the same side are stamped with it, rows
/// adding bounds from opposite sides keep the larger of their parents'
/// levels, and copies follow `copied`.
pub fn restricted_projection(
    system: &LinearSystem,
    j: usize,
    designee: Option<usize>,
    new_lvl: usize,
    copied: CopiedRowLevel,
) -> Result<Projection> {
    let sets = system.index_sets(j);
    let mut step: Vec<RowCombination> = Vec::new();
    match designee {
        Some(i) => {
            let a_i = &system.row(i).coeffs[j];
            if a_i.is_zero() {
                return Err(Error::InvalidDesignee {
                    var: j,
                    reason: format!("row {i} has no coefficient on the variable"),
                });
            }
            if sets.lower.is_empty() || sets.upper.is_empty() {
                return Err(Error::InvalidDesignee {
                    var: j,
                    reason: "designating a bound needs bounds on both sides".into(),
                });
            }
            let inv = a_i.recip();
            for &p in sets.lower.iter().filter(|&&p| p != i) {
                let mut f = RowCombination::new();
                f.add_entry(i, inv.clone());
                f.add_entry(p, -system.row(p).coeffs[j].recip());
                step.push(f);
            }
            for &p in sets.upper.iter().filter(|&&p| p != i) {
                let mut f = RowCombination::new();
                f.add_entry(i, -inv.clone());
                f.add_entry(p, system.row(p).coeffs[j].recip());
                step.push(f);
            }
        }
        None => {
            if !sets.lower.is_empty() && !sets.upper.is_empty() {
                return Err(Error::InvalidDesignee {
                    var: j,
                    reason: "dropping a variable outright needs an empty bound side".into(),
                });
            }
        }
    }
    for &z in &sets.zero {
        step.push(RowCombination::unit(z));
    }

    let mut rows = Vec::with_capacity(step.len());
    let mut provenance = Vec::with_capacity(step.len());
    let mut btlvl = Vec::with_capacity(step.len());
    for f in &step {
        let row = f.combine_rows(system.rows(), system.nvars());
        debug_assert!(
            row.coeffs[j].is_zero(),
            "projection must eliminate the variable"
        );
        let mut prov = RowCombination::new();
        for (k, c) in f.iter() {
            prov.add_scaled(system.provenance(k), c);
        }
        rows.push(row);
        provenance.push(prov);
        btlvl.push(row_level(f, system, new_lvl, copied));
    }
    let child = LinearSystem::derived(
        system.nvars(),
        system.origin_count(),
        rows,
        provenance,
        btlvl,
    );
    Ok(Projection {
        system: child,
        step,
    })
}

/// Backtrack level of a projected row from its one-step combination.
fn row_level(
    f: &RowCombination,
    parent: &LinearSystem,
    new_lvl: usize,
    copied: CopiedRowLevel,
) -> usize {
    let entries: Vec<(usize, &Rational)> = f.iter().collect();
    match entries.as_slice() {
        [(src, _)] => match copied {
            CopiedRowLevel::Inherit => parent.btlvl(*src),
            CopiedRowLevel::ChildLevel => new_lvl,
        },
        [(a, ca), (b, cb)] => {
            if ca.is_positive() && cb.is_positive() {
                parent.btlvl(*a).max(parent.btlvl(*b))
            } else {
                new_lvl
            }
        }
        _ => unreachable!("projection rows combine at most two input rows"),
    }
}

/// The family of restricted projections that covers eliminating `x_j`: one
/// projection per bound row on `side` when both sides are populated,
/// otherwise the single unbounded projection.
///
/// The projected rows carry backtrack levels one step below the input
/// system, with copies inheriting their source level.
pub fn fmp_set(system: &LinearSystem, j: usize, side: Side) -> Vec<LinearSystem> {
    let sets = system.index_sets(j);
    let designees: Vec<Option<usize>> = if sets.lower.is_empty() || sets.upper.is_empty() {
        vec![None]
    } else {
        let rows = match side {
            Side::Lower => &sets.lower,
            Side::Upper => &sets.upper,
        };
        rows.iter().map(|&i| Some(i)).collect()
    };
    designees
        .into_iter()
        .map(|d| {
            restricted_projection(system, j, d, 1, CopiedRowLevel::Inherit)
                .expect("designees taken from the index sets are eligible")
                .system
        })
        .collect()
}

/// Result of eliminating a block of variables: the solution set of the input
/// projected onto the remaining variables is exactly the union of the
/// disjuncts' solution sets.
#[derive(Debug, Clone)]
pub struct QeResult {
    /// Leaf systems in depth-first order of the case tree.
    pub disjuncts: Vec<LinearSystem>,
    /// Total number of rows constructed across every projection performed.
    pub rows_generated: u64,
}

/// Eliminate the variables in `order` (each paired with the side whose
/// bounds are designated) by iterating the restricted projection family,
/// collecting the leaves as a disjunction.
///
/// Fails with [`Error::Budget`] once more than `budgets.max_rows` rows have
/// been constructed.
pub fn fmplex_qe(
    system: &LinearSystem,
    order: &[(usize, Side)],
    budgets: &Budgets,
) -> Result<QeResult> {
    let mut result = QeResult {
        disjuncts: Vec::new(),
        rows_generated: 0,
    };
    qe_step(system, order, 0, budgets, &mut result)?;
    Ok(result)
}

fn qe_step(
    system: &LinearSystem,
    order: &[(usize, Side)],
    depth: usize,
    budgets: &Budgets,
    result: &mut QeResult,
) -> Result<()> {
    let Some(&(j, side)) = order.get(depth) else {
        result.disjuncts.push(system.clone());
        return Ok(());
    };
    let sets = system.index_sets(j);
    let designees: Vec<Option<usize>> = if sets.lower.is_empty() || sets.upper.is_empty() {
        vec![None]
    } else {
        let rows = match side {
            Side::Lower => &sets.lower,
            Side::Upper => &sets.upper,
        };
        rows.iter().map(|&i| Some(i)).collect()
    };
    for d in designees {
        let child = restricted_projection(system, j, d, depth + 1, CopiedRowLevel::Inherit)?.system;
        result.rows_generated += child.len() as u64;
        if result.rows_generated > budgets.max_rows {
            return Err(Error::Budget {
                kind: BudgetKind::Rows,
                limit: budgets.max_rows,
            });
        }
        qe_step(&child, order, depth + 1, budgets, result)?;
    }
    Ok(())
}
