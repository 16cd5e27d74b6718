//! The depth-first satisfiability search over restricted projections.
//!
//! Each node of the search tree holds a system derived from the original
//! input. The node commits to one choice set (a variable plus one side of
//! its bounds, or the unbounded projection) and explores the restricted
//! projections of its alternatives as children. A conflict row `0 <= b`
//! with `b < 0` whose provenance is nonnegative refutes the original input
//! outright; one with mixed signs refutes just the branch, and the row's
//! backtrack level says how many levels of the branch it refutes. The
//! search variants differ in how much of that conflict information they
//! exploit.

use std::collections::BTreeSet;

use crate::error::{BudgetKind, Error, Result};
use crate::farkas::FarkasCertificate;
use crate::linalg::provenance_rank;
use crate::outcome::{Budgets, SolveOutcome, Stats};
use crate::rational::DeltaRational;
use crate::system::{bound_rewrite, Assignment, LinearSystem};

use super::heuristics::Chooser;
use super::trace::{BranchEdge, ChoiceRecord, SearchTrace};
use super::{
    branch_choices, classify_conflict, nonbasis_map, restricted_projection, ConflictClass,
    CopiedRowLevel, Heuristic, Variant,
};

/// Knobs of the depth-first search.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub variant: Variant,
    pub heuristic: Heuristic,
    pub budgets: Budgets,
    pub copied_rows: CopiedRowLevel,
    /// Keep exploring after a model is found: the first model is still
    /// returned, but every branch the pruning rules leave open is visited.
    pub full_traversal: bool,
    /// Do not bar previously refuted designees even under variants B and C,
    /// leaving backtrack levels as the only pruning.
    pub ignore_exclusion: bool,
    /// Check at every node that the provenance rows are linearly
    /// independent, counting failures in [`SearchRun::rank_violations`].
    pub check_rank: bool,
    /// Record every visited node in [`SearchRun::trace`].
    pub collect_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            variant: Variant::C,
            heuristic: Heuristic::MinFanout,
            budgets: Budgets::default(),
            copied_rows: CopiedRowLevel::Inherit,
            full_traversal: false,
            ignore_exclusion: false,
            check_rank: false,
            collect_trace: false,
        }
    }
}

/// Everything one search run produced.
#[derive(Debug)]
pub struct SearchRun {
    /// The decision, or the budget/invariant error that stopped the run.
    pub outcome: Result<SolveOutcome>,
    pub stats: Stats,
    /// Empty unless [`SolveOptions::collect_trace`] was set.
    pub trace: SearchTrace,
    /// Nodes whose provenance rows were linearly dependent; stays 0 unless
    /// [`SolveOptions::check_rank`] was set.
    pub rank_violations: u64,
}

/// Decide `system` by depth-first search.
///
/// `Sat` carries a model over all variables of the system (variables the
/// search never had to constrain are 0). `Unsat` carries a core of original
/// row indices and, when the refutation was a single nonnegative
/// combination, the combination as a certificate; an unsatisfiable result
/// assembled from several branches carries no certificate. The intermediate
/// `PartialUnsat` form never escapes the root.
pub fn solve(system: &LinearSystem, options: &SolveOptions) -> SearchRun {
    let mut search = Search {
        options,
        chooser: Chooser::new(&options.heuristic),
        stats: Stats::default(),
        trace: SearchTrace::new(),
        rank_violations: 0,
    };
    let outcome = search
        .node(system, 0, &BTreeSet::new(), &BTreeSet::new(), None, None)
        .map(|outcome| match outcome {
            SolveOutcome::Sat(mut model) => {
                for j in 0..system.nvars() {
                    if model.get(j).is_none() {
                        model.set(j, DeltaRational::zero());
                    }
                }
                debug_assert!(matches!(
                    crate::system::evaluate_all(&model, system),
                    Ok(true)
                ));
                SolveOutcome::Sat(model)
            }
            SolveOutcome::PartialUnsat { .. } => {
                unreachable!("the root cannot backtrack above itself")
            }
            unsat => unsat,
        });
    SearchRun {
        outcome,
        stats: search.stats,
        trace: search.trace,
        rank_violations: search.rank_violations,
    }
}

/// Extend a model of a projection to the parent system by assigning the
/// projected variable. With a designated bound the variable sits exactly on
/// it; for an unbounded projection it takes the most constraining bound
/// left in the parent, or 0 when no row mentions it. Variables missing from
/// the partial model count as 0, matching how the final model is completed.
pub fn construct_model(
    child: Assignment,
    parent: &LinearSystem,
    var: usize,
    designee: Option<usize>,
) -> Result<Assignment> {
    let mut model = child;
    let value = match designee {
        Some(i) => bound_rewrite(parent, i, var)?.eval(&model),
        None => crate::fm::back_substituted_value(parent, var, &model),
    };
    model.set(var, value);
    Ok(model)
}

struct Search<'a> {
    options: &'a SolveOptions,
    chooser: Chooser,
    stats: Stats,
    trace: SearchTrace,
    rank_violations: u64,
}

impl Search<'_> {
    fn node(
        &mut self,
        system: &LinearSystem,
        lvl: usize,
        nonbasis: &BTreeSet<usize>,
        excluded: &BTreeSet<usize>,
        parent: Option<usize>,
        edge: Option<BranchEdge>,
    ) -> Result<SolveOutcome> {
        self.stats.nodes_visited += 1;
        if self.stats.nodes_visited > self.options.budgets.max_nodes {
            return Err(Error::Budget {
                kind: BudgetKind::Nodes,
                limit: self.options.budgets.max_nodes,
            });
        }
        self.stats.max_depth = self.stats.max_depth.max(lvl as u64);
        if self.options.check_rank
            && provenance_rank(system.provenance_rows(), system.origin_count()) != system.len()
        {
            self.rank_violations += 1;
        }
        let id = self.trace.open(
            self.options.collect_trace,
            parent,
            edge,
            lvl,
            nonbasis,
            excluded,
            system.len(),
        );
        let result = self.expand(system, lvl, nonbasis, excluded, id);
        self.trace.close(id, &result);
        result
    }

    fn expand(
        &mut self,
        system: &LinearSystem,
        lvl: usize,
        nonbasis: &BTreeSet<usize>,
        excluded: &BTreeSet<usize>,
        id: usize,
    ) -> Result<SolveOutcome> {
        // A zero matrix with nonnegative bounds is satisfied by any point.
        if system.matrix_is_zero() && system.rows().iter().all(|r| r.bound.is_nonnegative()) {
            return Ok(SolveOutcome::Sat(Assignment::new()));
        }

        // Conflict rows. A global conflict refutes the original system and
        // doubles as its refutation certificate. Local conflicts end the
        // branch: under variant C the smallest backtrack level among them
        // picks the jump target, under A and B the node just fails to its
        // parent.
        let mut first_local: Option<usize> = None;
        let mut least_level: Option<(usize, usize)> = None;
        for i in 0..system.len() {
            match classify_conflict(system, i) {
                ConflictClass::Global => {
                    let combination = system.provenance(i).clone();
                    return Ok(SolveOutcome::Unsat {
                        core: combination.support().collect(),
                        certificate: Some(FarkasCertificate::new(combination)),
                    });
                }
                ConflictClass::Local => {
                    first_local.get_or_insert(i);
                    let level = system.btlvl(i);
                    if least_level.map_or(true, |(best, _)| level < best) {
                        least_level = Some((level, i));
                    }
                }
                ConflictClass::NotAConflict => {}
            }
        }
        if let Some(first) = first_local {
            let (level, row) = match self.options.variant {
                Variant::C => {
                    let (level, row) = least_level.expect("a local conflict was recorded");
                    debug_assert!(level >= 1, "a local conflict involves a subtraction");
                    (level - 1, row)
                }
                Variant::A | Variant::B => {
                    debug_assert!(lvl >= 1, "roots have nonnegative provenance");
                    (lvl - 1, first)
                }
            };
            return Ok(SolveOutcome::PartialUnsat {
                level,
                core: system.provenance(row).support().collect(),
            });
        }

        // Branch. Resolve every row to the original row it stands in for;
        // designees whose originals were already refuted as designees are
        // barred under variants B and C.
        let mapped = (0..system.len())
            .map(|i| nonbasis_map(system, i, nonbasis))
            .collect::<Result<Vec<usize>>>()?;
        let apply_exclusion = self.options.variant != Variant::A && !self.options.ignore_exclusion;
        let barred: BTreeSet<usize> = if apply_exclusion {
            (0..system.len())
                .filter(|&i| excluded.contains(&mapped[i]))
                .collect()
        } else {
            BTreeSet::new()
        };
        let choices = branch_choices(system, &barred);
        debug_assert!(
            !choices.is_empty(),
            "a conflict-free node with a nonzero matrix has a live variable"
        );
        let set = self.chooser.choose(system, &choices, &mapped)?;
        self.trace.set_choice(
            id,
            ChoiceRecord {
                var: set.var,
                side: set.side,
                designees: set.rows.clone(),
                mapped: set.rows.iter().map(|&i| mapped[i]).collect(),
            },
        );

        let designees: Vec<Option<usize>> = if set.side.is_none() {
            vec![None]
        } else {
            set.rows.iter().map(|&i| Some(i)).collect()
        };
        let mut kernel: BTreeSet<usize> = BTreeSet::new();
        let mut child_excluded = excluded.clone();
        let mut first_model: Option<Assignment> = None;
        for designee in designees {
            let projection = restricted_projection(
                system,
                set.var,
                designee,
                lvl + 1,
                self.options.copied_rows,
            )?;
            self.stats.rows_generated += projection.system.len() as u64;
            if self.stats.rows_generated > self.options.budgets.max_rows {
                return Err(Error::Budget {
                    kind: BudgetKind::Rows,
                    limit: self.options.budgets.max_rows,
                });
            }
            let replaced = designee.map(|i| mapped[i]);
            let mut child_nonbasis = nonbasis.clone();
            if let Some(orig) = replaced {
                child_nonbasis.insert(orig);
            }
            let edge = BranchEdge {
                var: set.var,
                designee,
                mapped: replaced,
            };
            let child = self.node(
                &projection.system,
                lvl + 1,
                &child_nonbasis,
                &child_excluded,
                Some(id),
                Some(edge),
            )?;
            match child {
                SolveOutcome::Sat(model) => {
                    let model = construct_model(model, system, set.var, designee)?;
                    if self.options.full_traversal {
                        first_model.get_or_insert(model);
                    } else {
                        return Ok(SolveOutcome::Sat(model));
                    }
                }
                unsat @ SolveOutcome::Unsat { .. } => return Ok(unsat),
                SolveOutcome::PartialUnsat { level, core } => {
                    if level < lvl {
                        return Ok(SolveOutcome::PartialUnsat { level, core });
                    }
                    kernel.extend(core);
                }
            }
            if apply_exclusion {
                if let Some(orig) = replaced {
                    child_excluded.insert(orig);
                }
            }
        }
        if let Some(model) = first_model {
            return Ok(SolveOutcome::Sat(model));
        }
        if lvl == 0 {
            Ok(SolveOutcome::Unsat {
                core: kernel,
                certificate: None,
            })
        } else {
            Ok(SolveOutcome::PartialUnsat {
                level: lvl - 1,
                core: kernel,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farkas::check_farkas;
    use crate::fmplex::{NodeProgram, Side, TraceOutcome};
    use crate::system::evaluate_all;

    /// x0 bounded below only; x1 boxed between 1 and 5 through two lower
    /// bounds and two uppers.
    fn box2() -> LinearSystem {
        LinearSystem::from_ints(
            2,
            &[(&[-1, -1], -4), (&[0, -2], -2), (&[-2, 1], 1), (&[0, 1], 5)],
        )
    }

    /// `box2` plus a redundant lower bound on x1 whose designation runs
    /// into a local conflict.
    fn box2_redundant() -> LinearSystem {
        LinearSystem::from_ints(
            2,
            &[
                (&[-1, -1], -4),
                (&[0, -2], -2),
                (&[-2, 1], 1),
                (&[0, 1], 5),
                (&[0, -1], 0),
            ],
        )
    }

    /// An unsatisfiable cycle of differences whose refutation needs rows
    /// from two separate branches.
    fn cycle3() -> LinearSystem {
        LinearSystem::from_ints(
            3,
            &[
                (&[0, 0, -1], 0),
                (&[1, -1, -1], 0),
                (&[1, 0, 0], -1),
                (&[-1, 1, 0], -1),
                (&[0, -1, 1], 0),
            ],
        )
    }

    fn model_of(run: SearchRun) -> Assignment {
        match run.outcome.unwrap() {
            SolveOutcome::Sat(model) => model,
            other => panic!("expected a model, got {other:?}"),
        }
    }

    #[test]
    fn finds_a_model_with_each_variant() {
        let s = box2();
        for variant in [Variant::A, Variant::B, Variant::C] {
            let run = solve(
                &s,
                &SolveOptions {
                    variant,
                    ..SolveOptions::default()
                },
            );
            let model = model_of(run);
            assert!(evaluate_all(&model, &s).unwrap());
            assert_eq!(model.get(0), Some(&DeltaRational::from_int(3)));
            assert_eq!(model.get(1), Some(&DeltaRational::from_int(1)));
        }
    }

    #[test]
    fn certifies_a_two_row_contradiction() {
        let s = LinearSystem::from_ints(1, &[(&[-1], -1), (&[1], 0)]);
        for variant in [Variant::A, Variant::B, Variant::C] {
            let run = solve(
                &s,
                &SolveOptions {
                    variant,
                    ..SolveOptions::default()
                },
            );
            match run.outcome.unwrap() {
                SolveOutcome::Unsat { core, certificate } => {
                    assert_eq!(core, [0, 1].into());
                    assert!(check_farkas(&certificate.unwrap(), &s));
                }
                other => panic!("expected unsat, got {other:?}"),
            }
        }
    }

    #[test]
    fn node_budget_stops_the_search() {
        let budgets = Budgets {
            max_nodes: 2,
            ..Budgets::default()
        };
        let run = solve(
            &box2(),
            &SolveOptions {
                budgets,
                ..SolveOptions::default()
            },
        );
        assert!(matches!(
            run.outcome,
            Err(Error::Budget {
                kind: BudgetKind::Nodes,
                limit: 2
            })
        ));
        assert_eq!(
            run.stats.nodes_visited, 3,
            "the third visit tripped the budget"
        );
    }

    #[test]
    fn full_traversal_keeps_the_first_model() {
        let s = box2_redundant();
        let baseline = solve(
            &s,
            &SolveOptions {
                variant: Variant::B,
                ..SolveOptions::default()
            },
        );
        let baseline_nodes = baseline.stats.nodes_visited;
        assert!(evaluate_all(&model_of(baseline), &s).unwrap());

        let run = solve(
            &s,
            &SolveOptions {
                variant: Variant::B,
                full_traversal: true,
                check_rank: true,
                ..SolveOptions::default()
            },
        );
        assert_eq!(run.rank_violations, 0);
        assert!(run.stats.nodes_visited >= baseline_nodes);
        let model = model_of(run);
        assert!(evaluate_all(&model, &s).unwrap());
    }

    #[test]
    fn replay_designee_exclusion() {
        // Designating the redundant bound first runs into a local conflict;
        // the failed designee is then barred from the second branch's
        // upper-bound choice set.
        let s = box2_redundant();
        let script = vec![
            NodeProgram {
                var: 1,
                side: Some(Side::Lower),
                rows: vec![4, 0],
            },
            NodeProgram {
                var: 0,
                side: Some(Side::Upper),
                rows: vec![4, 1],
            },
        ];
        let run = solve(
            &s,
            &SolveOptions {
                variant: Variant::B,
                heuristic: Heuristic::Scripted(script),
                collect_trace: true,
                ..SolveOptions::default()
            },
        );
        assert_eq!(run.stats.nodes_visited, 4);
        assert_eq!(run.stats.rows_generated, 11);
        assert_eq!(run.stats.max_depth, 2);

        let trace = &run.trace;
        assert_eq!(trace.nodes.len(), 4);
        let root = trace.root().unwrap();
        let choice = root.choice.as_ref().unwrap();
        assert_eq!((choice.var, choice.side), (1, Some(Side::Lower)));
        assert_eq!(choice.mapped, vec![4, 0, 1]);
        assert_eq!(root.children, vec![1, 2]);

        // First branch: the designated redundant bound contradicts the
        // other lower bound, a conflict local to the branch.
        let first = trace.node(1);
        assert_eq!(
            first.edge,
            Some(BranchEdge {
                var: 1,
                designee: Some(4),
                mapped: Some(4)
            })
        );
        assert_eq!(
            first.outcome,
            TraceOutcome::PartialUnsat {
                level: 0,
                core: [1, 4].into()
            }
        );
        assert!(!first.is_branching());

        // Second branch: entered with the refuted designee barred, so its
        // upper-bound choice set no longer offers the row standing in for
        // it.
        let second = trace.node(2);
        assert_eq!(second.excluded, [4].into());
        assert_eq!(second.nonbasis, [0].into());
        let choice = second.choice.as_ref().unwrap();
        assert_eq!((choice.var, choice.side), (0, Some(Side::Upper)));
        assert_eq!(choice.designees, vec![0]);
        assert_eq!(choice.mapped, vec![1]);
        assert_eq!(trace.node(3).outcome, TraceOutcome::Sat);

        let model = model_of(run);
        assert_eq!(model.get(0), Some(&DeltaRational::from_int(3)));
        assert_eq!(model.get(1), Some(&DeltaRational::from_int(1)));
        assert!(evaluate_all(&model, &s).unwrap());
    }

    #[test]
    fn replay_backjumping_levels() {
        // Both designations of the x2 bounds fail two levels further down,
        // and each failure's backtrack level sends the search straight back
        // to the root. With designee exclusion disabled the refutation is
        // assembled purely from backtrack levels, so the final answer has a
        // core but no single-combination certificate.
        let s = cycle3();
        let script = vec![
            NodeProgram {
                var: 2,
                side: Some(Side::Lower),
                rows: vec![0, 1],
            },
            NodeProgram {
                var: 1,
                side: Some(Side::Lower),
                rows: vec![1],
            },
            NodeProgram {
                var: 1,
                side: Some(Side::Lower),
                rows: vec![4],
            },
            NodeProgram {
                var: 0,
                side: Some(Side::Lower),
                rows: vec![0],
            },
        ];
        let run = solve(
            &s,
            &SolveOptions {
                variant: Variant::C,
                heuristic: Heuristic::Scripted(script),
                ignore_exclusion: true,
                collect_trace: true,
                ..SolveOptions::default()
            },
        );
        match run.outcome.unwrap() {
            SolveOutcome::Unsat { core, certificate } => {
                assert_eq!(core, [0, 1, 2, 3, 4].into());
                assert!(
                    certificate.is_none(),
                    "assembled refutations carry no certificate"
                );
            }
            other => panic!("expected unsat, got {other:?}"),
        }
        assert_eq!(run.stats.nodes_visited, 6);
        assert_eq!(run.stats.rows_generated, 16);
        assert_eq!(run.stats.max_depth, 3);

        let trace = &run.trace;
        let root = trace.root().unwrap();
        assert_eq!(root.children, vec![1, 3], "exactly two level-1 branches");

        // First branch: designating row 0 leads to a conflict at depth 2
        // whose backtrack level is 1, so the jump target is level 0.
        let first = trace.node(1);
        assert_eq!(
            first.edge,
            Some(BranchEdge {
                var: 2,
                designee: Some(0),
                mapped: Some(0)
            })
        );
        assert_eq!(
            first.outcome,
            TraceOutcome::PartialUnsat {
                level: 0,
                core: [0, 1, 3].into()
            }
        );
        let leaf = trace.node(2);
        assert_eq!(leaf.lvl, 2);
        assert_eq!(leaf.outcome, first.outcome);

        // Second branch: the conflict shows up at depth 3 alongside a
        // deeper one; the smaller backtrack level wins and again jumps to
        // the root.
        let second = trace.node(3);
        assert_eq!(
            second.edge,
            Some(BranchEdge {
                var: 2,
                designee: Some(1),
                mapped: Some(1)
            })
        );
        assert_eq!(
            second.outcome,
            TraceOutcome::PartialUnsat {
                level: 0,
                core: [0, 1, 2, 4].into()
            }
        );
        assert_eq!(trace.node(4).nonbasis, [1, 4].into());
        let leaf = trace.node(5);
        assert_eq!(leaf.lvl, 3);
        assert_eq!(leaf.nonbasis, [0, 1, 4].into());
        assert_eq!(
            leaf.outcome,
            TraceOutcome::PartialUnsat {
                level: 0,
                core: [0, 1, 2, 4].into()
            }
        );

        // The same system with exclusion active finds a nonnegative
        // refutation instead: the third designation is barred, and the
        // remaining one pairs into a global conflict.
        let script = vec![
            NodeProgram {
                var: 2,
                side: Some(Side::Lower),
                rows: vec![0, 1],
            },
            NodeProgram {
                var: 1,
                side: Some(Side::Lower),
                rows: vec![1],
            },
            NodeProgram {
                var: 1,
                side: Some(Side::Lower),
                rows: vec![4],
            },
            NodeProgram {
                var: 0,
                side: Some(Side::Lower),
                rows: vec![3],
            },
        ];
        let run = solve(
            &s,
            &SolveOptions {
                variant: Variant::C,
                heuristic: Heuristic::Scripted(script),
                collect_trace: true,
                ..SolveOptions::default()
            },
        );
        match run.outcome.unwrap() {
            SolveOutcome::Unsat { certificate, .. } => {
                assert!(check_farkas(&certificate.unwrap(), &s));
            }
            other => panic!("expected unsat, got {other:?}"),
        }
    }
}
