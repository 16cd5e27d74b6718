//! Fourier–Motzkin variable elimination.
//!
//! Eliminating `x_j` pairs every lower bound with every upper bound and adds
//! the scaled sums, so one step turns `|I⁻| + |I⁺|` rows into `|I⁻|·|I⁺|`
//! rows (plus untouched copies). Every multiplier is positive, so each
//! produced row is a conical combination of input rows and any trivially
//! false row read off at the end is a ready-made Farkas certificate.

use crate::error::{Error, Result};
use crate::farkas::FarkasCertificate;
use crate::outcome::{Budgets, SolveOutcome};
use crate::rational::{rat, DeltaRational, Rational};
use crate::simplex::simplex_solve;
use crate::system::{bound_rewrite, Assignment, Constraint, LinearSystem, RowCombination};
use num_traits::Zero;
use std::collections::BTreeSet;

/// One elimination step of a [`FmTrace`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmStep {
    pub var: usize,
    pub rows_before: usize,
    pub rows_after: usize,
}

/// Instrumentation of an elimination run: which variables were projected out
/// and how many rows each step produced.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FmTrace {
    pub steps: Vec<FmStep>,
    /// Total rows written by all steps; equals the sum of `rows_after`.
    pub rows_generated: u64,
}

impl FmTrace {
    fn record(&mut self, var: usize, rows_before: usize, rows_after: usize) {
        self.steps.push(FmStep {
            var,
            rows_before,
            rows_after,
        });
        self.rows_generated += rows_after as u64;
    }
}

/// The elimination matrix of one step on `system`: one combination per pair
/// `(ℓ, u) ∈ I⁻ × I⁺` (in ascending ℓ-major order) scaled to cancel column
/// `j`, then one unit row per `i ∈ I⁰`. Applying these combinations to the
/// rows of `system` yields exactly [`fm_eliminate`]'s rows.
pub fn fm_step_matrix(system: &LinearSystem, j: usize) -> Vec<RowCombination> {
    let sets = system.index_sets(j);
    let mut out = Vec::with_capacity(sets.lower.len() * sets.upper.len() + sets.zero.len());
    for &l in &sets.lower {
        let cl = -(rat(1) / &system.row(l).coeffs[j]);
        for &u in &sets.upper {
            let cu = rat(1) / &system.row(u).coeffs[j];
            let mut f = RowCombination::new();
            f.add_entry(l, cl.clone());
            f.add_entry(u, cu);
            out.push(f);
        }
    }
    for &i in &sets.zero {
        out.push(RowCombination::unit(i));
    }
    out
}

/// Eliminate `x_j` from `system` in one Fourier–Motzkin step. The result has
/// `|I⁻|·|I⁺| + |I⁰|` rows, an all-zero column `j`, and provenance composed
/// onto the original rows. Combined rows take the larger of their parents'
/// backtrack levels (all multipliers are positive); copies keep theirs.
pub fn fm_eliminate(system: &LinearSystem, j: usize) -> LinearSystem {
    let step = fm_step_matrix(system, j);
    let mut rows = Vec::with_capacity(step.len());
    let mut provenance = Vec::with_capacity(step.len());
    let mut btlvl = Vec::with_capacity(step.len());
    for f in &step {
        rows.push(f.combine_rows(system.rows(), system.nvars()));
        let mut prov = RowCombination::new();
        let mut lvl = 0;
        for (i, c) in f.iter() {
            prov.add_scaled(system.provenance(i), c);
            lvl = lvl.max(system.btlvl(i));
        }
        provenance.push(prov);
        btlvl.push(lvl);
    }
    LinearSystem::derived(
        system.nvars(),
        system.origin_count(),
        rows,
        provenance,
        btlvl,
    )
}

/// Eliminate `vars` in order, tracing row growth.
pub fn fm_qe(system: &LinearSystem, vars: &[usize]) -> (LinearSystem, FmTrace) {
    let mut current = system.clone();
    let mut trace = FmTrace::default();
    for &j in vars {
        let next = fm_eliminate(&current, j);
        trace.record(j, current.len(), next.len());
        current = next;
    }
    (current, trace)
}

/// Decide `system` by eliminating every constrained variable, then reading
/// the constant rows. Variables are eliminated cheapest-first (smallest
/// `|I⁻|·|I⁺|`, ties by index). SAT models are rebuilt by back-substitution
/// in reverse elimination order; UNSAT returns the provenance of the first
/// trivially false row, which is always a valid Farkas certificate here.
///
/// `trace` is filled in even when the row budget aborts the run.
pub fn fm_solve(
    system: &LinearSystem,
    budgets: &Budgets,
    trace: &mut FmTrace,
) -> Result<SolveOutcome> {
    let mut stack: Vec<(usize, LinearSystem)> = Vec::new();
    let mut current = system.clone();
    loop {
        let next_var = (0..current.nvars())
            .filter(|&j| !current.column_is_zero(j))
            .min_by_key(|&j| {
                let sets = current.index_sets(j);
                (sets.lower.len() * sets.upper.len(), j)
            });
        let Some(j) = next_var else { break };
        let next = fm_eliminate(&current, j);
        trace.record(j, current.len(), next.len());
        if trace.rows_generated > budgets.max_rows {
            return Err(Error::Budget {
                kind: crate::error::BudgetKind::Rows,
                limit: budgets.max_rows,
            });
        }
        stack.push((j, current));
        current = next;
    }
    // Every column is zero: rows are `0 ≤ b`.
    for i in 0..current.len() {
        if current.row(i).bound < DeltaRational::zero() {
            let cert = FarkasCertificate::new(current.provenance(i).clone());
            debug_assert!(crate::farkas::check_farkas(&cert, system));
            return Ok(SolveOutcome::Unsat {
                core: cert.core(),
                certificate: Some(cert),
            });
        }
    }
    let mut alpha = Assignment::new();
    while let Some((j, sys)) = stack.pop() {
        alpha.set(j, back_substituted_value(&sys, j, &alpha));
    }
    for var in 0..system.nvars() {
        if alpha.get(var).is_none() {
            alpha.set(var, DeltaRational::zero());
        }
    }
    debug_assert!(crate::system::evaluate_all(&alpha, system).unwrap_or(false));
    Ok(SolveOutcome::Sat(alpha))
}

/// A value for `x_j` between all lower and all upper bounds of `sys`
/// evaluated at `alpha` (the projection property guarantees the gap is
/// nonempty): the largest lower bound if one exists, else the smallest upper
/// bound, else 0.
pub(crate) fn back_substituted_value(
    sys: &LinearSystem,
    j: usize,
    alpha: &Assignment,
) -> DeltaRational {
    let sets = sys.index_sets(j);
    if !sets.lower.is_empty() {
        sets.lower
            .iter()
            .map(|&i| {
                bound_rewrite(sys, i, j)
                    .expect("indexed as a bound")
                    .eval(alpha)
            })
            .max()
            .unwrap()
    } else if !sets.upper.is_empty() {
        sets.upper
            .iter()
            .map(|&i| {
                bound_rewrite(sys, i, j)
                    .expect("indexed as a bound")
                    .eval(alpha)
            })
            .min()
            .unwrap()
    } else {
        DeltaRational::zero()
    }
}

/// Redundancy of row `i` of one elimination step by construction: true iff
/// the step matrix admits nonnegative multipliers `r` with `r_i = 0` whose
/// combination of the *other* step rows reproduces row `i`'s multipliers
/// exactly. Decided as an exact feasibility problem via the simplex solver.
pub fn is_redundant_by_construction(i: usize, step: &[RowCombination]) -> bool {
    let m = step.len();
    if m <= 1 {
        return false;
    }
    // Variables: r_0 … r_{m-1}. Constraints: r ≥ 0, r_i = 0, and for every
    // source row k the equation Σ_w r_w·step[w][k] = step[i][k].
    let mut rows: Vec<Constraint> = Vec::new();
    for w in 0..m {
        let mut coeffs = vec![Rational::zero(); m];
        coeffs[w] = rat(-1);
        rows.push(Constraint::new(coeffs, DeltaRational::zero()));
    }
    let mut pin = vec![Rational::zero(); m];
    pin[i] = rat(1);
    rows.push(Constraint::new(pin, DeltaRational::zero()));
    let keys: BTreeSet<usize> = step.iter().flat_map(|f| f.support()).collect();
    for k in keys {
        let coeffs: Vec<Rational> = step.iter().map(|f| f.get(k)).collect();
        let target = step[i].get(k);
        let neg: Vec<Rational> = coeffs.iter().map(|c| -c).collect();
        rows.push(Constraint::new(
            coeffs,
            DeltaRational::from_real(target.clone()),
        ));
        rows.push(Constraint::new(neg, DeltaRational::from_real(-target)));
    }
    let feasibility = LinearSystem::new(m, rows);
    simplex_solve(&feasibility).0.is_sat()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farkas::check_farkas;
    use crate::system::evaluate_all;

    fn box_system() -> LinearSystem {
        LinearSystem::from_ints(
            2,
            &[(&[-1, -1], -4), (&[0, -2], -2), (&[-2, 1], 1), (&[0, 1], 5)],
        )
    }

    fn three_var_unsat() -> LinearSystem {
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

    #[test]
    fn eliminate_pairs_lowers_with_uppers() {
        let sys = box_system();
        let out = fm_eliminate(&sys, 1);
        let expected = LinearSystem::from_ints(
            2,
            &[(&[-3, 0], -3), (&[-1, 0], 1), (&[-2, 0], 0), (&[0, 0], 4)],
        );
        assert_eq!(out.rows(), expected.rows());
        assert!(out.column_is_zero(1));
        assert!(out.provenance_consistent(&sys));
    }

    #[test]
    fn eliminate_row_count_formula() {
        let sys = three_var_unsat();
        for j in 0..3 {
            let sets = sys.index_sets(j);
            let out = fm_eliminate(&sys, j);
            assert_eq!(
                out.len(),
                sets.lower.len() * sets.upper.len() + sets.zero.len()
            );
        }
    }

    #[test]
    fn eliminate_without_uppers_keeps_only_zero_rows() {
        let sys = LinearSystem::from_ints(2, &[(&[-1, 0], 0), (&[0, 1], 1)]);
        let out = fm_eliminate(&sys, 0);
        assert_eq!(out.rows(), &[Constraint::from_ints(&[0, 1], 1)]);

        let single = LinearSystem::from_ints(1, &[(&[1], 3)]);
        assert!(fm_eliminate(&single, 0).is_empty());
    }

    #[test]
    fn qe_iterates_and_traces() {
        let sys = box_system();
        let (finalized, trace) = fm_qe(&sys, &[1, 0]);
        assert!(finalized.matrix_is_zero());
        // A nonempty solution set leaves only rows 0 ≤ c with c ≥ 0.
        assert!(finalized
            .rows()
            .iter()
            .all(|r| r.bound >= DeltaRational::zero()));
        assert_eq!(trace.steps.len(), 2);
        assert_eq!(trace.steps[0].var, 1);
        assert_eq!(
            trace.rows_generated,
            trace.steps.iter().map(|s| s.rows_after as u64).sum::<u64>()
        );

        let (unchanged, trace) = fm_qe(&sys, &[]);
        assert_eq!(unchanged.rows(), sys.rows());
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn qe_surfaces_bound_gaps() {
        let sys = LinearSystem::from_ints(1, &[(&[1], 0), (&[-1], -1)]);
        let (finalized, _) = fm_qe(&sys, &[0]);
        assert!(finalized
            .rows()
            .iter()
            .any(|r| r.is_zero_row() && r.bound < DeltaRational::zero()));
    }

    #[test]
    fn solve_finds_model_for_box() {
        let sys = box_system();
        let mut trace = FmTrace::default();
        let outcome = fm_solve(&sys, &Budgets::default(), &mut trace).unwrap();
        let SolveOutcome::Sat(alpha) = outcome else {
            panic!("expected sat")
        };
        assert!(evaluate_all(&alpha, &sys).unwrap());
        assert!(trace.rows_generated > 0);
    }

    #[test]
    fn solve_certifies_direct_contradiction() {
        let sys = LinearSystem::from_ints(1, &[(&[1], 0), (&[-1], -1)]);
        let mut trace = FmTrace::default();
        let outcome = fm_solve(&sys, &Budgets::default(), &mut trace).unwrap();
        let SolveOutcome::Unsat { core, certificate } = outcome else {
            panic!()
        };
        assert_eq!(core, BTreeSet::from([0, 1]));
        let cert = certificate.unwrap();
        assert_eq!(cert.multipliers.get(0), rat(1));
        assert_eq!(cert.multipliers.get(1), rat(1));
        assert!(check_farkas(&cert, &sys));
    }

    #[test]
    fn solve_certifies_three_var_system() {
        let sys = three_var_unsat();
        let mut trace = FmTrace::default();
        let outcome = fm_solve(&sys, &Budgets::default(), &mut trace).unwrap();
        let SolveOutcome::Unsat { certificate, .. } = outcome else {
            panic!()
        };
        assert!(check_farkas(&certificate.unwrap(), &sys));
    }

    #[test]
    fn solve_respects_row_budget() {
        let sys = box_system();
        let budgets = Budgets {
            max_rows: 2,
            ..Budgets::default()
        };
        let mut trace = FmTrace::default();
        let err = fm_solve(&sys, &budgets, &mut trace).unwrap_err();
        assert!(matches!(err, Error::Budget { limit: 2, .. }));
        assert!(!trace.steps.is_empty());
    }

    #[test]
    fn solve_handles_strict_rows() {
        // x < 1 ∧ x ≥ 1 unsat; x < 1 ∧ x ≥ 0 sat with a strict-respecting model.
        let unsat = LinearSystem::new(
            1,
            vec![
                Constraint::new(vec![rat(1)], DeltaRational::strict(rat(1))),
                Constraint::from_ints(&[-1], -1),
            ],
        );
        let mut trace = FmTrace::default();
        assert!(fm_solve(&unsat, &Budgets::default(), &mut trace)
            .unwrap()
            .is_unsat());

        let sat = LinearSystem::new(
            1,
            vec![
                Constraint::new(vec![rat(1)], DeltaRational::strict(rat(1))),
                Constraint::from_ints(&[-1], 0),
            ],
        );
        let mut trace = FmTrace::default();
        let outcome = fm_solve(&sat, &Budgets::default(), &mut trace).unwrap();
        let SolveOutcome::Sat(alpha) = outcome else {
            panic!()
        };
        assert!(evaluate_all(&alpha, &sat).unwrap());
    }

    #[test]
    fn redundancy_check_accepts_twins_and_conical_rows() {
        // Two identical step rows: the twin covers row 1.
        let twin = vec![
            RowCombination::from_entries(&[(0, rat(1)), (2, rat(1))]),
            RowCombination::from_entries(&[(0, rat(1)), (2, rat(1))]),
        ];
        assert!(is_redundant_by_construction(1, &twin));
        assert!(is_redundant_by_construction(0, &twin));

        // Row 2's multipliers are the sum of rows 0 and 1.
        let conical = vec![
            RowCombination::unit(0),
            RowCombination::unit(1),
            RowCombination::from_entries(&[(0, rat(1)), (1, rat(1))]),
        ];
        assert!(is_redundant_by_construction(2, &conical));
        assert!(!is_redundant_by_construction(0, &conical));
    }

    #[test]
    fn redundancy_check_rejects_singletons_and_mixed_signs() {
        let single = vec![RowCombination::from_entries(&[(0, rat(1)), (1, rat(1))])];
        assert!(!is_redundant_by_construction(0, &single));

        // An FM step where two pair-rows differ: neither reproduces the other
        // with nonnegative multipliers.
        let sys = LinearSystem::from_ints(1, &[(&[1], 1), (&[1], 2), (&[-1], 0)]);
        let step = fm_step_matrix(&sys, 0);
        assert_eq!(step.len(), 2);
        assert!(!is_redundant_by_construction(0, &step));
        assert!(!is_redundant_by_construction(1, &step));
    }

    #[test]
    fn step_matrix_matches_eliminate() {
        let sys = three_var_unsat();
        let step = fm_step_matrix(&sys, 2);
        let out = fm_eliminate(&sys, 2);
        assert_eq!(step.len(), out.len());
        for (f, row) in step.iter().zip(out.rows()) {
            assert_eq!(&f.combine_rows(sys.rows(), 3), row);
        }
    }
}
