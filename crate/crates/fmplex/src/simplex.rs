//! A general simplex over the rows of `Âx ≤ b̂`.
//!
//! The tableau designates a maximal independent set N of rows as tight; the
//! candidate assignment solves `Â[N]x = b̂[N]` with free variables at 0.
//! Every row is kept expressed as an exact combination of the tight rows, so
//! a violated row either yields a pivot (swap a tight row out) or, when all
//! its multipliers are nonpositive, a Farkas certificate of
//! unsatisfiability. Row selection follows minimum column length with the
//! least-index rule on ties, falling back to pure least-index after a stall
//! so that termination is guaranteed.

use crate::error::{Error, Result};
use crate::farkas::FarkasCertificate;
use crate::linalg::{solve_tight, InsertOutcome, RowBasis};
use crate::outcome::SolveOutcome;
use crate::rational::{rat, DeltaRational, Rational};
use crate::system::{Assignment, LinearSystem, RowCombination};
use num_traits::{Signed, Zero};
use std::collections::BTreeSet;

#[derive(Debug, Clone)]
pub struct Tableau {
    system: LinearSystem,
    nonbasis: BTreeSet<usize>,
    /// For every row `v`, multipliers over the tight rows with
    /// `a_v = Σ_k coeffs[v][k] · a_k`. Tight rows hold their own unit vector.
    coeffs: Vec<RowCombination>,
}

/// Choose a maximal independent tight set greedily by row index and express
/// every remaining row over it.
pub fn build_tableau(system: &LinearSystem) -> Tableau {
    let mut basis = RowBasis::new(system.nvars());
    let mut coeffs = vec![RowCombination::new(); system.len()];
    let mut nonbasis = BTreeSet::new();
    for (i, row) in system.rows().iter().enumerate() {
        match basis.insert(i, &row.coeffs) {
            InsertOutcome::Independent => {
                nonbasis.insert(i);
                coeffs[i] = RowCombination::unit(i);
            }
            InsertOutcome::Dependent(combo) => coeffs[i] = combo,
        }
    }
    Tableau {
        system: system.clone(),
        nonbasis,
        coeffs,
    }
}

impl Tableau {
    pub fn nonbasis(&self) -> &BTreeSet<usize> {
        &self.nonbasis
    }

    /// Multipliers expressing row `v` over the tight rows.
    pub fn coefficients(&self, v: usize) -> &RowCombination {
        &self.coeffs[v]
    }

    /// `a_v·α - b_v` at the candidate assignment; positive means violated.
    /// Because `a_v` is a combination of tight rows, this needs only the
    /// tight bounds: `Σ_k coeffs[v][k]·b_k - b_v`.
    pub fn violation(&self, v: usize) -> DeltaRational {
        let mut acc = DeltaRational::zero();
        for (k, c) in self.coeffs[v].iter() {
            acc.add_scaled(&self.system.row(k).bound, c);
        }
        acc -= self.system.row(v).bound.clone();
        acc
    }

    /// The assignment obtained by tightening the rows of N, free variables
    /// at 0.
    pub fn candidate_assignment(&self) -> Assignment {
        let tight: Vec<(Vec<Rational>, DeltaRational)> = self
            .nonbasis
            .iter()
            .map(|&k| {
                (
                    self.system.row(k).coeffs.clone(),
                    self.system.row(k).bound.clone(),
                )
            })
            .collect();
        let values = solve_tight(self.system.nvars(), &tight);
        let mut alpha = Assignment::new();
        for (var, v) in values.into_iter().enumerate() {
            alpha.set(var, v);
        }
        alpha
    }

    /// Swap `leaving` out of the tight set for `entering`. Fails if the swap
    /// is malformed or would leave the tight rows dependent.
    pub fn pivot(&mut self, leaving: usize, entering: usize) -> Result<()> {
        if self.nonbasis.contains(&entering) {
            return Err(Error::InvalidPivot {
                leaving,
                entering,
                reason: "entering row is already tight".into(),
            });
        }
        if !self.nonbasis.contains(&leaving) {
            return Err(Error::InvalidPivot {
                leaving,
                entering,
                reason: "leaving row is not tight".into(),
            });
        }
        let t = self.coeffs[entering].clone();
        let p = t.get(leaving);
        if p.is_zero() {
            return Err(Error::InvalidPivot {
                leaving,
                entering,
                reason: "swap would leave the tight rows dependent".into(),
            });
        }
        // Replacing a_leaving by its expression over N' rewrites every row w
        // as T[w] + (T[w][leaving]/p)·(e_entering - t); the leaving entry
        // cancels, and `entering` itself lands on its unit vector.
        let mut dir = RowCombination::unit(entering);
        dir.add_scaled(&t, &-rat(1));
        for w in 0..self.coeffs.len() {
            let c = self.coeffs[w].get(leaving);
            if c.is_zero() {
                continue;
            }
            let factor = c / &p;
            self.coeffs[w].add_scaled(&dir, &factor);
        }
        self.nonbasis.remove(&leaving);
        self.nonbasis.insert(entering);
        Ok(())
    }

    /// Every multiplier row must reproduce its constraint's coefficients
    /// from the tight rows.
    pub fn coefficients_consistent(&self) -> bool {
        (0..self.system.len()).all(|v| {
            let combined = self.coeffs[v].combine_rows(self.system.rows(), self.system.nvars());
            combined.coeffs == self.system.row(v).coeffs
                && self.coeffs[v].support().all(|k| self.nonbasis.contains(&k))
        })
    }
}

/// Decide `system` by pivoting. Returns the outcome and the pivot count.
/// Unsatisfiable outcomes always carry a Farkas certificate.
pub fn simplex_solve(system: &LinearSystem) -> (SolveOutcome, u64) {
    let mut tableau = build_tableau(system);
    let mut pivots: u64 = 0;
    // After this many pivots assume the size-based heuristic is cycling and
    // switch to the least-index rule, which terminates.
    let stall_limit = 64 + 4 * (system.len() as u64) * (system.nvars() as u64 + 1);
    loop {
        let violated: Vec<usize> = (0..system.len())
            .filter(|&v| {
                !tableau.nonbasis.contains(&v) && tableau.violation(v) > DeltaRational::zero()
            })
            .collect();
        if violated.is_empty() {
            let alpha = tableau.candidate_assignment();
            debug_assert!(crate::system::evaluate_all(&alpha, system).unwrap_or(false));
            return (SolveOutcome::Sat(alpha), pivots);
        }
        // Any violated row with no positive multiplier certifies
        // unsatisfiability outright.
        for &v in &violated {
            if tableau.coeffs[v].iter().all(|(_, c)| !c.is_positive()) {
                let mut multipliers = RowCombination::unit(v);
                multipliers.add_scaled(&tableau.coeffs[v], &-rat(1));
                let cert = FarkasCertificate::new(multipliers);
                debug_assert!(crate::farkas::check_farkas(&cert, system));
                return (
                    SolveOutcome::Unsat {
                        core: cert.core(),
                        certificate: Some(cert),
                    },
                    pivots,
                );
            }
        }
        let entering = if pivots < stall_limit {
            *violated
                .iter()
                .min_by_key(|&&v| (tableau.coeffs[v].len(), v))
                .unwrap()
        } else {
            violated[0]
        };
        let leaving = tableau.coeffs[entering]
            .iter()
            .filter(|(_, c)| c.is_positive())
            .map(|(k, _)| k)
            .min()
            .expect("a violated row without positive multipliers was handled above");
        tableau
            .pivot(leaving, entering)
            .expect("pivot on a nonzero multiplier cannot fail");
        pivots += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farkas::check_farkas;
    use crate::rational::ratio;
    use crate::system::{evaluate_all, Constraint};

    fn box_system() -> LinearSystem {
        LinearSystem::from_ints(
            2,
            &[(&[-1, -1], -4), (&[0, -2], -2), (&[-2, 1], 1), (&[0, 1], 5)],
        )
    }

    #[test]
    fn build_tableau_picks_greedy_independent_rows() {
        let sys = box_system();
        let t = build_tableau(&sys);
        assert_eq!(t.nonbasis(), &BTreeSet::from([0, 1]));
        assert_eq!(t.coefficients(2).get(0), rat(2));
        assert_eq!(t.coefficients(2).get(1), ratio(-3, 2));
        assert!(t.coefficients_consistent());
    }

    #[test]
    fn candidate_assignment_tightens_nonbasis() {
        let sys = LinearSystem::from_ints(1, &[(&[1], 3)]);
        let t = build_tableau(&sys);
        assert_eq!(t.nonbasis(), &BTreeSet::from([0]));
        let alpha = t.candidate_assignment();
        assert_eq!(alpha.get(0), Some(&DeltaRational::from_int(3)));
    }

    #[test]
    fn pivot_swaps_and_preserves_consistency() {
        let sys = box_system();
        let mut t = build_tableau(&sys);
        t.pivot(1, 2).unwrap();
        assert_eq!(t.nonbasis(), &BTreeSet::from([0, 2]));
        assert!(t.coefficients_consistent());
        // Row 1 is now expressed over {0, 2}.
        assert!(t.coefficients(1).get(1).is_zero());
    }

    #[test]
    fn pivot_rejects_malformed_swaps() {
        let sys = box_system();
        let mut t = build_tableau(&sys);
        // Entering a row that is already tight (covers leaving == entering).
        assert!(matches!(t.pivot(0, 0), Err(Error::InvalidPivot { .. })));
        assert!(matches!(t.pivot(2, 3), Err(Error::InvalidPivot { .. })));
    }

    #[test]
    fn pivot_rejects_dependence() {
        // Rows (1,0), (0,1), (1,0): swapping row 1 out for row 2 would make
        // the tight set parallel.
        let sys = LinearSystem::from_ints(2, &[(&[1, 0], 0), (&[0, 1], 0), (&[1, 0], 5)]);
        let mut t = build_tableau(&sys);
        assert!(matches!(t.pivot(1, 2), Err(Error::InvalidPivot { .. })));
    }

    #[test]
    fn solves_satisfiable_box() {
        let sys = box_system();
        let (outcome, _) = simplex_solve(&sys);
        let SolveOutcome::Sat(alpha) = outcome else {
            panic!("expected sat")
        };
        assert!(evaluate_all(&alpha, &sys).unwrap());
    }

    #[test]
    fn certifies_unsatisfiable_three_var_system() {
        let sys = LinearSystem::from_ints(
            3,
            &[
                (&[0, 0, -1], 0),
                (&[1, -1, -1], 0),
                (&[1, 0, 0], -1),
                (&[-1, 1, 0], -1),
                (&[0, -1, 1], 0),
            ],
        );
        let (outcome, _) = simplex_solve(&sys);
        let SolveOutcome::Unsat { core, certificate } = outcome else {
            panic!("expected unsat")
        };
        let cert = certificate.expect("simplex always certifies");
        assert!(check_farkas(&cert, &sys));
        assert_eq!(cert.core(), core);
    }

    #[test]
    fn trivially_false_row_is_certified() {
        let sys = LinearSystem::from_ints(2, &[(&[0, 0], -1), (&[1, 0], 3)]);
        let (outcome, pivots) = simplex_solve(&sys);
        let SolveOutcome::Unsat { core, certificate } = outcome else {
            panic!()
        };
        assert_eq!(core, BTreeSet::from([0]));
        assert!(check_farkas(&certificate.unwrap(), &sys));
        assert_eq!(pivots, 0);
    }

    #[test]
    fn strict_and_weak_bounds_interact_exactly() {
        // x ≤ 1 ∧ x > 1 is unsat; x ≤ 1 ∧ x ≥ 1 is sat.
        let strict = LinearSystem::new(
            1,
            vec![
                Constraint::from_ints(&[1], 1),
                Constraint::new(vec![rat(-1)], DeltaRational::strict(rat(-1))),
            ],
        );
        let (outcome, _) = simplex_solve(&strict);
        assert!(outcome.is_unsat());

        let weak = LinearSystem::from_ints(1, &[(&[1], 1), (&[-1], -1)]);
        let (outcome, _) = simplex_solve(&weak);
        let SolveOutcome::Sat(alpha) = outcome else {
            panic!()
        };
        assert_eq!(alpha.get(0), Some(&DeltaRational::from_int(1)));
    }

    #[test]
    fn empty_and_unconstrained_systems_are_sat() {
        let empty = LinearSystem::new(2, vec![]);
        let (outcome, _) = simplex_solve(&empty);
        assert!(outcome.is_sat());

        let zero_rows = LinearSystem::from_ints(2, &[(&[0, 0], 0), (&[0, 0], 3)]);
        let (outcome, _) = simplex_solve(&zero_rows);
        assert!(outcome.is_sat());
    }

    #[test]
    fn degenerate_ties_terminate() {
        // Many tight rows through the origin plus an infeasible cap.
        let sys = LinearSystem::from_ints(
            2,
            &[
                (&[1, 1], 0),
                (&[-1, -1], 0),
                (&[1, -1], 0),
                (&[-1, 1], 0),
                (&[1, 0], -1),
                (&[-1, 0], 0),
            ],
        );
        let (outcome, _) = simplex_solve(&sys);
        let SolveOutcome::Unsat { certificate, .. } = outcome else {
            panic!("x ≤ -1 with x ≥ 0 must be unsat")
        };
        assert!(check_farkas(&certificate.unwrap(), &sys));
    }
}
