//! From a parsed problem to a verdict: normalization, equality substitution,
//! backend dispatch, and model/core post-processing.
//!
//! Backends operate on systems of weak rows `a·x ≤ b` over delta-rationals.
//! This module owns everything around that: source atoms are normalized,
//! equalities are eliminated by substitution up front, satisfying assignments
//! are extended back over the eliminated variables and stripped of their
//! infinitesimal parts, and unsat cores are translated from row indices of
//! the reduced system back to the indices of the atoms the user wrote.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::fm::{fm_solve, FmTrace};
use crate::fmplex::{self, Heuristic, SolveOptions, Variant};
use crate::linalg::{gaussian_eliminate, GaussOutcome, TaggedRow};
use crate::outcome::{Budgets, SolveOutcome, Stats};
use crate::rational::DeltaRational;
use crate::simplex::simplex_solve;
use crate::smtlib::Problem;
use crate::system::{instantiate_delta, normalize, LinearSystem, NormalizedAtom};

/// Which decision procedure runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    Fm,
    FmplexA,
    FmplexB,
    FmplexC,
    Simplex,
}

impl BackendKind {
    pub const ALL: [BackendKind; 5] = [
        BackendKind::Fm,
        BackendKind::FmplexA,
        BackendKind::FmplexB,
        BackendKind::FmplexC,
        BackendKind::Simplex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::Fm => "fm",
            BackendKind::FmplexA => "fmplex-a",
            BackendKind::FmplexB => "fmplex-b",
            BackendKind::FmplexC => "fmplex-c",
            BackendKind::Simplex => "simplex",
        }
    }

    pub fn from_name(name: &str) -> Option<BackendKind> {
        BackendKind::ALL.into_iter().find(|b| b.name() == name)
    }

    /// The search variant, for the three backends that are searches.
    pub fn variant(self) -> Option<Variant> {
        match self {
            BackendKind::FmplexA => Some(Variant::A),
            BackendKind::FmplexB => Some(Variant::B),
            BackendKind::FmplexC => Some(Variant::C),
            _ => None,
        }
    }

    /// Whether the branching heuristic has any effect on this backend.
    pub fn uses_heuristic(self) -> bool {
        self.variant().is_some()
    }
}

/// Which branching heuristic the search variants use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeuristicKind {
    MinFanout,
    MinColumnLength,
    Random,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 3] = [
        HeuristicKind::MinFanout,
        HeuristicKind::MinColumnLength,
        HeuristicKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HeuristicKind::MinFanout => "mfo",
            HeuristicKind::MinColumnLength => "mcl",
            HeuristicKind::Random => "rand",
        }
    }

    pub fn from_name(name: &str) -> Option<HeuristicKind> {
        HeuristicKind::ALL.into_iter().find(|h| h.name() == name)
    }

    pub fn to_heuristic(self, seed: u64) -> Heuristic {
        match self {
            HeuristicKind::MinFanout => Heuristic::MinFanout,
            HeuristicKind::MinColumnLength => Heuristic::MinColumnLength,
            HeuristicKind::Random => Heuristic::Random(seed),
        }
    }

    /// Whether the seed changes this heuristic's decisions.
    pub fn uses_seed(self) -> bool {
        matches!(self, HeuristicKind::Random)
    }
}

/// A verdict (or the error that prevented one) plus the run's counters.
#[derive(Debug)]
pub struct RunOutput {
    pub outcome: Result<SolveOutcome>,
    pub stats: Stats,
}

/// Runs one backend on an already-normalized system.
pub fn decide(
    system: &LinearSystem,
    backend: BackendKind,
    heuristic: HeuristicKind,
    seed: u64,
    budgets: &Budgets,
) -> RunOutput {
    match backend {
        BackendKind::Fm => {
            let mut trace = FmTrace::default();
            let outcome = fm_solve(system, budgets, &mut trace);
            let stats = Stats {
                rows_generated: trace.rows_generated,
                ..Stats::default()
            };
            RunOutput { outcome, stats }
        }
        BackendKind::Simplex => {
            let (outcome, pivots) = simplex_solve(system);
            let stats = Stats {
                pivots,
                ..Stats::default()
            };
            RunOutput {
                outcome: Ok(outcome),
                stats,
            }
        }
        BackendKind::FmplexA | BackendKind::FmplexB | BackendKind::FmplexC => {
            let options = SolveOptions {
                variant: backend.variant().expect("search backend"),
                heuristic: heuristic.to_heuristic(seed),
                budgets: *budgets,
                ..SolveOptions::default()
            };
            let run = fmplex::solve(system, &options);
            RunOutput {
                outcome: run.outcome,
                stats: run.stats,
            }
        }
    }
}

/// All atoms of a problem as normalized weak rows, equalities expanded into
/// their two one-sided rows. Suitable for evaluating a candidate model or
/// instantiating its infinitesimal part; row indices do NOT correspond to
/// atom indices (equalities occupy two slots).
pub fn normalized_system(problem: &Problem) -> LinearSystem {
    let mut rows = Vec::with_capacity(problem.atoms.len());
    for atom in &problem.atoms {
        match normalize(atom.rel, atom.coeffs.clone(), atom.rhs.clone()) {
            NormalizedAtom::Inequality(c) => rows.push(c),
            NormalizedAtom::Equality(c) => {
                rows.push(c.clone());
                rows.push(c.scaled(&-crate::rational::rat(1)));
            }
        }
    }
    LinearSystem::new(problem.variables.len(), rows)
}

/// Decides a parsed problem end to end.
///
/// Equality atoms are eliminated by substitution before the backend runs. A
/// SAT model covers every declared variable and has its infinitesimal part
/// instantiated, so it satisfies strict atoms strictly at concrete rational
/// values. An UNSAT core refers to atom indices of the input problem. Farkas
/// certificates are kept only when no equalities were eliminated, since their
/// multipliers index rows of the system the backend actually saw.
pub fn solve_problem(
    problem: &Problem,
    backend: BackendKind,
    heuristic: HeuristicKind,
    seed: u64,
    budgets: &Budgets,
) -> RunOutput {
    let nvars = problem.variables.len();
    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    for (i, atom) in problem.atoms.iter().enumerate() {
        match normalize(atom.rel, atom.coeffs.clone(), atom.rhs.clone()) {
            NormalizedAtom::Inequality(c) => inequalities.push(TaggedRow::new(c, i)),
            NormalizedAtom::Equality(c) => equalities.push(TaggedRow::new(c, i)),
        }
    }
    let had_equalities = !equalities.is_empty();
    let (rows, record) = match gaussian_eliminate(nvars, equalities, inequalities) {
        GaussOutcome::Inconsistent { core } => {
            return RunOutput {
                outcome: Ok(SolveOutcome::Unsat {
                    core,
                    certificate: None,
                }),
                stats: Stats::default(),
            }
        }
        GaussOutcome::Reduced {
            inequalities,
            record,
        } => (inequalities, record),
    };
    let system = LinearSystem::new(nvars, rows.iter().map(|r| r.constraint.clone()).collect());
    let mut output = decide(&system, backend, heuristic, seed, budgets);
    output.outcome = match output.outcome {
        Ok(SolveOutcome::Sat(mut model)) => {
            record.extend_model(&mut model);
            for j in 0..nvars {
                if model.get(j).is_none() {
                    model.set(j, DeltaRational::zero());
                }
            }
            instantiate_delta(&model, &normalized_system(problem)).map(SolveOutcome::Sat)
        }
        Ok(SolveOutcome::Unsat { core, certificate }) => {
            let core: BTreeSet<usize> = core
                .into_iter()
                .flat_map(|i| rows[i].origins.iter().copied())
                .collect();
            let certificate = if had_equalities { None } else { certificate };
            Ok(SolveOutcome::Unsat { core, certificate })
        }
        other => other,
    };
    output
}
