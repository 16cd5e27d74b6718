//! Branch selection policies for the depth-first search.
//!
//! A policy does two things at every branching node: commit to one choice
//! set (a variable plus one side of its bounds, or the single unbounded
//! projection) and order that set's designees for exploration.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::system::LinearSystem;

use super::{ChoiceSet, Side};

/// Strategy for picking the next choice set and ordering its designees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Heuristic {
    /// Fewest children first: take any unbounded choice (smallest variable
    /// first); otherwise the smallest nonempty set, breaking ties toward
    /// the smaller variable and then the lower side. Designees are explored
    /// by ascending backtrack level, then ascending row index.
    MinFanout,
    /// Sparsest column first: take any unbounded choice (smallest variable
    /// first); otherwise the variable with the fewest designatable bound
    /// rows overall, using the smaller of its two sets (ties toward the
    /// lower side). Designees are explored sparsest row first.
    MinColumnLength,
    /// Uniformly random set and designee order from a generator seeded with
    /// the given value; runs are deterministic per seed.
    Random(u64),
    /// A fixed decision list consumed in depth-first preorder, one entry
    /// per branching node.
    Scripted(Vec<NodeProgram>),
}

/// One scripted decision.
///
/// `rows` names original row indices, resolved at the node through its
/// non-basis mapping; designees listed there are explored first, in the
/// order given. Eligible designees the script does not mention follow in
/// row order, and mentioned rows with no eligible designee at the node are
/// skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeProgram {
    pub var: usize,
    /// `None` selects the unbounded projection of `var`.
    pub side: Option<Side>,
    pub rows: Vec<usize>,
}

/// Mutable policy state threaded through one search run.
pub(super) enum Chooser {
    MinFanout,
    MinColumnLength,
    Random(ChaCha8Rng),
    Scripted(std::vec::IntoIter<NodeProgram>),
}

impl Chooser {
    pub(super) fn new(heuristic: &Heuristic) -> Chooser {
        match heuristic {
            Heuristic::MinFanout => Chooser::MinFanout,
            Heuristic::MinColumnLength => Chooser::MinColumnLength,
            Heuristic::Random(seed) => Chooser::Random(ChaCha8Rng::seed_from_u64(*seed)),
            Heuristic::Scripted(programs) => Chooser::Scripted(programs.clone().into_iter()),
        }
    }

    /// Commit to one of `choices` and order its designees for exploration.
    ///
    /// `mapped[i]` is the original row that row `i` of `system` stands in
    /// for; the scripted policy resolves its row names through it.
    pub(super) fn choose(
        &mut self,
        system: &LinearSystem,
        choices: &[ChoiceSet],
        mapped: &[usize],
    ) -> Result<ChoiceSet> {
        debug_assert!(!choices.is_empty(), "choose requires a live variable");
        match self {
            Chooser::MinFanout => Ok(min_fanout(system, choices)),
            Chooser::MinColumnLength => Ok(min_column_length(system, choices)),
            Chooser::Random(rng) => {
                let mut set = choices[rng.gen_range(0..choices.len())].clone();
                set.rows.shuffle(rng);
                Ok(set)
            }
            Chooser::Scripted(programs) => scripted(programs, choices, mapped),
        }
    }
}

/// The unbounded choice with the smallest variable, if any.
fn preferred_unbounded(choices: &[ChoiceSet]) -> Option<&ChoiceSet> {
    choices
        .iter()
        .filter(|c| c.side.is_none())
        .min_by_key(|c| c.var)
}

fn min_fanout(system: &LinearSystem, choices: &[ChoiceSet]) -> ChoiceSet {
    if let Some(unbounded) = preferred_unbounded(choices) {
        return unbounded.clone();
    }
    let pick = choices
        .iter()
        .filter(|c| !c.rows.is_empty())
        .min_by_key(|c| (c.rows.len(), c.var, c.side))
        // Every designee everywhere is excluded: any empty set proves the
        // node unsatisfiable without exploring children.
        .unwrap_or_else(|| {
            choices
                .iter()
                .min_by_key(|c| (c.var, c.side))
                .expect("choices are nonempty")
        });
    let mut set = pick.clone();
    set.rows.sort_by_key(|&i| (system.btlvl(i), i));
    set
}

fn min_column_length(system: &LinearSystem, choices: &[ChoiceSet]) -> ChoiceSet {
    if let Some(unbounded) = preferred_unbounded(choices) {
        return unbounded.clone();
    }
    // Two-sided sets come in (lower, upper) pairs per variable; weigh each
    // variable by the designatable rows left on both sides together.
    let mut by_var: std::collections::BTreeMap<usize, Vec<&ChoiceSet>> =
        std::collections::BTreeMap::new();
    for c in choices {
        by_var.entry(c.var).or_default().push(c);
    }
    let (_, pair) = by_var
        .into_iter()
        .min_by_key(|(var, pair)| (pair.iter().map(|c| c.rows.len()).sum::<usize>(), *var))
        .expect("choices are nonempty");
    let pick = pair
        .into_iter()
        .min_by_key(|c| (c.rows.len(), c.side))
        .expect("a two-sided variable contributes both sides");
    let mut set = pick.clone();
    set.rows.sort_by_key(|&i| (system.row(i).support_len(), i));
    set
}

fn scripted(
    programs: &mut std::vec::IntoIter<NodeProgram>,
    choices: &[ChoiceSet],
    mapped: &[usize],
) -> Result<ChoiceSet> {
    let program = programs
        .next()
        .ok_or_else(|| Error::Script("decision list exhausted at a branching node".into()))?;
    let set = choices
        .iter()
        .find(|c| c.var == program.var && c.side == program.side)
        .ok_or_else(|| {
            let side = match program.side {
                Some(s) => format!("{s} side"),
                None => "unbounded projection".into(),
            };
            Error::Script(format!("variable {} offers no {side} here", program.var))
        })?;
    let mut rows = Vec::with_capacity(set.rows.len());
    for &orig in &program.rows {
        if let Some(&i) = set.rows.iter().find(|&&i| mapped[i] == orig) {
            if !rows.contains(&i) {
                rows.push(i);
            }
        }
    }
    for &i in &set.rows {
        if !rows.contains(&i) {
            rows.push(i);
        }
    }
    Ok(ChoiceSet {
        var: set.var,
        side: set.side,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    use crate::system::{Constraint, LinearSystem, RowCombination};

    use super::super::branch_choices;

    /// x0 bounded below only; x1 bounded on both sides.
    fn one_unbounded() -> LinearSystem {
        LinearSystem::from_ints(
            2,
            &[(&[-1, -1], -4), (&[0, -2], -2), (&[-2, 1], 1), (&[0, 1], 5)],
        )
    }

    /// Both variables two-sided. Index sets: x0 lower {0,1}, upper {2,3};
    /// x1 lower {4}, upper {1,2,3}.
    fn two_sided() -> LinearSystem {
        LinearSystem::from_ints(
            2,
            &[
                (&[-1, 0], 1),
                (&[-1, 1], 2),
                (&[1, 1], 3),
                (&[1, 1], 4),
                (&[0, -1], 0),
            ],
        )
    }

    #[test]
    fn min_fanout_prefers_unbounded_choices() {
        let s = one_unbounded();
        let choices = branch_choices(&s, &BTreeSet::new());
        let mut chooser = Chooser::new(&Heuristic::MinFanout);
        let set = chooser.choose(&s, &choices, &[0, 1, 2, 3]).unwrap();
        assert_eq!((set.var, set.side), (0, None));
    }

    #[test]
    fn min_fanout_takes_the_smallest_nonempty_set() {
        let s = two_sided();
        let mut chooser = Chooser::new(&Heuristic::MinFanout);
        let choices = branch_choices(&s, &BTreeSet::new());
        let set = chooser.choose(&s, &choices, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(
            (set.var, set.side, set.rows.clone()),
            (1, Some(Side::Lower), vec![4])
        );
        // Excluding that designee empties the set; the tie among the
        // remaining size-2 sets goes to the smaller variable, lower side.
        let choices = branch_choices(&s, &[4].into());
        let set = chooser.choose(&s, &choices, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(
            (set.var, set.side, set.rows.clone()),
            (0, Some(Side::Lower), vec![0, 1])
        );
        // Only when every set is empty does an empty one get returned.
        let choices = branch_choices(&s, &[0, 1, 2, 3, 4].into());
        let set = chooser.choose(&s, &choices, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!((set.var, set.side), (0, Some(Side::Lower)));
        assert!(set.rows.is_empty());
    }

    #[test]
    fn min_fanout_orders_designees_by_backtrack_level() {
        // Two lower bounds at levels 1 and 0, three uppers keep the lower
        // side the smaller choice.
        let rows = vec![
            Constraint::from_ints(&[-1], 0),
            Constraint::from_ints(&[-2], -2),
            Constraint::from_ints(&[1], 5),
            Constraint::from_ints(&[1], 6),
            Constraint::from_ints(&[1], 7),
        ];
        let provenance = (0..5).map(RowCombination::unit).collect();
        let s = LinearSystem::derived(1, 5, rows, provenance, vec![1, 0, 0, 0, 0]);
        let choices = branch_choices(&s, &BTreeSet::new());
        let mut chooser = Chooser::new(&Heuristic::MinFanout);
        let set = chooser.choose(&s, &choices, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!((set.var, set.side), (0, Some(Side::Lower)));
        assert_eq!(set.rows, vec![1, 0], "level-0 designees come first");
    }

    #[test]
    fn min_column_length_weighs_whole_columns() {
        let s = two_sided();
        let choices = branch_choices(&s, &BTreeSet::new());
        let mut chooser = Chooser::new(&Heuristic::MinColumnLength);
        let set = chooser.choose(&s, &choices, &[0, 1, 2, 3, 4]).unwrap();
        // Both columns hold four bound rows; the tie goes to x0, whose
        // equally-sized sides keep the lower one. Designees are ordered
        // sparsest row first: row 0 has one nonzero coefficient, row 1 two.
        assert_eq!((set.var, set.side), (0, Some(Side::Lower)));
        assert_eq!(set.rows, vec![0, 1]);
        // Removing a designee from x1's lower side makes x1 the sparser
        // column (three rows against four).
        let choices = branch_choices(&s, &[4].into());
        let set = chooser.choose(&s, &choices, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!((set.var, set.side), (1, Some(Side::Lower)));
        assert!(set.rows.is_empty());
    }

    #[test]
    fn random_choice_is_deterministic_per_seed() {
        let s = two_sided();
        let choices = branch_choices(&s, &BTreeSet::new());
        let mapped = [0, 1, 2, 3, 4];
        let pick = |seed: u64| {
            let mut chooser = Chooser::new(&Heuristic::Random(seed));
            let a = chooser.choose(&s, &choices, &mapped).unwrap();
            let b = chooser.choose(&s, &choices, &mapped).unwrap();
            (a, b)
        };
        assert_eq!(pick(7), pick(7));
        let mut seeds = (0..16).map(pick);
        let first = seeds.next().unwrap();
        assert!(seeds.any(|p| p != first), "seeds should vary the choice");
    }

    #[test]
    fn scripted_follows_the_list_and_resolves_original_rows() {
        let s = two_sided();
        let choices = branch_choices(&s, &BTreeSet::new());
        // Original rows 3 and 2 first, leftovers in row order. The mapping
        // here swaps rows 2 and 3 to show resolution goes through it.
        let mapped = [0, 1, 3, 2, 4];
        let program = NodeProgram {
            var: 0,
            side: Some(Side::Upper),
            rows: vec![3, 2],
        };
        let mut chooser = Chooser::new(&Heuristic::Scripted(vec![program]));
        let set = chooser.choose(&s, &choices, &mapped).unwrap();
        assert_eq!((set.var, set.side), (0, Some(Side::Upper)));
        assert_eq!(set.rows, vec![2, 3]);
        // Rows the script names but the node cannot designate are skipped.
        let program = NodeProgram {
            var: 0,
            side: Some(Side::Upper),
            rows: vec![9, 2],
        };
        let mut chooser = Chooser::new(&Heuristic::Scripted(vec![program]));
        let set = chooser.choose(&s, &choices, &mapped).unwrap();
        assert_eq!(set.rows, vec![3, 2]);
    }

    #[test]
    fn scripted_errors_are_reported() {
        let s = two_sided();
        let choices = branch_choices(&s, &BTreeSet::new());
        let mut chooser = Chooser::new(&Heuristic::Scripted(vec![]));
        assert!(matches!(
            chooser.choose(&s, &choices, &[0, 1, 2, 3, 4]),
            Err(Error::Script(_))
        ));
        // Asking for an unbounded projection of a two-sided variable.
        let program = NodeProgram {
            var: 0,
            side: None,
            rows: vec![],
        };
        let mut chooser = Chooser::new(&Heuristic::Scripted(vec![program]));
        assert!(matches!(
            chooser.choose(&s, &choices, &[0, 1, 2, 3, 4]),
            Err(Error::Script(_))
        ));
    }
}
