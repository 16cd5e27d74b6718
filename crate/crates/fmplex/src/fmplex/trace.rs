//! Execution records of the depth-first search.
//!
//! A [`SearchTrace`] captures every node the search visits with enough
//! detail to replay the branching decisions afterwards: which bound was
//! designated on the way in, which choice set the node committed to, what
//! the node returned, and how the pruning sets looked on entry. Collection
//! is off by default and enabled through
//! [`SolveOptions::collect_trace`](super::SolveOptions).

use std::collections::BTreeSet;

use crate::error::Result;
use crate::outcome::SolveOutcome;

use super::Side;

/// How a node was reached from its parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchEdge {
    /// Variable projected away by this step.
    pub var: usize,
    /// Designated row in the parent's system; `None` for the projection of
    /// a variable with bounds on one side only.
    pub designee: Option<usize>,
    /// The original row the designee stands in for.
    pub mapped: Option<usize>,
}

/// The choice set a branching node committed to, in exploration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceRecord {
    pub var: usize,
    /// `None` marks the single unbounded choice.
    pub side: Option<Side>,
    /// Designee rows of the node's system, ordered as explored.
    pub designees: Vec<usize>,
    /// Original rows the designees stand in for, parallel to `designees`.
    pub mapped: Vec<usize>,
}

/// What a node returned, without the model payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceOutcome {
    Sat,
    Unsat {
        core: BTreeSet<usize>,
    },
    PartialUnsat {
        level: usize,
        core: BTreeSet<usize>,
    },
    /// The search stopped inside this node: a budget ran out or an
    /// invariant was violated.
    Aborted,
}

/// One visited node of the search tree.
#[derive(Debug, Clone)]
pub struct NodeRecord {
    pub id: usize,
    pub parent: Option<usize>,
    /// The projection step that created this node; `None` for the root.
    pub edge: Option<BranchEdge>,
    /// Depth of the node; the root is at level 0.
    pub lvl: usize,
    /// Original rows replaced by designations on the path to this node.
    pub nonbasis: BTreeSet<usize>,
    /// Original rows barred from designation when this node was entered.
    pub excluded: BTreeSet<usize>,
    /// Row count of the node's system.
    pub rows: usize,
    /// Set once the node commits to a choice set; leaves keep `None`.
    pub choice: Option<ChoiceRecord>,
    /// Ids of the children in exploration order.
    pub children: Vec<usize>,
    pub outcome: TraceOutcome,
}

impl NodeRecord {
    /// Did this node create at least one child?
    pub fn is_branching(&self) -> bool {
        !self.children.is_empty()
    }
}

/// All nodes visited by one search run, in order of first visit (so index 0
/// is the root whenever the trace is nonempty).
#[derive(Debug, Clone, Default)]
pub struct SearchTrace {
    pub nodes: Vec<NodeRecord>,
}

/// Sentinel id used when collection is disabled.
const OFF: usize = usize::MAX;

impl SearchTrace {
    pub(super) fn new() -> Self {
        SearchTrace::default()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> Option<&NodeRecord> {
        self.nodes.first()
    }

    pub fn node(&self, id: usize) -> &NodeRecord {
        &self.nodes[id]
    }

    /// Node ids from `id` up to the root, starting with `id` itself.
    pub fn ancestry(&self, id: usize) -> Vec<usize> {
        let mut chain = vec![id];
        let mut at = id;
        while let Some(p) = self.nodes[at].parent {
            chain.push(p);
            at = p;
        }
        chain
    }

    pub(super) fn open(
        &mut self,
        enabled: bool,
        parent: Option<usize>,
        edge: Option<BranchEdge>,
        lvl: usize,
        nonbasis: &BTreeSet<usize>,
        excluded: &BTreeSet<usize>,
        rows: usize,
    ) -> usize {
        if !enabled {
            return OFF;
        }
        let id = self.nodes.len();
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        self.nodes.push(NodeRecord {
            id,
            parent,
            edge,
            lvl,
            nonbasis: nonbasis.clone(),
            excluded: excluded.clone(),
            rows,
            choice: None,
            children: Vec::new(),
            outcome: TraceOutcome::Aborted,
        });
        id
    }

    pub(super) fn set_choice(&mut self, id: usize, choice: ChoiceRecord) {
        if id != OFF {
            self.nodes[id].choice = Some(choice);
        }
    }

    pub(super) fn close(&mut self, id: usize, outcome: &Result<SolveOutcome>) {
        if id == OFF {
            return;
        }
        self.nodes[id].outcome = match outcome {
            Ok(SolveOutcome::Sat(_)) => TraceOutcome::Sat,
            Ok(SolveOutcome::Unsat { core, .. }) => TraceOutcome::Unsat { core: core.clone() },
            Ok(SolveOutcome::PartialUnsat { level, core }) => TraceOutcome::PartialUnsat {
                level: *level,
                core: core.clone(),
            },
            Err(_) => TraceOutcome::Aborted,
        };
    }
}
