use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A row was used as a bound on a variable it does not constrain.
    #[error("row {row} has coefficient 0 on variable {var} and is not a bound on it")]
    NotABound { row: usize, var: usize },

    /// `evaluate` was called with an assignment missing a constrained variable.
    #[error("assignment does not cover variable {var}")]
    IncompleteAssignment { var: usize },

    /// The designated row of a restricted projection is not eligible.
    #[error("invalid projection designee for variable {var}: {reason}")]
    InvalidDesignee { var: usize, reason: String },

    /// A row's provenance does not identify a unique original row outside the
    /// non-basis; the search invariant that guarantees uniqueness was broken.
    #[error("row {row} maps to {found} original rows outside the non-basis instead of one")]
    MappingViolation { row: usize, found: usize },

    /// A scripted heuristic ran out of entries or did not match the search.
    #[error("scripted choice unusable: {0}")]
    Script(String),

    /// A pivot that would leave the tight row set dependent or malformed.
    #[error("invalid pivot (leaving {leaving}, entering {entering}): {reason}")]
    InvalidPivot {
        leaving: usize,
        entering: usize,
        reason: String,
    },

    /// A resource budget was exhausted before a decision was reached.
    #[error("budget exhausted: {kind} limit {limit} reached")]
    Budget { kind: BudgetKind, limit: u64 },

    /// The input script could not be parsed.
    #[error(transparent)]
    Parse(#[from] crate::smtlib::ParseError),

    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Nodes,
    Rows,
}

impl std::fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BudgetKind::Nodes => write!(f, "node"),
            BudgetKind::Rows => write!(f, "row"),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
