use thiserror::Error;

/// Crate-wide error type.
///
/// Variants that describe a broken internal guarantee (as opposed to bad
/// input) are grouped under [`Error::Invariant`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("window mismatch: expected {expected}, got {got}")]
    WindowMismatch { expected: usize, got: usize },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("search space of {size} exceeds guard {guard}")]
    GuardExceeded { size: u128, guard: u64 },

    #[error("value too large for desk-scale enumeration: {0}")]
    TooLarge(String),

    #[error("slalom {index} violates the bound at level {level}: |B| = {size} > {bound}")]
    SlalomTooWide {
        index: usize,
        level: usize,
        size: usize,
        bound: u64,
    },

    #[error("input family does not cover the product space; uncovered branch {0:?}")]
    NotCovering(Vec<u64>),

    #[error("transfer system violates the preimage bound at block {block}")]
    PreimageBound { block: usize },

    #[error("generator failed at level {level}: {reason}")]
    Generator { level: usize, reason: String },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("norm budget exhausted at split {split} (level {level})")]
    NormBudget { split: usize, level: usize },

    #[error("cardinality bound failed at level {level} ({case}): {size} > {bound}")]
    CaseBound {
        level: usize,
        case: &'static str,
        size: u64,
        bound: u64,
    },

    #[error("no node of coordinate {0} can avoid the slalom")]
    NoAvoidingNode(String),

    #[error("internal invariant broken: {0}")]
    Invariant(String),

    #[error("{} violation(s): {}", .0.len(), summarize(.0))]
    Violations(Vec<Violation>),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

/// One failed inequality in a report-style check.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub level: usize,
    pub rule: &'static str,
    pub detail: String,
}

impl Violation {
    pub fn new(level: usize, rule: &'static str, detail: impl Into<String>) -> Self {
        Violation {
            level,
            rule,
            detail: detail.into(),
        }
    }
}

fn summarize(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("[level {}] {}: {}", x.level, x.rule, x.detail))
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
