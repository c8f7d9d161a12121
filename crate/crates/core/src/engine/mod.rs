//! Forward-chaining reasoning engine.
//!
//! A search node holds a [`ConditionStore`]. Expanding a node applies each
//! theorem with every premise match it has; each theorem that adds facts
//! yields one child. The goal is tested at the root and at every new child.

pub mod algebra;
mod matcher;
mod replay;
mod search;
mod store;

use thiserror::Error;

use crate::knowledge::KbError;

pub use matcher::{apply_theorem, match_premise, TraceStep};
pub use replay::{replay_trace, Divergence};
pub use search::{
    goal_reached, search, NodeState, SearchNode, SearchOutcome, SolutionTrace, SolveLimits, Traversal,
    UnsolvedReason, DEFAULT_STEP_CAP, DEFAULT_TIME_LIMIT,
};
pub use store::{init_store, ConditionStore, Conflict, ConflictEquation, Entry, Provenance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("given fact {fact} fails its checks: {}", unmet.join(", "))]
    InvalidGiven { fact: String, unmet: Vec<String> },
    #[error("theorem {theorem} concluded {fact} without {}", unmet.join(", "))]
    InvalidConclusion {
        theorem: String,
        fact: String,
        unmet: Vec<String>,
    },
    #[error("{0}")]
    Contradiction(store::Conflict),
    #[error(transparent)]
    Knowledge(#[from] KbError),
}
