//! Forward search over condition sets.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cdl::{Expr, Fact, ProblemCdl};
use crate::knowledge::KnowledgeBase;

use super::matcher::{apply_theorem, match_premise, TraceStep};
use super::store::{init_store, Conflict, ConditionStore};
use super::EngineError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Traversal {
    #[default]
    Bfs,
    Dfs,
}

impl FromStr for Traversal {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bfs" | "breadth-first" => Ok(Self::Bfs),
            "dfs" | "depth-first" => Ok(Self::Dfs),
            other => Err(format!("unknown traversal `{other}` (expected bfs or dfs)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveLimits {
    pub time_limit: Duration,
    pub step_cap: usize,
    pub traversal: Traversal,
}

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(300);
pub const DEFAULT_STEP_CAP: usize = 10_000;

impl Default for SolveLimits {
    fn default() -> Self {
        Self {
            time_limit: DEFAULT_TIME_LIMIT,
            step_cap: DEFAULT_STEP_CAP,
            traversal: Traversal::Bfs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnsolvedReason {
    Exhausted,
    Timeout,
    StepCap,
}

impl fmt::Display for UnsolvedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exhausted => "exhausted",
            Self::Timeout => "timeout",
            Self::StepCap => "step-cap",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeState {
    Expandable,
    Expanded,
    Solved,
    Unsolved,
}

/// One node of the search tree.
#[derive(Clone, Debug)]
pub struct SearchNode {
    pub state: NodeState,
    /// Applications from the root to this node.
    pub path: Vec<TraceStep>,
    store: Option<ConditionStore>,
}

/// Ordered theorem applications that reach the goal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionTrace {
    pub goal: String,
    /// Exact goal value for quantity goals, `None` for relation goals.
    pub value: Option<String>,
    pub steps: Vec<TraceStep>,
    /// Applications that added at least one fact during the whole search.
    pub step_count: usize,
    pub elapsed_secs: f64,
}

impl SolutionTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

impl fmt::Display for SolutionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "goal: {}", self.goal)?;
        for (i, s) in self.steps.iter().enumerate() {
            let sub: Vec<String> = s.substitution.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(f, "{}. {} [{}]", i + 1, s.theorem, sub.join(","))?;
            writeln!(f, "   from: {}", s.premises.join(" & "))?;
            writeln!(f, "   get:  {}", s.conclusions.join(" & "))?;
        }
        match &self.value {
            Some(v) => writeln!(f, "answer: {v}")?,
            None => writeln!(f, "answer: holds")?,
        }
        write!(f, "steps: {}  time: {:.3}s", self.step_count, self.elapsed_secs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Solved(SolutionTrace),
    Unsolved {
        reason: UnsolvedReason,
        step_count: usize,
        elapsed_secs: f64,
    },
    Contradiction {
        conflict: Conflict,
        step_count: usize,
        elapsed_secs: f64,
    },
}

impl SearchOutcome {
    pub fn step_count(&self) -> usize {
        match self {
            Self::Solved(t) => t.step_count,
            Self::Unsolved { step_count, .. } | Self::Contradiction { step_count, .. } => *step_count,
        }
    }

    pub fn elapsed_secs(&self) -> f64 {
        match self {
            Self::Solved(t) => t.elapsed_secs,
            Self::Unsolved { elapsed_secs, .. } | Self::Contradiction { elapsed_secs, .. } => *elapsed_secs,
        }
    }

    pub fn trace(&self) -> Option<&SolutionTrace> {
        match self {
            Self::Solved(t) => Some(t),
            _ => None,
        }
    }
}

/// The goal's value if the store reaches it: `Some(Some(v))` for a
/// quantity, `Some(None)` for a relation that holds.
pub fn goal_reached(goal: &Fact, store: &ConditionStore, kb: &KnowledgeBase) -> Option<Option<String>> {
    match goal {
        Fact::Value(e) => {
            let e = kb.canonicalize_expr(e);
            store.evaluate(&e).map(|v| Some(Expr::from_exact(&v).to_string()))
        }
        other => store.entails(kb, &kb.canonicalize_fact(other)).then_some(None),
    }
}

/// Run the search for `p` within `limits`.
pub fn search(p: &ProblemCdl, kb: &KnowledgeBase, limits: &SolveLimits) -> Result<SearchOutcome, EngineError> {
    let start = Instant::now();
    let elapsed = || start.elapsed().as_secs_f64();
    let root = match init_store(p, kb) {
        Ok(s) => s,
        Err(EngineError::Contradiction(conflict)) => {
            return Ok(SearchOutcome::Contradiction {
                conflict,
                step_count: 0,
                elapsed_secs: elapsed(),
            })
        }
        Err(e) => return Err(e),
    };
    let mut steps = 0usize;
    let solved = |path: Vec<TraceStep>, value: Option<String>, steps: usize| {
        SearchOutcome::Solved(SolutionTrace {
            goal: p.goal.to_string(),
            value,
            steps: path,
            step_count: steps,
            elapsed_secs: elapsed(),
        })
    };
    let unsolved = |reason, steps| SearchOutcome::Unsolved {
        reason,
        step_count: steps,
        elapsed_secs: elapsed(),
    };
    if let Some(v) = goal_reached(&p.goal, &root, kb) {
        return Ok(solved(Vec::new(), v, 0));
    }

    let mut seen = HashSet::new();
    seen.insert(root.key());
    let mut nodes = vec![SearchNode {
        state: NodeState::Expandable,
        path: Vec::new(),
        store: Some(root),
    }];
    let mut frontier = VecDeque::from([0usize]);

    loop {
        let next = match limits.traversal {
            Traversal::Bfs => frontier.pop_front(),
            Traversal::Dfs => frontier.pop_back(),
        };
        let Some(id) = next else {
            return Ok(unsolved(UnsolvedReason::Exhausted, steps));
        };
        if start.elapsed() >= limits.time_limit {
            return Ok(unsolved(UnsolvedReason::Timeout, steps));
        }
        let store = nodes[id].store.take().expect("expandable nodes keep their store");
        nodes[id].state = NodeState::Expanded;
        let mut children = Vec::new();
        for t in kb.theorems() {
            let subs = match_premise(t, &store, kb);
            if subs.is_empty() {
                continue;
            }
            let mut child = store.clone();
            let mut path = nodes[id].path.clone();
            let before = path.len();
            for sub in &subs {
                let (added, step) = apply_theorem(t, sub, &mut child, kb)?;
                if added > 0 {
                    steps += 1;
                    path.push(step);
                }
            }
            if path.len() == before {
                continue;
            }
            if let Err(conflict) = child.settle() {
                return Ok(SearchOutcome::Contradiction {
                    conflict,
                    step_count: steps,
                    elapsed_secs: elapsed(),
                });
            }
            if !seen.insert(child.key()) {
                continue;
            }
            if let Some(v) = goal_reached(&p.goal, &child, kb) {
                nodes.push(SearchNode {
                    state: NodeState::Solved,
                    path: path.clone(),
                    store: None,
                });
                return Ok(solved(path, v, steps));
            }
            if steps >= limits.step_cap {
                return Ok(unsolved(UnsolvedReason::StepCap, steps));
            }
            if start.elapsed() >= limits.time_limit {
                return Ok(unsolved(UnsolvedReason::Timeout, steps));
            }
            children.push(nodes.len());
            nodes.push(SearchNode {
                state: NodeState::Expandable,
                path,
                store: Some(child),
            });
        }
        if children.is_empty() {
            nodes[id].state = NodeState::Unsolved;
        }
        match limits.traversal {
            Traversal::Bfs => frontier.extend(children),
            // Reverse so the first theorem's child is expanded first.
            Traversal::Dfs => frontier.extend(children.into_iter().rev()),
        }
    }
}
