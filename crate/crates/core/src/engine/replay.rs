//! Independent re-execution of a solution trace.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cdl::{parse_fact, ProblemCdl};
use crate::knowledge::{KnowledgeBase, Substitution};

use super::matcher::{apply_theorem, instantiate};
use super::search::{goal_reached, SolutionTrace};
use super::store::init_store;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Divergence {
    /// The given conditions no longer load.
    Init { error: String },
    MissingTheorem { step: usize, theorem: String },
    BadSubstitution { step: usize },
    /// The recorded premises differ from the theorem instantiated under the substitution.
    PremiseMismatch { step: usize, recorded: Vec<String>, expected: Vec<String> },
    PremiseNotHeld { step: usize, premise: String },
    ConclusionMismatch { step: usize, recorded: Vec<String>, expected: Vec<String> },
    Failed { step: usize, error: String },
    GoalMismatch { recorded: Option<String>, replayed: Option<String> },
    GoalNotReached,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Init { error } => write!(f, "given conditions fail to load: {error}"),
            Self::MissingTheorem { step, theorem } => write!(f, "step {}: theorem `{theorem}` is not in the bank", step + 1),
            Self::BadSubstitution { step } => write!(f, "step {}: malformed substitution", step + 1),
            Self::PremiseMismatch { step, recorded, expected } => write!(
                f,
                "step {}: recorded premises [{}] differ from [{}]",
                step + 1,
                recorded.join(" & "),
                expected.join(" & ")
            ),
            Self::PremiseNotHeld { step, premise } => write!(f, "step {}: premise {premise} does not hold", step + 1),
            Self::ConclusionMismatch { step, recorded, expected } => write!(
                f,
                "step {}: recorded conclusions [{}] differ from [{}]",
                step + 1,
                recorded.join(" & "),
                expected.join(" & ")
            ),
            Self::Failed { step, error } => write!(f, "step {}: {error}", step + 1),
            Self::GoalMismatch { recorded, replayed } => {
                write!(f, "goal value {recorded:?} recorded but {replayed:?} replayed")
            }
            Self::GoalNotReached => write!(f, "goal is not reached after the last step"),
        }
    }
}

impl Divergence {
    /// Zero-based index of the failing step, if the failure is tied to one.
    pub fn step(&self) -> Option<usize> {
        match self {
            Self::MissingTheorem { step, .. }
            | Self::BadSubstitution { step }
            | Self::PremiseMismatch { step, .. }
            | Self::PremiseNotHeld { step, .. }
            | Self::ConclusionMismatch { step, .. }
            | Self::Failed { step, .. } => Some(*step),
            _ => None,
        }
    }
}

fn parse_sub(raw: &std::collections::BTreeMap<String, String>) -> Option<Substitution> {
    let mut sub = Substitution::new();
    for (k, v) in raw {
        let mut kc = k.chars();
        let mut vc = v.chars();
        match (kc.next(), kc.next(), vc.next(), vc.next()) {
            (Some(a), None, Some(b), None) => {
                sub.insert(a, b);
            }
            _ => return None,
        }
    }
    Some(sub)
}

/// Re-run every step of `trace` from the givens of `p` and confirm the goal value.
pub fn replay_trace(trace: &SolutionTrace, p: &ProblemCdl, kb: &KnowledgeBase) -> Result<(), Divergence> {
    let mut store = init_store(p, kb).map_err(|e| Divergence::Init { error: e.to_string() })?;
    for (i, step) in trace.steps.iter().enumerate() {
        let t = kb.theorem(&step.theorem).ok_or_else(|| Divergence::MissingTheorem {
            step: i,
            theorem: step.theorem.clone(),
        })?;
        let sub = parse_sub(&step.substitution).ok_or(Divergence::BadSubstitution { step: i })?;
        let premises: Vec<_> = t.premise.iter().map(|f| instantiate(f, &sub, kb)).collect();
        let expected: Vec<String> = premises.iter().map(|f| f.to_string()).collect();
        if expected != step.premises {
            return Err(Divergence::PremiseMismatch {
                step: i,
                recorded: step.premises.clone(),
                expected,
            });
        }
        store.settle().map_err(|c| Divergence::Failed {
            step: i,
            error: c.to_string(),
        })?;
        for f in &premises {
            if !store.entails(kb, f) {
                return Err(Divergence::PremiseNotHeld {
                    step: i,
                    premise: f.to_string(),
                });
            }
        }
        let (_, replayed) = apply_theorem(t, &sub, &mut store, kb).map_err(|e| Divergence::Failed {
            step: i,
            error: e.to_string(),
        })?;
        if replayed.conclusions != step.conclusions {
            return Err(Divergence::ConclusionMismatch {
                step: i,
                recorded: step.conclusions.clone(),
                expected: replayed.conclusions,
            });
        }
    }
    store.settle().map_err(|c| Divergence::Failed {
        step: trace.steps.len(),
        error: c.to_string(),
    })?;
    let goal = parse_fact(&trace.goal).unwrap_or_else(|_| p.goal.clone());
    match goal_reached(&goal, &store, kb) {
        None => Err(Divergence::GoalNotReached),
        Some(v) if v == trace.value => Ok(()),
        Some(v) => Err(Divergence::GoalMismatch {
            recorded: trace.value.clone(),
            replayed: v,
        }),
    }
}
