//! Theorem premise matching and application.

use serde::{Deserialize, Serialize};

use crate::cdl::{Atom, Fact};
use crate::knowledge::{validity_check, KnowledgeBase, Substitution, TheoremDef, Validity};

use super::store::{render_sub, ConditionStore, Provenance};
use super::EngineError;

/// One theorem application as recorded in a trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub theorem: String,
    pub substitution: std::collections::BTreeMap<String, String>,
    pub premises: Vec<String>,
    pub conclusions: Vec<String>,
}

pub(crate) fn instantiate(f: &Fact, sub: &Substitution, kb: &KnowledgeBase) -> Fact {
    kb.canonicalize_fact(&f.map_points(&|c| sub.get(&c).copied().unwrap_or(c)))
}

/// Every substitution under which all premises of `t` hold in `store`.
///
/// Positive atoms are matched in order; negations and equalities are then
/// tested on the fully bound instance. The result is sorted.
pub fn match_premise(t: &TheoremDef, store: &ConditionStore, kb: &KnowledgeBase) -> Vec<Substitution> {
    let positives: Vec<&Atom> = t.positive().collect();
    let mut partial = vec![Substitution::new()];
    for pat in positives {
        let mut next = Vec::new();
        for sub in &partial {
            next.extend(store.atoms().matches(kb, pat, sub));
        }
        next.sort();
        next.dedup();
        partial = next;
        if partial.is_empty() {
            return partial;
        }
    }
    partial.retain(|sub| {
        t.premise
            .iter()
            .filter(|f| !matches!(f, Fact::Atom(_)))
            .all(|f| store.entails(kb, &instantiate(f, sub, kb)))
    });
    partial
}

/// Insert the instantiated conclusions of `t` under `sub`.
///
/// Returns the number of new facts and the trace record. A conclusion that
/// fails its validity check points at a bug in the theorem bank.
pub fn apply_theorem(
    t: &TheoremDef,
    sub: &Substitution,
    store: &mut ConditionStore,
    kb: &KnowledgeBase,
) -> Result<(usize, TraceStep), EngineError> {
    let premises: Vec<String> = t.premise.iter().map(|f| instantiate(f, sub, kb).to_string()).collect();
    let conclusions: Vec<Fact> = t.conclusion.iter().map(|f| instantiate(f, sub, kb)).collect();
    let provenance = Provenance::Theorem {
        name: t.name.clone(),
        substitution: render_sub(sub),
        premises: premises.clone(),
    };
    let mut added = 0;
    for c in &conclusions {
        added += store.insert(kb, c, provenance.clone());
    }
    for c in &conclusions {
        if let Validity::Unmet(unmet) = validity_check(c, kb, store)? {
            return Err(EngineError::InvalidConclusion {
                theorem: t.name.clone(),
                fact: c.to_string(),
                unmet: unmet.iter().map(Atom::to_string).collect(),
            });
        }
    }
    Ok((
        added,
        TraceStep {
            theorem: t.name.clone(),
            substitution: render_sub(sub),
            premises,
            conclusions: conclusions.iter().map(Fact::to_string).collect(),
        },
    ))
}
