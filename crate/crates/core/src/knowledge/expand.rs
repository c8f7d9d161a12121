use std::collections::BTreeSet;

use crate::cdl::{Atom, Fact};

use super::{AtomBase, KbError, KnowledgeBase, PredicateKind, EXTEND_DEPTH_CAP};

/// Anything that can answer "does this atom hold?".
pub trait FactOracle {
    fn holds(&self, kb: &KnowledgeBase, atom: &Atom) -> bool;
}

impl FactOracle for AtomBase {
    fn holds(&self, kb: &KnowledgeBase, atom: &Atom) -> bool {
        AtomBase::holds(self, kb, atom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Validity {
    Pass,
    Unmet(Vec<Atom>),
}

impl Validity {
    pub fn is_pass(&self) -> bool {
        matches!(self, Validity::Pass)
    }
}

/// Check that every instantiated check atom of `f` holds in `store`.
///
/// For equalities and `Value` goals the checks of each attribute term apply.
pub fn validity_check(f: &Fact, kb: &KnowledgeBase, store: &dyn FactOracle) -> Result<Validity, KbError> {
    let atoms: Vec<Atom> = match f {
        Fact::Atom(a) | Fact::Not(a) => vec![a.clone()],
        Fact::Equal(l, r) => l.attr_terms().into_iter().chain(r.attr_terms()).map(attr_atom).collect(),
        Fact::Value(e) => e.attr_terms().into_iter().map(attr_atom).collect(),
    };
    let mut unmet = Vec::new();
    for a in &atoms {
        let def = kb
            .predicate(&a.name)
            .ok_or_else(|| KbError::UnknownPredicate(a.name.clone()))?;
        if !matches!(f, Fact::Atom(_) | Fact::Not(_)) && def.kind != PredicateKind::Attribution {
            return Err(KbError::UnknownPredicate(a.name.clone()));
        }
        let args = kb.regroup(&a.name, &a.args);
        if !kb.arity_ok(&a.name, &args) {
            return Err(KbError::Invalid {
                entry: a.to_string(),
                msg: format!("arguments do not fit {}", def.signature()),
            });
        }
        for c in kb.checks(&Atom::new(a.name.clone(), args))? {
            if !store.holds(kb, &c) && !unmet.contains(&c) {
                unmet.push(c);
            }
        }
    }
    Ok(if unmet.is_empty() {
        Validity::Pass
    } else {
        Validity::Unmet(unmet)
    })
}

fn attr_atom(t: &crate::cdl::AttrTerm) -> Atom {
    Atom::new(t.name.clone(), t.args.clone())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expansion {
    pub facts: BTreeSet<Fact>,
    /// True when the closure was cut off at [`EXTEND_DEPTH_CAP`].
    pub capped: bool,
}

/// Derived equalities get one orientation so the closure does not depend
/// on which multi ordering produced them first.
fn oriented(f: Fact) -> Fact {
    match f {
        Fact::Equal(l, r) if r.to_string() < l.to_string() => Fact::Equal(r, l),
        f => f,
    }
}

/// `f` plus every multi ordering and every extend consequence, closed transitively.
pub fn expand_fact(f: &Fact, kb: &KnowledgeBase) -> BTreeSet<Fact> {
    expand_fact_checked(f, kb).facts
}

pub fn expand_fact_checked(f: &Fact, kb: &KnowledgeBase) -> Expansion {
    let mut out = BTreeSet::new();
    let mut frontier = Vec::new();
    let admit = |g: Fact, out: &mut BTreeSet<Fact>, next: &mut Vec<Fact>| {
        let variants = match &g {
            Fact::Atom(a) => kb.variants(a).into_iter().map(Fact::Atom).collect(),
            Fact::Equal(l, r) if out.contains(&Fact::Equal(r.clone(), l.clone())) => vec![],
            _ => vec![g],
        };
        for v in variants {
            if out.insert(v.clone()) {
                next.push(v);
            }
        }
    };
    admit(kb.canonicalize_fact(f), &mut out, &mut frontier);
    let mut depth = 0;
    while !frontier.is_empty() {
        if depth == EXTEND_DEPTH_CAP {
            return Expansion { facts: out, capped: true };
        }
        let mut next = Vec::new();
        for g in std::mem::take(&mut frontier) {
            if let Fact::Atom(a) = &g {
                for e in kb.extends(a) {
                    admit(oriented(e), &mut out, &mut next);
                }
            }
        }
        frontier = next;
        depth += 1;
    }
    Expansion { facts: out, capped: false }
}
