//! The set of known conditions at one search node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cdl::{Atom, Exact, Expr, Fact, Symbol};
use crate::knowledge::{expand_fact, validity_check, AtomBase, FactOracle, KnowledgeBase, Substitution, Validity};

use super::algebra::{self, equation_poly, Inconsistency, Poly, Solution};
use super::EngineError;

/// Why a fact is in the store.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Given,
    /// Asserted by the extend closure of the fact at this log index.
    Extend { from: usize },
    Theorem {
        name: String,
        substitution: BTreeMap<String, String>,
        premises: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub fact: Fact,
    pub provenance: Provenance,
}

/// Equations that cannot hold together, with where each came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub equations: Vec<ConflictEquation>,
    /// Given facts the conflicting equations trace back to.
    pub givens: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictEquation {
    pub fact: String,
    pub provenance: Provenance,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "conflicting equations:")?;
        for e in &self.equations {
            let origin = match &e.provenance {
                Provenance::Given => "given".to_string(),
                Provenance::Extend { .. } => "extend".to_string(),
                Provenance::Theorem { name, .. } => format!("theorem {name}"),
            };
            writeln!(f, "  {} ({origin})", e.fact)?;
        }
        writeln!(f, "caused by given conditions:")?;
        for g in &self.givens {
            writeln!(f, "  {g}")?;
        }
        Ok(())
    }
}

pub(crate) fn render_sub(sub: &Substitution) -> BTreeMap<String, String> {
    sub.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Goal symbol; never produced by the parser.
fn goal_symbol() -> Symbol {
    Symbol::Var("$goal".into())
}

/// Facts, equations and their provenance, closed under extend.
#[derive(Clone, Debug)]
pub struct ConditionStore {
    atoms: AtomBase,
    log: Vec<Entry>,
    equations: BTreeSet<Fact>,
    polys: Vec<(usize, Poly)>,
    solution: Solution,
    dirty: bool,
}

impl Default for ConditionStore {
    fn default() -> Self {
        Self::new()
    }
}

impl FactOracle for ConditionStore {
    fn holds(&self, kb: &KnowledgeBase, atom: &Atom) -> bool {
        self.atoms.holds(kb, atom)
    }
}

impl ConditionStore {
    pub fn new() -> Self {
        Self {
            atoms: AtomBase::new(),
            log: Vec::new(),
            equations: BTreeSet::new(),
            polys: Vec::new(),
            solution: Solution::default(),
            dirty: false,
        }
    }

    pub fn atoms(&self) -> &AtomBase {
        &self.atoms
    }

    /// Every fact in insertion order.
    pub fn entries(&self) -> &[Entry] {
        &self.log
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    /// Equal facts currently held.
    pub fn equations(&self) -> impl Iterator<Item = &Fact> {
        self.equations.iter()
    }

    /// Identity of the condition set, ignoring provenance and order.
    pub fn key(&self) -> (AtomBase, BTreeSet<Fact>) {
        (self.atoms.clone(), self.equations.clone())
    }

    fn has_equation(&self, l: &Expr, r: &Expr) -> bool {
        l == r
            || self.equations.contains(&Fact::Equal(l.clone(), r.clone()))
            || self.equations.contains(&Fact::Equal(r.clone(), l.clone()))
    }

    /// Insert `f` and its extend closure; returns the number of new facts.
    pub fn insert(&mut self, kb: &KnowledgeBase, f: &Fact, provenance: Provenance) -> usize {
        let f = kb.canonicalize_fact(f);
        if self.contains(kb, &f) {
            return 0;
        }
        let root = self.log.len();
        let mut added = 0;
        if self.push(kb, f.clone(), provenance) {
            added += 1;
        }
        for g in expand_fact(&f, kb) {
            if g != f && self.push(kb, g, Provenance::Extend { from: root }) {
                added += 1;
            }
        }
        added
    }

    fn push(&mut self, kb: &KnowledgeBase, f: Fact, provenance: Provenance) -> bool {
        let new = match &f {
            Fact::Atom(a) => self.atoms.insert(kb, a),
            Fact::Equal(l, r) => {
                if self.has_equation(l, r) {
                    false
                } else {
                    if let Ok(p) = equation_poly(l, r) {
                        if !p.is_zero() {
                            self.polys.push((self.log.len(), p));
                            self.dirty = true;
                        }
                    }
                    self.equations.insert(f.clone());
                    true
                }
            }
            Fact::Not(_) | Fact::Value(_) => false,
        };
        if new {
            self.log.push(Entry { fact: f, provenance });
        }
        new
    }

    /// Whether the store already holds `f` syntactically (up to orientation for equalities).
    pub fn contains(&self, kb: &KnowledgeBase, f: &Fact) -> bool {
        match f {
            Fact::Atom(a) => self.atoms.holds(kb, a),
            Fact::Not(a) => !self.atoms.holds(kb, a),
            Fact::Equal(l, r) => self.has_equation(l, r),
            Fact::Value(_) => false,
        }
    }

    /// Re-solve the equation system if anything changed since the last call.
    pub fn settle(&mut self) -> Result<&Solution, Conflict> {
        if self.dirty {
            match algebra::solve(&self.polys) {
                Ok(s) => self.solution = s,
                Err(Inconsistency(ids)) => return Err(self.conflict(&ids)),
            }
            self.dirty = false;
        }
        Ok(&self.solution)
    }

    /// The solution as of the last [`settle`](Self::settle).
    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    /// Exact value of `e` under the current equations, if determined.
    pub fn evaluate(&self, e: &Expr) -> Option<Exact> {
        if let Some(v) = self.solution.value_of(e) {
            return Some(v);
        }
        let goal = Expr::Var(match goal_symbol() {
            Symbol::Var(v) => v,
            Symbol::Attr(_) => unreachable!(),
        });
        let extra = equation_poly(&goal, e).ok()?;
        let mut system = self.polys.clone();
        system.push((usize::MAX, extra));
        algebra::solve(&system).ok()?.values.remove(&goal_symbol())
    }

    /// Whether the store entails `f`: membership for atoms, absence for
    /// negations, and syntactic or algebraic equality for equations.
    pub fn entails(&self, kb: &KnowledgeBase, f: &Fact) -> bool {
        match f {
            Fact::Equal(l, r) => {
                self.has_equation(l, r)
                    || self
                        .evaluate(&Expr::sub(l.clone(), r.clone()))
                        .is_some_and(|v| v.is_zero())
            }
            _ => self.contains(kb, f),
        }
    }

    /// Explain a set of inconsistent equation ids.
    pub fn conflict(&self, ids: &BTreeSet<usize>) -> Conflict {
        let equations = ids
            .iter()
            .filter_map(|&i| self.log.get(i))
            .map(|e| ConflictEquation {
                fact: e.fact.to_string(),
                provenance: e.provenance.clone(),
            })
            .collect();
        let givens = self
            .given_roots(ids.iter().copied())
            .into_iter()
            .map(|i| self.log[i].fact.to_string())
            .collect();
        Conflict { equations, givens }
    }

    /// Log indices of the given facts that the entries `from` rest on.
    pub fn given_roots(&self, from: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = from.into_iter().collect();
        while let Some(i) = stack.pop() {
            if !seen.insert(i) {
                continue;
            }
            let Some(e) = self.log.get(i) else { continue };
            match &e.provenance {
                Provenance::Given => {
                    out.insert(i);
                }
                Provenance::Extend { from } => stack.push(*from),
                Provenance::Theorem { premises, .. } => {
                    for p in premises {
                        stack.extend(self.supporting_entries(p, i));
                    }
                }
            }
        }
        out
    }

    /// Entries before `before` whose fact is exactly `rendered`, or the
    /// earliest entry sharing its predicate when a native atom is entailed
    /// rather than stored verbatim.
    fn supporting_entries(&self, rendered: &str, before: usize) -> Vec<usize> {
        let exact: Vec<usize> = (0..before).filter(|&j| self.log[j].fact.to_string() == rendered).collect();
        if !exact.is_empty() {
            return exact;
        }
        let name = rendered.split('(').next().unwrap_or("");
        (0..before)
            .filter(|&j| matches!(&self.log[j].fact, Fact::Atom(a) if a.name == name))
            .collect()
    }

    /// Rebuild the store entry by entry and confirm each provenance: givens
    /// are accepted, extends follow from their source, and theorem
    /// conclusions had every premise entailed by the earlier entries.
    /// Returns the index of the first entry that fails.
    pub fn verify_provenance(&self, kb: &KnowledgeBase) -> Result<(), usize> {
        let mut partial = ConditionStore::new();
        for (i, e) in self.log.iter().enumerate() {
            match &e.provenance {
                Provenance::Given => {}
                Provenance::Extend { from } => {
                    if *from >= i || !expand_fact(&self.log[*from].fact, kb).contains(&e.fact) {
                        return Err(i);
                    }
                }
                Provenance::Theorem { premises, .. } => {
                    if partial.settle().is_err() {
                        return Err(i);
                    }
                    for p in premises {
                        let Ok(f) = crate::cdl::parse_fact(p) else { return Err(i) };
                        if !partial.entails(kb, &kb.canonicalize_fact(&f)) {
                            return Err(i);
                        }
                    }
                }
            }
            partial.push(kb, e.fact.clone(), e.provenance.clone());
        }
        Ok(())
    }
}

/// Build the root store from a problem's given facts.
///
/// All givens are inserted before any is checked, so a fact may rely on
/// entities introduced by a later one.
pub fn init_store(p: &crate::cdl::ProblemCdl, kb: &KnowledgeBase) -> Result<ConditionStore, EngineError> {
    let mut store = ConditionStore::new();
    for f in p.givens() {
        kb.check_names(f)
            .map_err(|name| EngineError::Knowledge(crate::knowledge::KbError::UnknownPredicate(name)))?;
        store.insert(kb, f, Provenance::Given);
    }
    for f in p.givens() {
        let f = kb.canonicalize_fact(f);
        match validity_check(&f, kb, &store)? {
            Validity::Pass => {}
            Validity::Unmet(unmet) => {
                return Err(EngineError::InvalidGiven {
                    fact: f.to_string(),
                    unmet: unmet.iter().map(Atom::to_string).collect(),
                })
            }
        }
    }
    store.dirty = true;
    store.settle().map_err(EngineError::Contradiction)?;
    Ok(store)
}
