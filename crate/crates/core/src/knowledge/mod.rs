//! Predicate library and theorem bank.

mod builtin;
mod expand;
pub mod gdl;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdl::{parse_fact, Atom, AttrTerm, Expr, Fact, ParseError};

pub use builtin::{AtomBase, Native};
pub use expand::{expand_fact, expand_fact_checked, validity_check, Expansion, FactOracle, Validity};

/// Extend closure depth at which expansion stops with a warning.
pub const EXTEND_DEPTH_CAP: usize = 8;

/// Binding of pattern point letters to concrete point letters (always injective).
pub type Substitution = BTreeMap<char, char>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PredicateKind {
    Construction,
    BasicEntity,
    Entity,
    Relation,
    Attribution,
}

impl std::str::FromStr for PredicateKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "Construction" => Self::Construction,
            "BasicEntity" => Self::BasicEntity,
            "Entity" => Self::Entity,
            "Relation" => Self::Relation,
            "Attribution" => Self::Attribution,
            other => return Err(other.to_string()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDef {
    pub name: String,
    pub kind: PredicateKind,
    /// Parameter pattern, e.g. `["M", "AB"]`. Empty for variadic built-ins.
    pub params: Vec<String>,
    pub check: Vec<Atom>,
    /// Alternative argument orderings over the parameter letters (excluding the declared one).
    pub multi: Vec<Vec<String>>,
    pub extend: Vec<Fact>,
    /// Set for predicates whose storage and matching are handled natively.
    pub native: Option<Native>,
    pub builtin: bool,
}

impl PredicateDef {
    pub fn signature(&self) -> String {
        if self.native.is_some() {
            format!("{}(...)", self.name)
        } else {
            format!("{}({})", self.name, self.params.join(","))
        }
    }

    fn letters(&self) -> BTreeSet<char> {
        self.params.iter().flat_map(|g| g.chars()).collect()
    }

    /// Bind parameter letters to the letters of `args`, group by group.
    pub fn bind(&self, args: &[String]) -> Option<BTreeMap<char, char>> {
        if args.len() != self.params.len() {
            return None;
        }
        let mut m = BTreeMap::new();
        for (p, a) in self.params.iter().zip(args) {
            if p.len() != a.len() {
                return None;
            }
            for (pc, ac) in p.chars().zip(a.chars()) {
                m.insert(pc, ac);
            }
        }
        Some(m)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoremDef {
    pub name: String,
    pub premise: Vec<Fact>,
    pub conclusion: Vec<Fact>,
}

impl TheoremDef {
    pub fn positive(&self) -> impl Iterator<Item = &Atom> {
        self.premise.iter().filter_map(|f| match f {
            Fact::Atom(a) => Some(a),
            _ => None,
        })
    }

    /// Name of the first positive premise atom.
    pub fn head(&self) -> Option<&str> {
        self.positive().next().map(|a| a.name.as_str())
    }
}

impl fmt::Display for TheoremDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[Fact]| v.iter().map(Fact::to_string).collect::<Vec<_>>().join(" & ");
        write!(f, "{}: {} => {}", self.name, join(&self.premise), join(&self.conclusion))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("malformed JSON document: {0}")]
    Json(String),
    #[error("{entry}: cannot parse `{text}`: {source}")]
    Parse {
        entry: String,
        text: String,
        source: ParseError,
    },
    #[error("{entry}: {msg}")]
    Invalid { entry: String, msg: String },
    #[error("{entry}: undefined predicate `{name}`")]
    UndefinedPredicate { entry: String, name: String },
    #[error("duplicate definition of `{0}`")]
    Duplicate(String),
    #[error("{entry}: variable `{var}` is not bound by {by}")]
    UnboundVariable { entry: String, var: char, by: &'static str },
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
}

/// Summary produced by a successful load.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub builtin_predicates: usize,
    pub declared_predicates: usize,
    pub predicates_by_kind: BTreeMap<PredicateKind, usize>,
    pub theorems: usize,
    pub warnings: Vec<String>,
}

impl LoadReport {
    pub fn total_predicates(&self) -> usize {
        self.builtin_predicates + self.declared_predicates
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "predicates: {} ({} built-in, {} declared)",
            self.total_predicates(),
            self.builtin_predicates,
            self.declared_predicates
        )?;
        for (k, n) in &self.predicates_by_kind {
            writeln!(f, "  {k:?}: {n}")?;
        }
        writeln!(f, "theorems: {}", self.theorems)?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Validated, cross-referenced predicate library and theorem bank.
#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    predicates: BTreeMap<String, PredicateDef>,
    order: Vec<String>,
    theorems: Vec<TheoremDef>,
    theorem_index: BTreeMap<String, usize>,
    by_head: BTreeMap<String, Vec<usize>>,
    report: LoadReport,
}

pub const SHIPPED_PREDICATES: &str = include_str!("../../gdl/predicates.gdl");
pub const SHIPPED_THEOREMS: &str = include_str!("../../gdl/theorems.gdl");

/// Load and validate a predicate document and a theorem document.
pub fn load_knowledge_base(predicate_source: &str, theorem_source: &str) -> Result<KnowledgeBase, KbError> {
    KnowledgeBase::load(predicate_source, theorem_source)
}

impl KnowledgeBase {
    /// The bank that ships with the crate.
    pub fn shipped() -> Self {
        Self::load(SHIPPED_PREDICATES, SHIPPED_THEOREMS).expect("shipped GDL is valid")
    }

    pub fn load(predicate_source: &str, theorem_source: &str) -> Result<Self, KbError> {
        let mut warnings = Vec::new();
        let mut pdoc = gdl::parse_document(predicate_source)?;
        let tdoc = gdl::parse_document(theorem_source)?;
        if !tdoc.predicates.is_empty() {
            pdoc.predicates.extend(tdoc.predicates.iter().cloned());
        }
        if pdoc.predicates.is_empty() {
            warnings.push("predicate source declares no predicates".to_string());
        }
        let mut theorem_entries = pdoc.theorems.clone();
        theorem_entries.extend(tdoc.theorems);
        if theorem_entries.is_empty() {
            warnings.push("theorem source declares no theorems".to_string());
        }

        let mut kb = KnowledgeBase {
            predicates: BTreeMap::new(),
            order: Vec::new(),
            theorems: Vec::new(),
            theorem_index: BTreeMap::new(),
            by_head: BTreeMap::new(),
            report: LoadReport::default(),
        };
        for def in builtin::builtin_predicates() {
            kb.order.push(def.name.clone());
            kb.predicates.insert(def.name.clone(), def);
        }

        // Headers first so bodies can reference predicates declared later.
        let mut pending = Vec::new();
        for raw in &pdoc.predicates {
            let (name, params) = parse_signature(&raw.name).ok_or_else(|| KbError::Invalid {
                entry: raw.name.clone(),
                msg: format!("line {}: bad signature", raw.line),
            })?;
            let kind: PredicateKind = raw.kind.parse().map_err(|k| KbError::Invalid {
                entry: name.clone(),
                msg: format!("unknown kind `{k}`"),
            })?;
            if kb.predicates.contains_key(&name) {
                return Err(KbError::Duplicate(name));
            }
            let def = PredicateDef {
                name: name.clone(),
                kind,
                params,
                check: Vec::new(),
                multi: Vec::new(),
                extend: Vec::new(),
                native: None,
                builtin: false,
            };
            kb.order.push(name.clone());
            kb.predicates.insert(name.clone(), def);
            pending.push((name, raw));
        }
        for (name, raw) in pending {
            let def = kb.predicates[&name].clone();
            let letters = def.letters();
            let mut check = Vec::new();
            for text in &raw.check {
                match kb.parse_pattern(&name, text)? {
                    Fact::Atom(a) => check.push(a),
                    _ => {
                        return Err(KbError::Invalid {
                            entry: name,
                            msg: format!("check `{text}` must be a predicate atom"),
                        })
                    }
                }
            }
            let mut multi = Vec::new();
            for text in &raw.multi {
                let groups: Vec<String> = text.split(',').map(str::to_string).collect();
                let mut got: Vec<char> = groups.iter().flat_map(|g| g.chars()).collect();
                let mut want: Vec<char> = def.params.iter().flat_map(|g| g.chars()).collect();
                got.sort_unstable();
                want.sort_unstable();
                if got != want || groups.iter().any(|g| g.is_empty()) {
                    return Err(KbError::Invalid {
                        entry: name,
                        msg: format!("multi `{text}` is not a reordering of the parameters"),
                    });
                }
                multi.push(groups);
            }
            let mut extend = Vec::new();
            for text in &raw.extend {
                let f = kb.parse_pattern(&name, text)?;
                if matches!(f, Fact::Not(_) | Fact::Value(_)) {
                    return Err(KbError::Invalid {
                        entry: name,
                        msg: format!("extend `{text}` must be an atom or equality"),
                    });
                }
                extend.push(f);
            }
            for f in check.iter().map(|a| Fact::Atom(a.clone())).chain(extend.iter().cloned()) {
                if let Some(var) = f.points().into_iter().find(|c| !letters.contains(c)) {
                    return Err(KbError::UnboundVariable {
                        entry: name,
                        var,
                        by: "the parameter pattern",
                    });
                }
            }
            let d = kb.predicates.get_mut(&name).expect("declared");
            d.check = check;
            d.multi = multi;
            d.extend = extend;
        }

        for raw in &theorem_entries {
            let name = raw.name.clone();
            if kb.theorem_index.contains_key(&name) {
                return Err(KbError::Duplicate(name));
            }
            let premise = raw
                .premise
                .iter()
                .map(|t| kb.parse_pattern(&name, t))
                .collect::<Result<Vec<_>, _>>()?;
            let conclusion = raw
                .conclusion
                .iter()
                .map(|t| kb.parse_pattern(&name, t))
                .collect::<Result<Vec<_>, _>>()?;
            if premise.iter().any(|f| matches!(f, Fact::Value(_)))
                || conclusion.iter().any(|f| matches!(f, Fact::Not(_) | Fact::Value(_)))
            {
                return Err(KbError::Invalid {
                    entry: name,
                    msg: "negation is only allowed in premises and Value is not allowed".into(),
                });
            }
            if conclusion.is_empty() {
                return Err(KbError::Invalid {
                    entry: name,
                    msg: "theorem has no conclusion".into(),
                });
            }
            let t = TheoremDef {
                name: name.clone(),
                premise,
                conclusion,
            };
            let bound: BTreeSet<char> = t.positive().flat_map(|a| a.points()).collect();
            let rest = t
                .premise
                .iter()
                .filter(|f| !matches!(f, Fact::Atom(_)))
                .chain(&t.conclusion);
            for f in rest {
                if let Some(var) = f.points().into_iter().find(|c| !bound.contains(c)) {
                    return Err(KbError::UnboundVariable {
                        entry: name,
                        var,
                        by: "a positive premise",
                    });
                }
            }
            let idx = kb.theorems.len();
            if let Some(h) = t.head() {
                kb.by_head.entry(h.to_string()).or_default().push(idx);
            }
            kb.theorem_index.insert(name, idx);
            kb.theorems.push(t);
        }

        let mut report = LoadReport {
            theorems: kb.theorems.len(),
            ..Default::default()
        };
        for d in kb.predicates.values() {
            if d.builtin {
                report.builtin_predicates += 1;
            } else {
                report.declared_predicates += 1;
            }
            *report.predicates_by_kind.entry(d.kind).or_default() += 1;
        }
        report.warnings = warnings;
        // Closure depth diagnostics on a generic instance of every predicate.
        for name in &kb.order {
            let d = &kb.predicates[name];
            if d.native.is_some() {
                continue;
            }
            let f = Fact::Atom(Atom::new(name.clone(), d.params.clone()));
            if expand_fact_checked(&f, &kb).capped {
                report
                    .warnings
                    .push(format!("{name}: extend closure reached depth cap {EXTEND_DEPTH_CAP}"));
            }
        }
        kb.report = report;
        Ok(kb)
    }

    /// Parse a fact pattern and check that every predicate and attribute it names exists.
    fn parse_pattern(&self, entry: &str, text: &str) -> Result<Fact, KbError> {
        let f = parse_fact(text).map_err(|source| KbError::Parse {
            entry: entry.to_string(),
            text: text.to_string(),
            source,
        })?;
        self.check_names(&f).map_err(|name| KbError::UndefinedPredicate {
            entry: entry.to_string(),
            name,
        })?;
        Ok(self.canonicalize_fact(&f))
    }

    /// Ensure every predicate and attribute name used by `f` is declared.
    /// Returns the first unknown name.
    pub fn check_names(&self, f: &Fact) -> Result<(), String> {
        let exprs: Vec<&Expr> = match f {
            Fact::Atom(a) | Fact::Not(a) => {
                return if self.predicates.contains_key(&a.name) {
                    Ok(())
                } else {
                    Err(a.name.clone())
                }
            }
            Fact::Equal(l, r) => vec![l, r],
            Fact::Value(e) => vec![e],
        };
        for e in exprs {
            for t in e.attr_terms() {
                match self.predicates.get(&t.name) {
                    Some(d) if d.kind == PredicateKind::Attribution => {}
                    _ => return Err(t.name.clone()),
                }
            }
        }
        Ok(())
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDef> {
        self.predicates.get(name)
    }

    /// Predicates in declaration order (built-ins first).
    pub fn predicates(&self) -> impl Iterator<Item = &PredicateDef> {
        self.order.iter().map(move |n| &self.predicates[n])
    }

    pub fn predicate_names(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    pub fn theorems(&self) -> &[TheoremDef] {
        &self.theorems
    }

    pub fn theorem(&self, name: &str) -> Option<&TheoremDef> {
        self.theorem_index.get(name).map(|&i| &self.theorems[i])
    }

    /// Theorems whose first positive premise uses `predicate`, in declaration order.
    pub fn theorems_with_head(&self, predicate: &str) -> impl Iterator<Item = &TheoremDef> {
        self.by_head
            .get(predicate)
            .into_iter()
            .flatten()
            .map(move |&i| &self.theorems[i])
    }

    /// Regroup arguments to the declared pattern, e.g. `LengthOfLine(A,B)` to `LengthOfLine(AB)`.
    pub fn regroup(&self, name: &str, args: &[String]) -> Vec<String> {
        let Some(def) = self.predicates.get(name) else {
            return args.to_vec();
        };
        match def.native {
            Some(n) => n.regroup(args),
            None => {
                let letters: String = args.concat();
                let want: usize = def.params.iter().map(String::len).sum();
                if letters.len() != want {
                    return args.to_vec();
                }
                let mut out = Vec::with_capacity(def.params.len());
                let mut at = 0;
                for p in &def.params {
                    out.push(letters[at..at + p.len()].to_string());
                    at += p.len();
                }
                out
            }
        }
    }

    /// True when the argument shape fits the predicate's declared pattern.
    pub fn arity_ok(&self, name: &str, args: &[String]) -> bool {
        match self.predicates.get(name) {
            None => false,
            Some(d) => match d.native {
                Some(n) => n.arity_ok(args),
                None => d.bind(args).is_some(),
            },
        }
    }

    /// Every equivalent argument ordering of `atom` (itself included, first).
    pub fn variants(&self, atom: &Atom) -> Vec<Atom> {
        let mut out = vec![atom.clone()];
        let Some(def) = self.predicates.get(&atom.name) else {
            return out;
        };
        if let Some(n) = def.native {
            out.extend(n.variants(atom));
            return out;
        }
        let Some(m) = def.bind(&atom.args) else {
            return out;
        };
        for v in &def.multi {
            let args = v
                .iter()
                .map(|g| g.chars().map(|c| m[&c]).collect())
                .collect();
            let a = Atom::new(atom.name.clone(), args);
            if !out.contains(&a) {
                out.push(a);
            }
        }
        out
    }

    /// The representative ordering of `atom`: the smallest rendered variant.
    pub fn canonical_atom(&self, atom: &Atom) -> Atom {
        let regrouped = Atom::new(atom.name.clone(), self.regroup(&atom.name, &atom.args));
        self.variants(&regrouped)
            .into_iter()
            .min_by_key(|a| a.to_string())
            .expect("at least one variant")
    }

    pub fn canonical_attr(&self, t: &AttrTerm) -> AttrTerm {
        let a = self.canonical_atom(&Atom::new(t.name.clone(), t.args.clone()));
        AttrTerm::new(a.name, a.args)
    }

    pub fn canonicalize_expr(&self, e: &Expr) -> Expr {
        e.map_attrs(&mut |t| self.canonical_attr(t))
    }

    /// Regroup atom arguments and put attribute terms in representative order.
    ///
    /// Predicate atoms keep their written ordering (all orderings are
    /// materialized in the store); attribute terms are collapsed to one
    /// representative so that equal quantities are one algebraic symbol.
    pub fn canonicalize_fact(&self, f: &Fact) -> Fact {
        let regroup = |a: &Atom| Atom::new(a.name.clone(), self.regroup(&a.name, &a.args));
        match f {
            Fact::Atom(a) => Fact::Atom(regroup(a)),
            Fact::Not(a) => Fact::Not(regroup(a)),
            Fact::Equal(l, r) => Fact::Equal(self.canonicalize_expr(l), self.canonicalize_expr(r)),
            Fact::Value(e) => Fact::Value(self.canonicalize_expr(e)),
        }
    }

    /// Instantiated check atoms for a concrete atom.
    pub fn checks(&self, atom: &Atom) -> Result<Vec<Atom>, KbError> {
        let def = self
            .predicates
            .get(&atom.name)
            .ok_or_else(|| KbError::UnknownPredicate(atom.name.clone()))?;
        if def.native.is_some() {
            return Ok(Vec::new());
        }
        let m = def.bind(&atom.args).ok_or_else(|| KbError::Invalid {
            entry: atom.to_string(),
            msg: format!("arguments do not fit {}", def.signature()),
        })?;
        Ok(def
            .check
            .iter()
            .map(|c| Atom::new(c.name.clone(), c.args.iter().map(|g| g.chars().map(|x| m[&x]).collect()).collect()))
            .collect())
    }

    /// Facts directly asserted by `atom` (one extend step, no closure).
    pub fn extends(&self, atom: &Atom) -> Vec<Fact> {
        let Some(def) = self.predicates.get(&atom.name) else {
            return Vec::new();
        };
        if let Some(n) = def.native {
            return n.extends(atom);
        }
        let Some(m) = def.bind(&atom.args) else {
            return Vec::new();
        };
        def.extend
            .iter()
            .map(|f| self.canonicalize_fact(&f.map_points(&|c| m[&c])))
            .collect()
    }
}

/// Split `Name(G1,G2)` into its name and parameter groups.
fn parse_signature(sig: &str) -> Option<(String, Vec<String>)> {
    let sig: String = sig.chars().filter(|c| !c.is_whitespace()).collect();
    let (name, rest) = sig.split_once('(')?;
    let inner = rest.strip_suffix(')')?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric()) {
        return None;
    }
    let params: Vec<String> = inner.split(',').map(str::to_string).collect();
    let all: Vec<char> = params.iter().flat_map(|g| g.chars()).collect();
    let distinct: BTreeSet<char> = all.iter().copied().collect();
    if params.iter().any(|g| g.is_empty() || !g.chars().all(|c| c.is_ascii_uppercase()))
        || distinct.len() != all.len()
    {
        return None;
    }
    Some((name.to_string(), params))
}

#[cfg(test)]
mod tests;
