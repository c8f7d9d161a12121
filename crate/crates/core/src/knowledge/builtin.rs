//! Built-in predicates and the atom store that gives them native semantics.

use std::collections::{BTreeMap, BTreeSet};

use crate::cdl::{Atom, Fact};

use super::{gdl, KnowledgeBase, PredicateDef, PredicateKind, Substitution};

/// Storage/matching strategy for variadic built-ins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Native {
    /// `Shape(AB,BC,...)`: any number of groups, stored verbatim.
    Shape,
    /// `Collinear(ABCD)`: an ordered point sequence; any subsequence (either direction) holds.
    Sequence,
    /// `Coplanar(U,ABC)` / `Cospherical(O,ABC)` / `Cocircular(O,ABC)`: a named
    /// carrier plus a member set; stating it twice with the same name merges members.
    NamedSet { anonymous: bool },
}

const PLAIN_BUILTINS: &str = "\
predicate: Point(A)
kind: BasicEntity

predicate: Line(AB)
kind: BasicEntity
check: Point(A) & Point(B)
multi: BA

predicate: Plane(U)
kind: BasicEntity

predicate: Sphere(O)
kind: BasicEntity
check: Point(O)

predicate: Circle(O)
kind: BasicEntity
check: Point(O)
";

pub(crate) fn builtin_predicates() -> Vec<PredicateDef> {
    let native = |name: &str, n: Native| PredicateDef {
        name: name.to_string(),
        kind: PredicateKind::Construction,
        params: Vec::new(),
        check: Vec::new(),
        multi: Vec::new(),
        extend: Vec::new(),
        native: Some(n),
        builtin: true,
    };
    let mut out = vec![
        native("Shape", Native::Shape),
        native("Collinear", Native::Sequence),
        native("Coplanar", Native::NamedSet { anonymous: true }),
        native("Cospherical", Native::NamedSet { anonymous: false }),
        native("Cocircular", Native::NamedSet { anonymous: false }),
    ];
    let doc = gdl::parse_document(PLAIN_BUILTINS).expect("built-in GDL parses");
    for p in doc.predicates {
        let (name, params) = super::parse_signature(&p.name).expect("built-in signature");
        let point = |c: char| Atom::new("Point", vec![c.to_string()]);
        let check = match name.as_str() {
            "Line" => vec![point('A'), point('B')],
            "Sphere" | "Circle" => vec![point('O')],
            _ => Vec::new(),
        };
        let multi = p
            .multi
            .iter()
            .map(|m| m.split(',').map(str::to_string).collect())
            .collect();
        out.push(PredicateDef {
            name,
            kind: PredicateKind::BasicEntity,
            params,
            check,
            multi,
            extend: Vec::new(),
            native: None,
            builtin: true,
        });
    }
    out
}

fn point(c: char) -> Fact {
    Fact::Atom(Atom::new("Point", vec![c.to_string()]))
}

fn line(a: char, b: char) -> Fact {
    Fact::Atom(Atom::new("Line", vec![format!("{a}{b}")]))
}

fn single(name: &str, c: char) -> Fact {
    Fact::Atom(Atom::new(name, vec![c.to_string()]))
}

impl Native {
    pub(crate) fn regroup(self, args: &[String]) -> Vec<String> {
        match self {
            Native::Shape => args.to_vec(),
            Native::Sequence => vec![args.concat()],
            Native::NamedSet { anonymous } => {
                let first_is_name = args.len() > 1 || !anonymous;
                match args.split_first() {
                    Some((first, rest)) if first_is_name && first.len() == 1 => {
                        let members = rest.concat();
                        if members.is_empty() {
                            vec![first.clone()]
                        } else {
                            vec![first.clone(), members]
                        }
                    }
                    _ => args.to_vec(),
                }
            }
        }
    }

    pub(crate) fn arity_ok(self, args: &[String]) -> bool {
        match self {
            Native::Shape => !args.is_empty(),
            Native::Sequence => args.len() == 1 && args[0].len() >= 2,
            Native::NamedSet { anonymous } => match args.len() {
                1 => anonymous || args[0].len() == 1,
                2 => args[0].len() == 1,
                _ => false,
            },
        }
    }

    pub(crate) fn variants(self, atom: &Atom) -> Vec<Atom> {
        match self {
            Native::Sequence if atom.args.len() == 1 => {
                let rev: String = atom.args[0].chars().rev().collect();
                if rev == atom.args[0] {
                    Vec::new()
                } else {
                    vec![Atom::new(atom.name.clone(), vec![rev])]
                }
            }
            _ => Vec::new(),
        }
    }

    pub(crate) fn extends(self, atom: &Atom) -> Vec<Fact> {
        let mut out = Vec::new();
        match self {
            Native::Shape => {
                for g in &atom.args {
                    let cs: Vec<char> = g.chars().collect();
                    out.extend(cs.iter().map(|&c| point(c)));
                    match cs.len() {
                        0 | 1 => {}
                        2 => out.push(line(cs[0], cs[1])),
                        n => out.extend((0..n).map(|i| line(cs[i], cs[(i + 1) % n]))),
                    }
                }
            }
            Native::Sequence => {
                let cs: Vec<char> = atom.points().collect();
                out.extend(cs.iter().map(|&c| point(c)));
                for i in 0..cs.len() {
                    for j in i + 1..cs.len() {
                        out.push(line(cs[i], cs[j]));
                    }
                }
            }
            Native::NamedSet { anonymous } => {
                let carrier = match atom.name.as_str() {
                    "Coplanar" => "Plane",
                    "Cospherical" => "Sphere",
                    _ => "Circle",
                };
                let named = atom.args.len() == 2 || !anonymous;
                let (name, members) = match (named, atom.args.as_slice()) {
                    (true, [n, rest @ ..]) => (n.chars().next(), rest.concat()),
                    (_, args) => (None, args.concat()),
                };
                if let Some(n) = name {
                    out.push(single(carrier, n));
                    if carrier != "Plane" {
                        out.push(point(n));
                    }
                }
                out.extend(members.chars().map(point));
            }
        }
        out
    }
}

/// Indexed set of predicate atoms with native semantics for the variadic built-ins.
///
/// Ordinary atoms are stored together with all their multi orderings so that
/// lookup and pattern matching are plain membership tests.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AtomBase {
    plain: BTreeMap<String, BTreeSet<Vec<String>>>,
    canon: BTreeSet<Atom>,
    sequences: BTreeMap<String, BTreeSet<Vec<char>>>,
    sets: BTreeMap<String, BTreeMap<char, BTreeSet<char>>>,
    anon: BTreeMap<String, BTreeSet<BTreeSet<char>>>,
}

fn is_subsequence(needle: &[char], hay: &[char]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|c| it.any(|h| h == c))
}

/// Extend `sub` with `p -> c`, keeping the map injective.
pub(crate) fn bind_char(sub: &mut Substitution, p: char, c: char) -> bool {
    match sub.get(&p) {
        Some(&x) => x == c,
        None => {
            if sub.values().any(|&v| v == c) {
                return false;
            }
            sub.insert(p, c);
            true
        }
    }
}

/// All injective extensions of `sub` mapping each letter of `pattern` to a distinct member.
fn assign_into(pattern: &[char], members: &BTreeSet<char>, sub: &Substitution, out: &mut Vec<Substitution>) {
    match pattern.split_first() {
        None => out.push(sub.clone()),
        Some((&p, rest)) => {
            if let Some(&c) = sub.get(&p) {
                if members.contains(&c) {
                    assign_into(rest, members, sub, out);
                }
                return;
            }
            for &c in members {
                let mut s = sub.clone();
                if bind_char(&mut s, p, c) {
                    assign_into(rest, members, &s, out);
                }
            }
        }
    }
}

fn assign_ordered(pattern: &[char], seq: &[char], sub: &Substitution, out: &mut Vec<Substitution>) {
    let Some((&p, rest)) = pattern.split_first() else {
        out.push(sub.clone());
        return;
    };
    for (i, &c) in seq.iter().enumerate() {
        let mut s = sub.clone();
        if bind_char(&mut s, p, c) {
            assign_ordered(rest, &seq[i + 1..], &s, out);
        }
    }
}

impl AtomBase {
    pub fn new() -> Self {
        Self::default()
    }

    fn native(kb: &KnowledgeBase, name: &str) -> Option<Native> {
        kb.predicate(name).and_then(|d| d.native)
    }

    /// Insert an atom; returns whether anything not already entailed was added.
    pub fn insert(&mut self, kb: &KnowledgeBase, atom: &Atom) -> bool {
        let atom = Atom::new(atom.name.clone(), kb.regroup(&atom.name, &atom.args));
        if self.holds(kb, &atom) {
            return false;
        }
        match Self::native(kb, &atom.name) {
            Some(Native::Sequence) => {
                let seq: Vec<char> = atom.points().collect();
                let rev: Vec<char> = seq.iter().rev().copied().collect();
                let store = self.sequences.entry(atom.name.clone()).or_default();
                store.retain(|s| !is_subsequence(s, &seq) && !is_subsequence(s, &rev));
                store.insert(seq);
                store.insert(rev);
            }
            Some(Native::NamedSet { anonymous }) => {
                let named = atom.args.len() == 2 || !anonymous;
                if named {
                    let name = atom.args[0].chars().next().unwrap_or('?');
                    let members: BTreeSet<char> = atom.args[1..].iter().flat_map(|g| g.chars()).collect();
                    let entry = self.sets.entry(atom.name.clone()).or_default().entry(name).or_default();
                    entry.extend(members.iter().copied());
                    let merged = entry.clone();
                    if let Some(a) = self.anon.get_mut(&atom.name) {
                        a.retain(|s| !s.is_subset(&merged));
                    }
                } else {
                    let members: BTreeSet<char> = atom.points().collect();
                    let a = self.anon.entry(atom.name.clone()).or_default();
                    a.retain(|s| !s.is_subset(&members));
                    a.insert(members);
                }
            }
            Some(Native::Shape) | None => {
                self.canon.insert(kb.canonical_atom(&atom));
                let entry = self.plain.entry(atom.name.clone()).or_default();
                for v in kb.variants(&atom) {
                    entry.insert(v.args);
                }
            }
        }
        true
    }

    /// Whether `atom` holds in the store under the predicate's semantics.
    pub fn holds(&self, kb: &KnowledgeBase, atom: &Atom) -> bool {
        let args = kb.regroup(&atom.name, &atom.args);
        match Self::native(kb, &atom.name) {
            Some(Native::Sequence) => {
                let q: Vec<char> = args.iter().flat_map(|g| g.chars()).collect();
                self.sequences
                    .get(&atom.name)
                    .is_some_and(|ss| ss.iter().any(|s| is_subsequence(&q, s)))
            }
            Some(Native::NamedSet { anonymous }) => {
                let named = args.len() == 2 || !anonymous;
                let sets = self.sets.get(&atom.name);
                if named {
                    let name = args[0].chars().next().unwrap_or('?');
                    let want: BTreeSet<char> = args[1..].iter().flat_map(|g| g.chars()).collect();
                    sets.and_then(|s| s.get(&name)).is_some_and(|m| want.is_subset(m))
                } else {
                    let want: BTreeSet<char> = args.iter().flat_map(|g| g.chars()).collect();
                    sets.into_iter().flat_map(|s| s.values()).any(|m| want.is_subset(m))
                        || self
                            .anon
                            .get(&atom.name)
                            .is_some_and(|a| a.iter().any(|m| want.is_subset(m)))
                }
            }
            Some(Native::Shape) | None => self.plain.get(&atom.name).is_some_and(|s| s.contains(&args)),
        }
    }

    /// All injective extensions of `sub` under which `pattern` holds.
    pub fn matches(&self, kb: &KnowledgeBase, pattern: &Atom, sub: &Substitution) -> Vec<Substitution> {
        let mut out = Vec::new();
        match Self::native(kb, &pattern.name) {
            Some(Native::Sequence) => {
                let p: Vec<char> = pattern.points().collect();
                for s in self.sequences.get(&pattern.name).into_iter().flatten() {
                    assign_ordered(&p, s, sub, &mut out);
                }
            }
            Some(Native::NamedSet { anonymous }) => {
                let named = pattern.args.len() == 2 || !anonymous;
                if named {
                    let n = pattern.args[0].chars().next().unwrap_or('?');
                    let p: Vec<char> = pattern.args[1..].iter().flat_map(|g| g.chars()).collect();
                    for (&name, members) in self.sets.get(&pattern.name).into_iter().flatten() {
                        let mut s = sub.clone();
                        if bind_char(&mut s, n, name) {
                            assign_into(&p, members, &s, &mut out);
                        }
                    }
                } else {
                    let p: Vec<char> = pattern.points().collect();
                    let named = self.sets.get(&pattern.name).into_iter().flat_map(|s| s.values());
                    let anon = self.anon.get(&pattern.name).into_iter().flatten();
                    for members in named.chain(anon) {
                        assign_into(&p, members, sub, &mut out);
                    }
                }
            }
            Some(Native::Shape) | None => {
                for args in self.plain.get(&pattern.name).into_iter().flatten() {
                    if args.len() != pattern.args.len() {
                        continue;
                    }
                    let mut s = sub.clone();
                    let ok = pattern.args.iter().zip(args).all(|(pg, ag)| {
                        pg.len() == ag.len() && pg.chars().zip(ag.chars()).all(|(p, c)| bind_char(&mut s, p, c))
                    });
                    if ok {
                        out.push(s);
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// One representative atom per stored fact, in a stable order.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out: Vec<Atom> = self.canon.iter().cloned().collect();
        for (name, seqs) in &self.sequences {
            for s in seqs {
                let rev: Vec<char> = s.iter().rev().copied().collect();
                if *s <= rev {
                    out.push(Atom::new(name.clone(), vec![s.iter().collect()]));
                }
            }
        }
        for (name, sets) in &self.sets {
            for (n, m) in sets {
                let mut args = vec![n.to_string()];
                if !m.is_empty() {
                    args.push(m.iter().collect());
                }
                out.push(Atom::new(name.clone(), args));
            }
        }
        for (name, sets) in &self.anon {
            for m in sets {
                out.push(Atom::new(name.clone(), vec![m.iter().collect()]));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.atoms().len()
    }

    pub fn is_empty(&self) -> bool {
        self.canon.is_empty() && self.sequences.is_empty() && self.sets.is_empty() && self.anon.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Atom {
        match crate::cdl::parse_fact(s).unwrap() {
            Fact::Atom(a) => a,
            _ => panic!(),
        }
    }

    fn kb() -> KnowledgeBase {
        KnowledgeBase::load("", "").unwrap()
    }

    #[test]
    fn collinear_subsequences_hold_both_ways() {
        let kb = kb();
        let mut s = AtomBase::new();
        assert!(s.insert(&kb, &a("Collinear(PABQ)")));
        assert!(s.holds(&kb, &a("Collinear(PAQ)")));
        assert!(s.holds(&kb, &a("Collinear(QBP)")));
        assert!(!s.holds(&kb, &a("Collinear(APB)")));
        assert!(!s.insert(&kb, &a("Collinear(ABQ)")));
    }

    #[test]
    fn coplanar_sets_merge_by_name() {
        let kb = kb();
        let mut s = AtomBase::new();
        s.insert(&kb, &a("Coplanar(U,ABC)"));
        assert!(!s.holds(&kb, &a("Coplanar(U,AD)")));
        assert!(s.insert(&kb, &a("Coplanar(U,CD)")));
        assert!(s.holds(&kb, &a("Coplanar(U,AD)")));
        assert!(s.holds(&kb, &a("Coplanar(ABD)")));
        assert!(!s.holds(&kb, &a("Coplanar(V,A)")));
    }

    #[test]
    fn line_orderings_materialize() {
        let kb = kb();
        let mut s = AtomBase::new();
        s.insert(&kb, &a("Line(BA)"));
        assert!(s.holds(&kb, &a("Line(AB)")));
        assert_eq!(s.atoms(), vec![a("Line(AB)")]);
    }

    #[test]
    fn matching_is_injective() {
        let kb = kb();
        let mut s = AtomBase::new();
        s.insert(&kb, &a("Coplanar(U,AB)"));
        let got = s.matches(&kb, &a("Coplanar(U,XY)"), &Substitution::new());
        assert_eq!(got.len(), 2);
        assert!(got.iter().all(|m| m[&'X'] != m[&'Y']));
    }
}
