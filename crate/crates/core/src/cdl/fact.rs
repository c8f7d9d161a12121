use std::fmt;

use super::expr::Expr;

/// A predicate applied to point-argument groups, e.g. `Shape(AB,BC,CD,DA)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub name: String,
    pub args: Vec<String>,
}

impl Atom {
    pub fn new(name: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            name: name.into(),
            args,
        }
    }

    /// Convenience for tests and fixtures: `Atom::of("Line", &["AB"])`.
    pub fn of(name: &str, args: &[&str]) -> Self {
        Self::new(name, args.iter().map(|s| s.to_string()).collect())
    }

    pub fn points(&self) -> impl Iterator<Item = char> + '_ {
        self.args.iter().flat_map(|g| g.chars())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.args.join(","))
    }
}

/// One CDL statement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fact {
    Atom(Atom),
    Equal(Expr, Expr),
    /// Negated atom; only legal in theorem premises.
    Not(Atom),
    /// Goal wrapper `Value(expr)`; only legal as the outermost operator.
    Value(Expr),
}

impl Fact {
    pub fn atom(name: &str, args: &[&str]) -> Self {
        Fact::Atom(Atom::of(name, args))
    }

    /// Every point letter mentioned anywhere in the fact.
    pub fn points(&self) -> Vec<char> {
        let mut out = Vec::new();
        let push_expr = |e: &Expr, out: &mut Vec<char>| {
            for a in e.attr_terms() {
                out.extend(a.args.iter().flat_map(|g| g.chars()));
            }
        };
        match self {
            Fact::Atom(a) | Fact::Not(a) => out.extend(a.points()),
            Fact::Equal(l, r) => {
                push_expr(l, &mut out);
                push_expr(r, &mut out);
            }
            Fact::Value(e) => push_expr(e, &mut out),
        }
        out
    }

    /// Map every point letter through `f` (used for pattern instantiation).
    pub fn map_points(&self, f: &dyn Fn(char) -> char) -> Fact {
        let map_groups =
            |args: &[String]| -> Vec<String> { args.iter().map(|g| g.chars().map(f).collect()).collect() };
        let map_expr = |e: &Expr| {
            e.map_attrs(&mut |a| super::AttrTerm::new(a.name.clone(), map_groups(&a.args)))
        };
        match self {
            Fact::Atom(a) => Fact::Atom(Atom::new(a.name.clone(), map_groups(&a.args))),
            Fact::Not(a) => Fact::Not(Atom::new(a.name.clone(), map_groups(&a.args))),
            Fact::Equal(l, r) => Fact::Equal(map_expr(l), map_expr(r)),
            Fact::Value(e) => Fact::Value(map_expr(e)),
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Atom(a) => a.fmt(f),
            Fact::Not(a) => write!(f, "~{a}"),
            Fact::Equal(l, r) => write!(f, "Equal({l},{r})"),
            Fact::Value(e) => write!(f, "Value({e})"),
        }
    }
}

/// Canonical whitespace-free rendering.
pub fn render_fact(f: &Fact) -> String {
    f.to_string()
}
