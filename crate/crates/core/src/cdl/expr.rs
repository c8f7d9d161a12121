use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use thiserror::Error;

use super::value::{fmt_rational, ArithmeticError, Exact};

/// An attribute term such as `LengthOfLine(AB)` or `VolumeOfCone(O,P)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttrTerm {
    pub name: String,
    pub args: Vec<String>,
}

impl AttrTerm {
    pub fn new(name: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            name: name.into(),
            args,
        }
    }
}

impl fmt::Display for AttrTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.args.join(","))
    }
}

/// A leaf that can carry a value: an attribute term or a free variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Attr(AttrTerm),
    Var(String),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Attr(a) => a.fmt(f),
            Symbol::Var(v) => f.write_str(v),
        }
    }
}

/// Algebraic expression over attribute terms.
///
/// `Add` and `Mul` are n-ary; build them through [`Expr::add`] and
/// [`Expr::mul`] so children stay flattened and canonically sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Num(BigRational),
    Pi,
    /// Square root of a non-negative rational literal, e.g. `sqrt(3)`.
    Sqrt(BigRational),
    Attr(AttrTerm),
    Var(String),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

/// Names accepted as algebraic operators inside CDL.
pub const OPERATORS: [&str; 5] = ["Value", "Add", "Sub", "Mul", "Div"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain error: {0}")]
    Domain(#[from] ArithmeticError),
    #[error("unresolved terms: {}", .0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "))]
    Unresolved(BTreeSet<Symbol>),
}

impl Expr {
    pub fn int(n: i64) -> Self {
        Expr::Num(BigRational::from_integer(n.into()))
    }

    pub fn attr(name: &str, args: &[&str]) -> Self {
        Expr::Attr(AttrTerm::new(name, args.iter().map(|s| s.to_string()).collect()))
    }

    pub fn add(children: Vec<Expr>) -> Self {
        Self::nary(children, true)
    }

    pub fn mul(children: Vec<Expr>) -> Self {
        Self::nary(children, false)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Self {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Self {
        Expr::Div(Box::new(a), Box::new(b))
    }

    fn nary(children: Vec<Expr>, is_add: bool) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match (c, is_add) {
                (Expr::Add(inner), true) | (Expr::Mul(inner), false) => flat.extend(inner),
                (c, _) => flat.push(c),
            }
        }
        if flat.len() == 1 {
            return flat.pop().expect("one child");
        }
        flat.sort_by_cached_key(|e| (!e.is_constant_leaf(), e.to_string()));
        if is_add {
            Expr::Add(flat)
        } else {
            Expr::Mul(flat)
        }
    }

    fn is_constant_leaf(&self) -> bool {
        matches!(self, Expr::Num(_) | Expr::Pi | Expr::Sqrt(_))
    }

    /// All attribute terms and variables occurring in the expression.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Expr::Num(_) | Expr::Pi | Expr::Sqrt(_) => {}
            Expr::Attr(a) => {
                out.insert(Symbol::Attr(a.clone()));
            }
            Expr::Var(v) => {
                out.insert(Symbol::Var(v.clone()));
            }
            Expr::Add(cs) | Expr::Mul(cs) => cs.iter().for_each(|c| c.collect_symbols(out)),
            Expr::Sub(a, b) | Expr::Div(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
        }
    }

    pub fn attr_terms(&self) -> Vec<&AttrTerm> {
        let mut out = Vec::new();
        self.visit_attrs(&mut |a| out.push(a));
        out
    }

    fn visit_attrs<'a>(&'a self, f: &mut dyn FnMut(&'a AttrTerm)) {
        match self {
            Expr::Attr(a) => f(a),
            Expr::Add(cs) | Expr::Mul(cs) => cs.iter().for_each(|c| c.visit_attrs(f)),
            Expr::Sub(a, b) | Expr::Div(a, b) => {
                a.visit_attrs(f);
                b.visit_attrs(f);
            }
            _ => {}
        }
    }

    /// Rebuild the expression with every attribute term passed through `f`.
    pub fn map_attrs(&self, f: &mut dyn FnMut(&AttrTerm) -> AttrTerm) -> Expr {
        match self {
            Expr::Attr(a) => Expr::Attr(f(a)),
            Expr::Add(cs) => Expr::add(cs.iter().map(|c| c.map_attrs(f)).collect()),
            Expr::Mul(cs) => Expr::mul(cs.iter().map(|c| c.map_attrs(f)).collect()),
            Expr::Sub(a, b) => Expr::sub(a.map_attrs(f), b.map_attrs(f)),
            Expr::Div(a, b) => Expr::div(a.map_attrs(f), b.map_attrs(f)),
            other => other.clone(),
        }
    }

    /// Evaluate exactly under `bindings`.
    ///
    /// Unbound symbols are collected and reported together; arithmetic
    /// failures such as a zero denominator surface as [`EvalError::Domain`].
    pub fn evaluate(&self, bindings: &BTreeMap<Symbol, Exact>) -> Result<Exact, EvalError> {
        let missing: BTreeSet<Symbol> = self
            .symbols()
            .into_iter()
            .filter(|s| !bindings.contains_key(s))
            .collect();
        if !missing.is_empty() {
            return Err(EvalError::Unresolved(missing));
        }
        Ok(self.eval_bound(bindings)?)
    }

    fn eval_bound(&self, b: &BTreeMap<Symbol, Exact>) -> Result<Exact, ArithmeticError> {
        Ok(match self {
            Expr::Num(r) => Exact::rational(r.clone()),
            Expr::Pi => Exact::pi(),
            Expr::Sqrt(r) => Exact::sqrt_of_rational(r)?,
            Expr::Attr(a) => b[&Symbol::Attr(a.clone())].clone(),
            Expr::Var(v) => b[&Symbol::Var(v.clone())].clone(),
            Expr::Add(cs) => {
                let mut acc = Exact::zero();
                for c in cs {
                    acc = acc.add(&c.eval_bound(b)?);
                }
                acc
            }
            Expr::Mul(cs) => {
                let mut acc = Exact::one();
                for c in cs {
                    acc = acc.mul(&c.eval_bound(b)?)?;
                }
                acc
            }
            Expr::Sub(x, y) => x.eval_bound(b)?.sub(&y.eval_bound(b)?),
            Expr::Div(x, y) => x.eval_bound(b)?.div(&y.eval_bound(b)?)?,
        })
    }

    /// Convert an exact value back into a constant expression.
    pub fn from_exact(v: &Exact) -> Expr {
        let mut terms = Vec::new();
        for (k, s, c) in v.terms() {
            let mut factors = vec![Expr::Num(c.clone())];
            if s != 1 {
                factors.push(Expr::Sqrt(BigRational::from_integer(s.into())));
            }
            match k {
                k if k > 0 => factors.extend(std::iter::repeat_n(Expr::Pi, k as usize)),
                0 => {}
                k => {
                    let denom = Expr::mul(std::iter::repeat_n(Expr::Pi, (-k) as usize).collect());
                    let num = Expr::mul(factors);
                    terms.push(Expr::div(num, denom));
                    continue;
                }
            }
            if factors.len() > 1 && factors[0] == Expr::int(1) {
                factors.remove(0);
            }
            terms.push(Expr::mul(factors));
        }
        if terms.is_empty() {
            return Expr::int(0);
        }
        Expr::add(terms)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(r) => f.write_str(&fmt_rational(r)),
            Expr::Pi => f.write_str("pi"),
            Expr::Sqrt(r) => write!(f, "sqrt({})", fmt_rational(r)),
            Expr::Attr(a) => a.fmt(f),
            Expr::Var(v) => f.write_str(v),
            Expr::Add(cs) => write_call(f, "Add", cs),
            Expr::Mul(cs) => write_call(f, "Mul", cs),
            Expr::Sub(a, b) => write!(f, "Sub({a},{b})"),
            Expr::Div(a, b) => write!(f, "Div({a},{b})"),
        }
    }
}

fn write_call(f: &mut fmt::Formatter<'_>, name: &str, cs: &[Expr]) -> fmt::Result {
    write!(f, "{name}(")?;
    for (i, c) in cs.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        fmt::Display::fmt(c, f)?;
    }
    f.write_str(")")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdl::parse_expr;

    fn bind(pairs: &[(&str, i64)]) -> BTreeMap<Symbol, Exact> {
        pairs
            .iter()
            .map(|(k, v)| (Symbol::Var(k.to_string()), Exact::integer(*v)))
            .collect()
    }

    #[test]
    fn sphere_formula_evaluates_to_36_pi() {
        let e = parse_expr("Mul(4/3,pi,r,r,r)").unwrap();
        let v = e.evaluate(&bind(&[("r", 3)])).unwrap();
        assert_eq!(v, Exact::integer(36).mul(&Exact::pi()).unwrap());
    }

    #[test]
    fn additive_identity() {
        let e = parse_expr("Add(x,0)").unwrap();
        assert_eq!(e.evaluate(&bind(&[("x", 5)])).unwrap(), Exact::integer(5));
    }

    #[test]
    fn zero_denominator_is_domain_error() {
        let e = parse_expr("Div(1,Sub(2,2))").unwrap();
        assert_eq!(
            e.evaluate(&BTreeMap::new()),
            Err(EvalError::Domain(ArithmeticError::DivisionByZero))
        );
    }

    #[test]
    fn unbound_terms_are_listed() {
        let e = parse_expr("Mul(LengthOfLine(AB),x)").unwrap();
        match e.evaluate(&BTreeMap::new()) {
            Err(EvalError::Unresolved(s)) => assert_eq!(s.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nary_constructors_flatten_and_sort() {
        let e = Expr::mul(vec![
            Expr::Var("r".into()),
            Expr::mul(vec![Expr::Pi, Expr::int(4)]),
        ]);
        assert_eq!(e.to_string(), "Mul(4,pi,r)");
    }

    #[test]
    fn exact_values_convert_back() {
        for s in ["36*pi", "2*sqrt(3)", "1/2 + pi", "3/pi"] {
            let e = parse_expr(s).unwrap();
            let v = e.evaluate(&BTreeMap::new()).unwrap();
            let back = Expr::from_exact(&v).evaluate(&BTreeMap::new()).unwrap();
            assert_eq!(v, back, "{s}");
        }
    }
}
