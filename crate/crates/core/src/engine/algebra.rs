//! Exact equation solving over attribute terms.
//!
//! Each equation `l = r` becomes a polynomial `p = 0` after clearing
//! denominators. The solver then alternates two moves until nothing changes:
//! substitute every known value and isolate any equation left with one
//! unknown, and run Gaussian elimination over the equations that are linear
//! in their remaining unknowns. Every derived value carries the set of
//! equation ids it depends on, which is what a contradiction reports.

use std::collections::{BTreeMap, BTreeSet};

use crate::cdl::{ArithmeticError, Exact, Expr, Symbol};

type Mono = BTreeMap<Symbol, u32>;

/// Polynomial with exact coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Mono, Exact>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Exact) -> Self {
        let mut p = Self::zero();
        p.push(Mono::new(), c);
        p
    }

    pub fn symbol(s: Symbol) -> Self {
        let mut p = Self::zero();
        p.push([(s, 1)].into(), Exact::one());
        p
    }

    fn push(&mut self, m: Mono, c: Exact) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(Exact::zero);
        *slot = slot.add(&c);
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Exact> {
        match self.terms.len() {
            0 => Some(Exact::zero()),
            1 => self.terms.get(&Mono::new()).cloned(),
            _ => None,
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut p = self.clone();
        for (m, c) in &o.terms {
            p.push(m.clone(), c.clone());
        }
        p
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Poly) -> Result<Poly, ArithmeticError> {
        let mut p = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let mut m = m1.clone();
                for (s, k) in m2 {
                    *m.entry(s.clone()).or_default() += k;
                }
                p.push(m, c1.mul(c2)?);
            }
        }
        Ok(p)
    }

    pub fn scale(&self, c: &Exact) -> Result<Poly, ArithmeticError> {
        self.mul(&Poly::constant(c.clone()))
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.terms.keys().flat_map(|m| m.keys().cloned()).collect()
    }

    pub fn is_linear(&self) -> bool {
        self.terms.keys().all(|m| m.values().sum::<u32>() <= 1)
    }

    /// Replace known symbols by their values.
    pub fn substitute(&self, values: &BTreeMap<Symbol, Exact>) -> Result<Poly, ArithmeticError> {
        let mut p = Poly::zero();
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut rest = Mono::new();
            for (s, &k) in m {
                match values.get(s) {
                    Some(v) => coeff = coeff.mul(&v.pow(k)?)?,
                    None => {
                        rest.insert(s.clone(), k);
                    }
                }
            }
            p.push(rest, coeff);
        }
        Ok(p)
    }

    fn linear_coeff(&self, s: &Symbol) -> Exact {
        let m: Mono = [(s.clone(), 1)].into();
        self.terms.get(&m).cloned().unwrap_or_else(Exact::zero)
    }

    /// Solve a polynomial in exactly one unknown, taking the positive root
    /// for pure powers. Returns `None` when the shape is out of scope.
    fn isolate(&self) -> Option<(Symbol, Result<Exact, ArithmeticError>)> {
        let syms = self.symbols();
        if syms.len() != 1 {
            return None;
        }
        let s = syms.into_iter().next().expect("one symbol");
        let constant = self.terms.get(&Mono::new()).cloned().unwrap_or_else(Exact::zero);
        let powers: Vec<(u32, &Exact)> = self
            .terms
            .iter()
            .filter(|(m, _)| !m.is_empty())
            .map(|(m, c)| (m[&s], c))
            .collect();
        if powers.len() != 1 {
            return None;
        }
        let (k, a) = powers[0];
        // a * s^k + constant = 0
        let rhs = match constant.neg().div(a) {
            Ok(v) => v,
            Err(e) => return Some((s, Err(e))),
        };
        let v = match k {
            1 => Ok(rhs),
            2 => rhs.sqrt(),
            3 => rhs.cbrt(),
            _ => return None,
        };
        Some((s, v))
    }
}

/// Convert an expression to `numerator / denominator` polynomials.
pub fn to_fraction(e: &Expr) -> Result<(Poly, Poly), ArithmeticError> {
    let one = || Poly::constant(Exact::one());
    Ok(match e {
        Expr::Num(r) => (Poly::constant(Exact::rational(r.clone())), one()),
        Expr::Pi => (Poly::constant(Exact::pi()), one()),
        Expr::Sqrt(r) => (Poly::constant(Exact::sqrt_of_rational(r)?), one()),
        Expr::Attr(a) => (Poly::symbol(Symbol::Attr(a.clone())), one()),
        Expr::Var(v) => (Poly::symbol(Symbol::Var(v.clone())), one()),
        Expr::Add(cs) => {
            let mut acc = (Poly::zero(), one());
            for c in cs {
                acc = add_fractions(acc, to_fraction(c)?)?;
            }
            acc
        }
        Expr::Sub(a, b) => {
            let (n, d) = to_fraction(b)?;
            add_fractions(to_fraction(a)?, (n.neg(), d))?
        }
        Expr::Mul(cs) => {
            let mut acc = (one(), one());
            for c in cs {
                let (n, d) = to_fraction(c)?;
                acc = simplify(acc.0.mul(&n)?, acc.1.mul(&d)?)?;
            }
            acc
        }
        Expr::Div(a, b) => {
            let (n1, d1) = to_fraction(a)?;
            let (n2, d2) = to_fraction(b)?;
            if n2.is_zero() {
                return Err(ArithmeticError::DivisionByZero);
            }
            simplify(n1.mul(&d2)?, d1.mul(&n2)?)?
        }
    })
}

fn add_fractions(a: (Poly, Poly), b: (Poly, Poly)) -> Result<(Poly, Poly), ArithmeticError> {
    if a.1 == b.1 {
        return Ok((a.0.add(&b.0), a.1));
    }
    simplify(a.0.mul(&b.1)?.add(&b.0.mul(&a.1)?), a.1.mul(&b.1)?)
}

/// Fold an invertible constant denominator into the numerator.
fn simplify(n: Poly, d: Poly) -> Result<(Poly, Poly), ArithmeticError> {
    match d.as_constant() {
        Some(c) if c.is_monomial() => Ok((n.scale(&c.recip()?)?, Poly::constant(Exact::one()))),
        Some(c) if c.is_zero() => Err(ArithmeticError::DivisionByZero),
        _ => Ok((n, d)),
    }
}

/// `l = r` as a polynomial that must vanish.
pub fn equation_poly(l: &Expr, r: &Expr) -> Result<Poly, ArithmeticError> {
    let (nl, dl) = to_fraction(l)?;
    let (nr, dr) = to_fraction(r)?;
    Ok(nl.mul(&dr)?.sub(&nr.mul(&dl)?))
}

/// Ids of the equations a derived fact rests on.
pub type Support = BTreeSet<usize>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Solution {
    pub values: BTreeMap<Symbol, Exact>,
    pub support: BTreeMap<Symbol, Support>,
}

impl Solution {
    /// Exact value of `e` if every symbol in it is determined.
    pub fn value_of(&self, e: &Expr) -> Option<Exact> {
        e.evaluate(&self.values).ok()
    }

    /// Union of the supports of every symbol in `e`.
    pub fn support_of(&self, e: &Expr) -> Support {
        e.symbols()
            .iter()
            .filter_map(|s| self.support.get(s))
            .flatten()
            .copied()
            .collect()
    }
}

/// Equation ids that are jointly inconsistent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inconsistency(pub Support);

#[derive(Clone)]
struct Row {
    poly: Poly,
    support: Support,
}

/// Solve the system. Equations whose shape is out of scope are ignored.
pub fn solve(equations: &[(usize, Poly)]) -> Result<Solution, Inconsistency> {
    let mut sol = Solution::default();
    loop {
        let mut changed = false;
        let mut linear: Vec<Row> = Vec::new();
        for (id, p) in equations {
            let Ok(q) = p.substitute(&sol.values) else { continue };
            let mut support: Support = p
                .symbols()
                .iter()
                .filter_map(|s| sol.support.get(s))
                .flatten()
                .copied()
                .collect();
            support.insert(*id);
            if let Some(c) = q.as_constant() {
                if !c.is_zero() {
                    return Err(Inconsistency(support));
                }
                continue;
            }
            if let Some((s, Ok(v))) = q.isolate() {
                sol.values.insert(s.clone(), v);
                sol.support.insert(s, support);
                changed = true;
                continue;
            }
            if q.is_linear() {
                linear.push(Row { poly: q, support });
            }
        }
        if changed {
            continue;
        }
        match eliminate(linear)? {
            found if found.is_empty() => return Ok(sol),
            found => {
                for (s, v, support) in found {
                    sol.values.insert(s.clone(), v);
                    sol.support.insert(s, support);
                }
            }
        }
    }
}

/// Gaussian elimination on linear rows; returns newly determined symbols.
fn eliminate(mut rows: Vec<Row>) -> Result<Vec<(Symbol, Exact, Support)>, Inconsistency> {
    let mut pivots: Vec<(Symbol, Row)> = Vec::new();
    while let Some(mut row) = rows.pop() {
        for (s, prow) in &pivots {
            let c = row.poly.linear_coeff(s);
            if c.is_zero() {
                continue;
            }
            let Ok(scaled) = prow.poly.scale(&c) else { continue };
            row.poly = row.poly.sub(&scaled);
            row.support.extend(prow.support.iter().copied());
        }
        if let Some(c) = row.poly.as_constant() {
            if !c.is_zero() {
                return Err(Inconsistency(row.support));
            }
            continue;
        }
        let pivot = row
            .poly
            .symbols()
            .into_iter()
            .find(|s| row.poly.linear_coeff(s).is_monomial());
        let Some(s) = pivot else { continue };
        let Ok(inv) = row.poly.linear_coeff(&s).recip() else { continue };
        let Ok(norm) = row.poly.scale(&inv) else { continue };
        row.poly = norm;
        // Keep earlier pivots reduced against the new one.
        for (_, prow) in pivots.iter_mut() {
            let c = prow.poly.linear_coeff(&s);
            if c.is_zero() {
                continue;
            }
            if let Ok(scaled) = row.poly.scale(&c) {
                prow.poly = prow.poly.sub(&scaled);
                prow.support.extend(row.support.iter().copied());
            }
        }
        pivots.push((s, row));
    }
    let mut out = Vec::new();
    for (s, row) in pivots {
        if row.poly.symbols().len() == 1 {
            if let Some((_, Ok(v))) = row.poly.isolate() {
                out.push((s, v, row.support));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdl::parse_expr;

    fn eqs(src: &[(&str, &str)]) -> Vec<(usize, Poly)> {
        src.iter()
            .enumerate()
            .map(|(i, (l, r))| (i, equation_poly(&parse_expr(l).unwrap(), &parse_expr(r).unwrap()).unwrap()))
            .collect()
    }

    fn var(s: &str) -> Symbol {
        Symbol::Var(s.into())
    }

    #[test]
    fn sphere_volume_by_substitution() {
        let s = solve(&eqs(&[("r", "3"), ("v", "Mul(4/3,pi,r,r,r)")])).unwrap();
        assert_eq!(s.values[&var("v")], Exact::integer(36).mul(&Exact::pi()).unwrap());
        assert_eq!(s.support[&var("v")], [0, 1].into());
    }

    #[test]
    fn chain_through_equalities() {
        let s = solve(&eqs(&[("am", "2"), ("am", "mb")])).unwrap();
        assert_eq!(s.values[&var("mb")], Exact::integer(2));
    }

    #[test]
    fn conflicting_values() {
        assert_eq!(solve(&eqs(&[("x", "2"), ("x", "3")])), Err(Inconsistency([0, 1].into())));
    }

    #[test]
    fn linear_system_needs_elimination() {
        let s = solve(&eqs(&[("Add(x,y)", "10"), ("Sub(x,y)", "2")])).unwrap();
        assert_eq!(s.values[&var("x")], Exact::integer(6));
        assert_eq!(s.values[&var("y")], Exact::integer(4));
    }

    #[test]
    fn inverse_problems() {
        // Radius from volume: 4/3 pi r^3 = 36 pi.
        let s = solve(&eqs(&[("Mul(4/3,pi,r,r,r)", "36*pi")])).unwrap();
        assert_eq!(s.values[&var("r")], Exact::integer(3));
        // Hypotenuse.
        let s = solve(&eqs(&[("Mul(c,c)", "Add(Mul(a,a),Mul(b,b))"), ("a", "3"), ("b", "4")])).unwrap();
        assert_eq!(s.values[&var("c")], Exact::integer(5));
        // Quotient.
        let s = solve(&eqs(&[("Div(v,h)", "pi"), ("v", "Mul(9,pi)")])).unwrap();
        assert_eq!(s.values[&var("h")], Exact::integer(9));
    }

    #[test]
    fn irrational_lengths_stay_exact() {
        let s = solve(&eqs(&[("Mul(d,d)", "12")])).unwrap();
        assert_eq!(s.values[&var("d")].to_string(), "2*sqrt(3)");
    }

    #[test]
    fn underdetermined_is_not_an_error() {
        let s = solve(&eqs(&[("Add(x,y)", "1")])).unwrap();
        assert!(s.values.is_empty());
    }
}
