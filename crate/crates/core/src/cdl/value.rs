//! Exact symbolic numbers.
//!
//! An [`Exact`] is a finite sum of monomials `c * pi^k * sqrt(s)` where `c` is a
//! rational coefficient, `k` an integer power of pi and `s` a square-free
//! positive integer radicand. This covers every quantity the formula bank
//! produces (volumes with pi, diagonals with square roots) without ever
//! rounding. Conversion to `f64` only happens on request.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Errors raised by exact arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithmeticError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("value {0} has no exact inverse in the supported number system")]
    NotInvertible(String),
    #[error("square root of {0} is not representable exactly")]
    NoExactRoot(String),
    #[error("square root of negative value {0}")]
    NegativeRoot(String),
}

/// Key of one monomial: (power of pi, square-free radicand).
type Basis = (i32, u64);

/// Exact value: sum of `coefficient * pi^k * sqrt(radicand)` terms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Exact {
    terms: BTreeMap<Basis, BigRational>,
}

impl Exact {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::rational(BigRational::one())
    }

    pub fn rational(r: BigRational) -> Self {
        let mut e = Self::zero();
        e.push((0, 1), r);
        e
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Self::rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn pi() -> Self {
        let mut e = Self::zero();
        e.push((1, 1), BigRational::one());
        e
    }

    /// Exact square root of a non-negative rational, as `a * sqrt(s)`.
    pub fn sqrt_of_rational(r: &BigRational) -> Result<Self, ArithmeticError> {
        if r.is_negative() {
            return Err(ArithmeticError::NegativeRoot(fmt_rational(r)));
        }
        if r.is_zero() {
            return Ok(Self::zero());
        }
        // sqrt(p/q) = sqrt(p*q) / q
        let p = r.numer().to_biguint().expect("non-negative");
        let q = r.denom().to_biguint().expect("positive");
        let (outside, inside) = split_square(&(&p * &q))
            .ok_or_else(|| ArithmeticError::NoExactRoot(fmt_rational(r)))?;
        let coeff = BigRational::new(BigInt::from(outside), BigInt::from(q));
        let mut e = Self::zero();
        e.push((0, inside), coeff);
        Ok(e)
    }

    fn push(&mut self, basis: Basis, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(basis).or_insert_with(BigRational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&basis);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The rational value when the number has no pi or root component.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&(0, 1)).cloned(),
            _ => None,
        }
    }

    /// Single-term values are invertible in this number system.
    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, u64, &BigRational)> {
        self.terms.iter().map(|(&(k, s), c)| (k, s, c))
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&(k, s), c)| {
                rational_to_f64(c) * std::f64::consts::PI.powi(k) * (s as f64).sqrt()
            })
            .sum()
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(b, c)| (*b, -c.clone())).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (b, c) in &other.terms {
            out.push(*b, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, ArithmeticError> {
        let mut out = Self::zero();
        for (&(k1, s1), c1) in &self.terms {
            for (&(k2, s2), c2) in &other.terms {
                let (outside, inside) = multiply_radicands(s1, s2).ok_or_else(|| {
                    ArithmeticError::NoExactRoot(format!("sqrt({s1})*sqrt({s2})"))
                })?;
                let coeff = c1 * c2 * BigRational::from_integer(BigInt::from(outside));
                out.push((k1 + k2, inside), coeff);
            }
        }
        Ok(out)
    }

    /// Multiplicative inverse. Only single-term values are invertible.
    pub fn recip(&self) -> Result<Self, ArithmeticError> {
        if self.is_zero() {
            return Err(ArithmeticError::DivisionByZero);
        }
        if !self.is_monomial() {
            return Err(ArithmeticError::NotInvertible(self.to_string()));
        }
        let (&(k, s), c) = self.terms.iter().next().expect("one term");
        // 1 / (c pi^k sqrt(s)) = sqrt(s) / (c s) * pi^-k
        let coeff = (c * BigRational::from_integer(BigInt::from(s))).recip();
        let mut out = Self::zero();
        out.push((-k, s), coeff);
        Ok(out)
    }

    pub fn div(&self, other: &Self) -> Result<Self, ArithmeticError> {
        if other.is_zero() {
            return Err(ArithmeticError::DivisionByZero);
        }
        self.mul(&other.recip()?)
    }

    pub fn pow(&self, exp: u32) -> Result<Self, ArithmeticError> {
        let mut acc = Self::one();
        for _ in 0..exp {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Non-negative square root. Representable when the value is a single
    /// term with an even power of pi and no radical.
    pub fn sqrt(&self) -> Result<Self, ArithmeticError> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        if !self.is_monomial() {
            return Err(ArithmeticError::NoExactRoot(self.to_string()));
        }
        let (&(k, s), c) = self.terms.iter().next().expect("one term");
        if c.is_negative() {
            return Err(ArithmeticError::NegativeRoot(self.to_string()));
        }
        if s != 1 || k % 2 != 0 {
            return Err(ArithmeticError::NoExactRoot(self.to_string()));
        }
        let root = Self::sqrt_of_rational(c)?;
        let mut out = Self::zero();
        for (&(_, s2), c2) in &root.terms {
            out.push((k / 2, s2), c2.clone());
        }
        Ok(out)
    }

    /// Real cube root, exact only for `c * pi^(3m)` with `c` a perfect rational cube.
    pub fn cbrt(&self) -> Result<Self, ArithmeticError> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let fail = || ArithmeticError::NoExactRoot(format!("cbrt({self})"));
        if !self.is_monomial() {
            return Err(fail());
        }
        let (&(k, s), c) = self.terms.iter().next().expect("one term");
        if s != 1 || k % 3 != 0 {
            return Err(fail());
        }
        let n = int_cbrt(c.numer()).ok_or_else(fail)?;
        let d = int_cbrt(c.denom()).ok_or_else(fail)?;
        let mut out = Self::zero();
        out.push((k / 3, 1), BigRational::new(n, d));
        Ok(out)
    }

    /// Sign of the real value, decided exactly when possible.
    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            return 0;
        }
        if self.terms.values().all(|c| c.is_positive()) {
            return 1;
        }
        if self.terms.values().all(|c| c.is_negative()) {
            return -1;
        }
        let f = self.to_f64();
        if f > 0.0 {
            1
        } else if f < 0.0 {
            -1
        } else {
            0
        }
    }
}

impl From<BigRational> for Exact {
    fn from(r: BigRational) -> Self {
        Self::rational(r)
    }
}

impl fmt::Debug for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Exact({self})")
    }
}

/// Infix rendering suitable for answers: `36*pi`, `2*sqrt(3)`, `4/3*pi + 1`.
impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // Plain rational part first, then ascending pi powers.
        let mut ordered: Vec<_> = self.terms.iter().collect();
        ordered.sort_by_key(|(&(k, s), _)| (k != 0 || s != 1, k, s));
        for (i, (&(k, s), c)) in ordered.into_iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if negative { " - " } else { " + " })?;
            }
            let mut factors: Vec<String> = Vec::new();
            if !mag.is_one() || (k == 0 && s == 1) {
                factors.push(fmt_rational(&mag));
            }
            if s != 1 {
                factors.push(format!("sqrt({s})"));
            }
            match k {
                0 => {}
                1 => factors.push("pi".into()),
                k if k > 1 => factors.push(format!("pi^{k}")),
                k => factors.push(format!("pi^({k})")),
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

pub(crate) fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => r.to_f64().unwrap_or(f64::NAN),
    }
}

/// Split `n = outside^2 * inside` with `inside` square-free.
/// Returns `None` when the square-free part does not fit a `u64`.
fn split_square(n: &BigUint) -> Option<(BigUint, u64)> {
    let mut outside = BigUint::one();
    let mut inside = BigUint::one();
    let mut rest = n.clone();
    let mut p = BigUint::from(2u32);
    // Trial division; radicands in geometry problems are small.
    let limit = BigUint::from(1_000_000u32);
    while &p * &p <= rest && p <= limit {
        let mut count = 0u32;
        while (&rest % &p).is_zero() {
            rest /= &p;
            count += 1;
        }
        for _ in 0..count / 2 {
            outside *= &p;
        }
        if count % 2 == 1 {
            inside *= &p;
        }
        p += 1u32;
    }
    if rest > BigUint::one() {
        let r = rest.sqrt();
        if &r * &r == rest {
            outside *= r;
        } else {
            inside *= rest;
        }
    }
    inside.to_u64().map(|i| (outside, i))
}

fn multiply_radicands(a: u64, b: u64) -> Option<(BigUint, u64)> {
    if a == 1 || b == 1 {
        return Some((BigUint::one(), a.max(b)));
    }
    let g = a.gcd(&b);
    // sqrt(a) sqrt(b) = g * sqrt(a/g * b/g) for square-free a, b
    let inside = (a / g).checked_mul(b / g)?;
    Some((BigUint::from(g), inside))
}

fn int_cbrt(n: &BigInt) -> Option<BigInt> {
    let neg = n.is_negative();
    let m = n.abs().to_biguint()?;
    let r = m.cbrt();
    if &r * &r * &r == m {
        let r = BigInt::from(r);
        Some(if neg { -r } else { r })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_volume_at_radius_three_is_36_pi() {
        let r = Exact::integer(3);
        let v = Exact::ratio(4, 3)
            .mul(&Exact::pi())
            .unwrap()
            .mul(&r.pow(3).unwrap())
            .unwrap();
        assert_eq!(v, Exact::integer(36).mul(&Exact::pi()).unwrap());
        assert_eq!(v.to_string(), "36*pi");
    }

    #[test]
    fn radicals_simplify() {
        let s = Exact::sqrt_of_rational(&BigRational::from_integer(12.into())).unwrap();
        assert_eq!(s.to_string(), "2*sqrt(3)");
        let sq = s.mul(&s).unwrap();
        assert_eq!(sq, Exact::integer(12));
        let half = Exact::sqrt_of_rational(&BigRational::new(1.into(), 2.into())).unwrap();
        assert_eq!(half.to_string(), "1/2*sqrt(2)");
    }

    #[test]
    fn monomial_inverse_round_trips() {
        let v = Exact::integer(6)
            .mul(&Exact::pi())
            .unwrap()
            .mul(&Exact::sqrt_of_rational(&BigRational::from_integer(2.into())).unwrap())
            .unwrap();
        assert_eq!(v.mul(&v.recip().unwrap()).unwrap(), Exact::one());
    }

    #[test]
    fn zero_division_is_reported() {
        assert_eq!(
            Exact::one().div(&Exact::zero()),
            Err(ArithmeticError::DivisionByZero)
        );
    }

    #[test]
    fn square_root_of_pi_squared_term() {
        let v = Exact::integer(9).mul(&Exact::pi().pow(2).unwrap()).unwrap();
        assert_eq!(v.sqrt().unwrap().to_string(), "3*pi");
        assert!(Exact::pi().sqrt().is_err());
        assert_eq!(Exact::integer(27).cbrt().unwrap(), Exact::integer(3));
    }

    #[test]
    fn display_orders_rational_part_first() {
        let v = Exact::pi().add(&Exact::integer(2));
        assert_eq!(v.to_string(), "2 + pi");
        assert_eq!(Exact::pi().neg().add(&Exact::one()).to_string(), "1 - pi");
    }
}
