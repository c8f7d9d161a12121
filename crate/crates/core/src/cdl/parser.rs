//! Recursive-descent parser for CDL facts and expressions.
//!
//! Grammar (whitespace is insignificant):
//!
//! ```text
//! fact    := '~' atom | 'Equal' '(' expr ',' expr ')' | 'Value' '(' expr ')' | atom
//! atom    := Name '(' group (',' group)* ')'          group := [A-Z]+
//! expr    := term (('+' | '-') term)*
//! term    := power (('*' | '/') power)*
//! power   := unary ('^' integer)?
//! unary   := '-' unary | primary
//! primary := number | 'pi' | 'sqrt' '(' rational ')' | ident | call | '(' expr ')'
//! call    := Name '(' (expr | group) (',' (expr | group))* ')'
//! ```
//!
//! A call whose arguments are all point groups is an attribute term; any
//! other call must name one of `Add`, `Sub`, `Mul`, `Div`. A leading
//! `number '/' number` is folded into a single rational literal.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::expr::{AttrTerm, Expr};
use super::fact::{Atom, Fact};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown operator `{name}` at {pos}; allowed: Value, Add, Sub, Mul, Div")]
    UnknownOperator { pos: usize, name: String },
    #[error("nested Value(...) at {pos}; Value may only wrap a whole goal")]
    NestedValue { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(BigRational),
    Sym(char),
}

struct Lexer;

impl Lexer {
    fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().map(|(_, c)| c).collect();
                out.push((pos, Tok::Ident(s)));
            } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|x| x.1.is_ascii_digit())) {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i].1 == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
                let s: String = chars[start..i].iter().map(|(_, c)| c).collect();
                out.push((pos, Tok::Num(parse_decimal(&s).ok_or_else(|| syntax(pos, "bad number"))?)));
            } else if "(),~+-*/^".contains(c) {
                out.push((pos, Tok::Sym(c)));
                i += 1;
            } else {
                return Err(syntax(pos, &format!("unexpected character `{c}`")));
            }
        }
        Ok(out)
    }
}

/// Parse a decimal literal such as `5`, `5.0` or `.25` into an exact rational.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let (int, frac) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let d = BigInt::from(10u32).pow(frac.len() as u32);
    Some(BigRational::new(n, d))
}

fn syntax(pos: usize, msg: &str) -> ParseError {
    ParseError::Syntax {
        pos,
        msg: msg.to_string(),
    }
}

fn is_group(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_uppercase())
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

/// Either a parsed expression or a bare point group (only legal as a call argument).
enum Arg {
    Expr(Expr),
    Group(String),
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        let toks = Lexer::tokenize(text)?;
        Ok(Self {
            toks,
            at: 0,
            end: text.len(),
        })
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|t| t.0).unwrap_or(self.end)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.at + n).map(|t| &t.1)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.1.clone());
        self.at += 1;
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(syntax(self.pos(), &format!("expected `{c}`")))
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.at < self.toks.len() {
            return Err(syntax(self.pos(), "trailing input"));
        }
        Ok(())
    }

    fn fact(&mut self) -> Result<Fact, ParseError> {
        if self.eat('~') {
            return Ok(Fact::Not(self.atom()?));
        }
        let pos = self.pos();
        match (self.peek(), self.peek_at(1)) {
            (Some(Tok::Ident(name)), Some(Tok::Sym('('))) if name == "Equal" => {
                self.at += 2;
                let l = self.expr()?;
                self.expect(',')?;
                let r = self.expr()?;
                self.expect(')')?;
                Ok(Fact::Equal(l, r))
            }
            (Some(Tok::Ident(name)), Some(Tok::Sym('('))) if name == "Value" => {
                self.at += 2;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(Fact::Value(e))
            }
            (Some(Tok::Ident(name)), _) if ["Add", "Sub", "Mul", "Div"].contains(&name.as_str()) => {
                Err(syntax(pos, "an algebraic expression is not a fact"))
            }
            _ => Ok(Fact::Atom(self.atom()?)),
        }
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let pos = self.pos();
        let name = match self.bump() {
            Some(Tok::Ident(n)) if n.starts_with(|c: char| c.is_ascii_uppercase()) => n,
            _ => return Err(syntax(pos, "expected predicate name")),
        };
        self.expect('(')?;
        let mut args = Vec::new();
        loop {
            let p = self.pos();
            match self.bump() {
                Some(Tok::Ident(g)) if is_group(&g) => args.push(g),
                _ => return Err(syntax(p, "expected point group (uppercase letters)")),
            }
            if self.eat(',') {
                continue;
            }
            self.expect(')')?;
            break;
        }
        Ok(Atom::new(name, args))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                let rhs = self.term()?;
                acc = Expr::add(vec![acc, rhs]);
            } else if self.eat('-') {
                let rhs = self.term()?;
                acc = Expr::sub(acc, rhs);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.power()?;
        let mut first = true;
        loop {
            if self.eat('*') {
                let rhs = self.power()?;
                acc = Expr::mul(vec![acc, rhs]);
            } else if self.eat('/') {
                let rhs = self.power()?;
                acc = match (&acc, &rhs, first) {
                    (Expr::Num(a), Expr::Num(b), true) if !b.is_zero() => Expr::Num(a / b),
                    _ => Expr::div(acc, rhs),
                };
            } else {
                return Ok(acc);
            }
            first = false;
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Num(n)) if n.is_integer() => {
                let k: u32 = n
                    .to_integer()
                    .try_into()
                    .map_err(|_| syntax(pos, "exponent too large"))?;
                match k {
                    0 => Ok(Expr::int(1)),
                    1..=16 => Ok(Expr::mul(vec![base; k as usize])),
                    _ => Err(syntax(pos, "exponent too large")),
                }
            }
            _ => Err(syntax(pos, "exponent must be a non-negative integer literal")),
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Expr::Num(n) => Expr::Num(-n),
                e => Expr::mul(vec![Expr::Num(-BigRational::one()), e]),
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Num(n)) => Ok(Expr::Num(n)),
            Some(Tok::Sym('(')) => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(id)) if id == "pi" => Ok(Expr::Pi),
            Some(Tok::Ident(id)) if id == "sqrt" => {
                self.expect('(')?;
                let p = self.pos();
                let arg = self.expr()?;
                self.expect(')')?;
                match arg {
                    Expr::Num(r) if r >= BigRational::zero() => Ok(Expr::Sqrt(r)),
                    _ => Err(syntax(p, "sqrt takes a non-negative rational literal")),
                }
            }
            Some(Tok::Ident(id)) if self.peek() == Some(&Tok::Sym('(')) => self.call(pos, id),
            Some(Tok::Ident(id)) if id.starts_with(|c: char| c.is_ascii_lowercase()) => Ok(Expr::Var(id)),
            Some(Tok::Ident(id)) => Err(syntax(pos, &format!("bare point group `{id}` in expression"))),
            _ => Err(syntax(pos, "expected expression")),
        }
    }

    fn call(&mut self, pos: usize, name: String) -> Result<Expr, ParseError> {
        self.expect('(')?;
        let mut args = Vec::new();
        loop {
            args.push(self.arg()?);
            if self.eat(',') {
                continue;
            }
            self.expect(')')?;
            break;
        }
        if name == "Value" {
            return Err(ParseError::NestedValue { pos });
        }
        if !OPERATOR_CALLS.contains(&name.as_str()) && args.iter().all(|a| matches!(a, Arg::Group(_))) {
            let groups = args
                .into_iter()
                .map(|a| match a {
                    Arg::Group(g) => g,
                    Arg::Expr(_) => unreachable!(),
                })
                .collect();
            return Ok(Expr::Attr(AttrTerm::new(name, groups)));
        }
        let exprs = args
            .into_iter()
            .map(|a| match a {
                Arg::Expr(e) => Ok(e),
                Arg::Group(g) => Err(syntax(pos, &format!("point group `{g}` used as operand"))),
            });
        let exprs: Vec<Expr> = match name.as_str() {
            "Add" | "Sub" | "Mul" | "Div" => exprs.collect::<Result<_, _>>()?,
            _ => return Err(ParseError::UnknownOperator { pos, name }),
        };
        match name.as_str() {
            "Add" => Ok(Expr::add(exprs)),
            "Mul" => Ok(Expr::mul(exprs)),
            "Sub" | "Div" => {
                let [a, b]: [Expr; 2] = exprs
                    .try_into()
                    .map_err(|_| syntax(pos, &format!("{name} takes exactly two operands")))?;
                Ok(if name == "Sub" { Expr::sub(a, b) } else { Expr::div(a, b) })
            }
            _ => unreachable!(),
        }
    }

    fn arg(&mut self) -> Result<Arg, ParseError> {
        if let (Some(Tok::Ident(id)), next) = (self.peek(), self.peek_at(1)) {
            let delimits = matches!(next, Some(Tok::Sym(',')) | Some(Tok::Sym(')')));
            if is_group(id) && delimits {
                let g = id.clone();
                self.at += 1;
                return Ok(Arg::Group(g));
            }
        }
        Ok(Arg::Expr(self.expr()?))
    }
}

const OPERATOR_CALLS: [&str; 4] = ["Add", "Sub", "Mul", "Div"];

/// Parse one CDL fact.
pub fn parse_fact(text: &str) -> Result<Fact, ParseError> {
    if text.trim().is_empty() {
        return Err(syntax(0, "empty fact"));
    }
    let mut p = Parser::new(text)?;
    let f = p.fact()?;
    p.finish()?;
    Ok(f)
}

/// Parse a standalone expression (functional or infix form), e.g. `36*pi`.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}
