use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{EvalError, Expr};
use super::fact::Fact;
use super::parser::{parse_expr, parse_fact, ParseError};

/// The on-disk / model-output shape of a problem: every field is plain text.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawProblemCdl {
    #[serde(default)]
    pub construction_cdl: Vec<String>,
    #[serde(default)]
    pub text_cdl: Vec<String>,
    #[serde(default)]
    pub image_cdl: Vec<String>,
    #[serde(default)]
    pub goal_cdl: String,
    #[serde(default, deserialize_with = "string_or_number")]
    pub problem_answer: String,
}

fn string_or_number<'de, D: serde::Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Either {
        S(String),
        N(serde_json::Number),
    }
    Ok(match Either::deserialize(d)? {
        Either::S(s) => s,
        Either::N(n) => n.to_string(),
    })
}

/// Which list a CDL line came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Construction,
    Text,
    Image,
    Goal,
    Answer,
}

impl std::fmt::Display for Section {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Section::Construction => "construction_cdl",
            Section::Text => "text_cdl",
            Section::Image => "image_cdl",
            Section::Goal => "goal_cdl",
            Section::Answer => "problem_answer",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("{section}[{index}] `{text}`: {source}")]
    Parse {
        section: Section,
        index: usize,
        text: String,
        source: ParseError,
    },
    #[error("{section}[{index}]: negation is only allowed in theorem premises")]
    Negation { section: Section, index: usize },
    #[error("goal_cdl must be Value(...) or a relation atom, got `{0}`")]
    BadGoal(String),
    #[error("Value(...) may only appear in goal_cdl ({section}[{index}])")]
    ValueOutsideGoal { section: Section, index: usize },
    #[error("goal_cdl is empty")]
    MissingGoal,
}

/// A parsed, structurally valid problem.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProblemCdl {
    pub construction: Vec<Fact>,
    pub text: Vec<Fact>,
    pub image: Vec<Fact>,
    /// `Value(expr)` for a quantity goal, or a bare atom for a relation goal.
    pub goal: Fact,
    pub answer: Option<Expr>,
}

impl ProblemCdl {
    /// Parse every field; reject negations, stray `Value` wrappers and malformed goals.
    pub fn from_raw(raw: &RawProblemCdl) -> Result<Self, ProblemError> {
        let lists = [
            (Section::Construction, &raw.construction_cdl),
            (Section::Text, &raw.text_cdl),
            (Section::Image, &raw.image_cdl),
        ];
        let mut parsed: Vec<Vec<Fact>> = Vec::with_capacity(3);
        for (section, list) in lists {
            let mut facts = Vec::with_capacity(list.len());
            for (index, text) in list.iter().enumerate() {
                let f = parse_fact(text).map_err(|source| ProblemError::Parse {
                    section,
                    index,
                    text: text.clone(),
                    source,
                })?;
                match f {
                    Fact::Not(_) => return Err(ProblemError::Negation { section, index }),
                    Fact::Value(_) => return Err(ProblemError::ValueOutsideGoal { section, index }),
                    _ => facts.push(f),
                }
            }
            parsed.push(facts);
        }
        if raw.goal_cdl.trim().is_empty() {
            return Err(ProblemError::MissingGoal);
        }
        let goal = parse_fact(&raw.goal_cdl).map_err(|source| ProblemError::Parse {
            section: Section::Goal,
            index: 0,
            text: raw.goal_cdl.clone(),
            source,
        })?;
        if !matches!(goal, Fact::Value(_) | Fact::Atom(_)) {
            return Err(ProblemError::BadGoal(raw.goal_cdl.clone()));
        }
        let answer = if raw.problem_answer.trim().is_empty() {
            None
        } else {
            Some(parse_expr(&raw.problem_answer).map_err(|source| ProblemError::Parse {
                section: Section::Answer,
                index: 0,
                text: raw.problem_answer.clone(),
                source,
            })?)
        };
        let image = parsed.pop().unwrap_or_default();
        let text = parsed.pop().unwrap_or_default();
        let construction = parsed.pop().unwrap_or_default();
        Ok(Self {
            construction,
            text,
            image,
            goal,
            answer,
        })
    }

    pub fn to_raw(&self) -> RawProblemCdl {
        let r = |v: &[Fact]| v.iter().map(Fact::to_string).collect();
        RawProblemCdl {
            construction_cdl: r(&self.construction),
            text_cdl: r(&self.text),
            image_cdl: r(&self.image),
            goal_cdl: self.goal.to_string(),
            problem_answer: self.answer.as_ref().map(Expr::to_string).unwrap_or_default(),
        }
    }

    /// Construction, text and image facts in order.
    pub fn givens(&self) -> impl Iterator<Item = &Fact> {
        self.construction.iter().chain(&self.text).chain(&self.image)
    }

    /// A problem with no conditions and a trivial relation goal.
    pub fn empty() -> Self {
        Self {
            construction: Vec::new(),
            text: Vec::new(),
            image: Vec::new(),
            goal: Fact::atom("Point", &["A"]),
            answer: None,
        }
    }
}

/// Relative tolerance used when grading answers.
pub const DEFAULT_REL_TOL: f64 = 1e-6;

/// Compare two constant expressions.
///
/// Exact values are compared first; when they differ (or exact arithmetic is
/// unavailable, e.g. `1/(1+pi)`) the floating magnitudes are compared with
/// `|a-b| <= rel_tol * max(|a|,|b|)`.
pub fn answers_equal(a: &Expr, b: &Expr, rel_tol: f64) -> Result<bool, EvalError> {
    let none = BTreeMap::new();
    match (a.evaluate(&none), b.evaluate(&none)) {
        (Ok(x), Ok(y)) if x == y => Ok(true),
        (Err(e @ EvalError::Unresolved(_)), _) | (_, Err(e @ EvalError::Unresolved(_))) => Err(e),
        _ => {
            let (x, y) = (approx(a), approx(b));
            if !x.is_finite() || !y.is_finite() {
                return Ok(false);
            }
            let scale = x.abs().max(y.abs());
            Ok((x - y).abs() <= rel_tol * scale)
        }
    }
}

/// Floating evaluation of a constant expression.
fn approx(e: &Expr) -> f64 {
    use super::value::rational_to_f64;
    match e {
        Expr::Num(r) => rational_to_f64(r),
        Expr::Pi => std::f64::consts::PI,
        Expr::Sqrt(r) => rational_to_f64(r).sqrt(),
        Expr::Attr(_) | Expr::Var(_) => f64::NAN,
        Expr::Add(cs) => cs.iter().map(approx).sum(),
        Expr::Mul(cs) => cs.iter().map(approx).product(),
        Expr::Sub(x, y) => approx(x) - approx(y),
        Expr::Div(x, y) => approx(x) / approx(y),
    }
}
