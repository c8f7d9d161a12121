//! Fuzzy-matching evaluation of predicted CDL against ground truth.
//!
//! Number extraction uses the pattern `\d+(\.\d+)?`; a fraction such as
//! `4/3` therefore contributes its two component tokens. Tokens are compared
//! by value, so `5` and `5.0` intersect.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use num_rational::BigRational;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::cdl::{parse_decimal, RawProblemCdl};

const PLACEHOLDER: &str = "_V_";

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\d+(?:\.\d+)?").expect("valid regex"))
}

fn is_number(s: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^-?\d+(?:\.\d+)?(?:/\d+)?$").expect("valid regex"))
        .is_match(s)
}

fn replace_variables(s: &str) -> String {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[A-Z]+\b").expect("valid regex"))
        .replace_all(s, PLACEHOLDER)
        .into_owned()
}

fn is_single_variable(s: &str) -> bool {
    s.len() == 1 && s.chars().all(|c| c.is_ascii_uppercase())
}

/// Split on commas that are not nested inside parentheses.
fn split_top(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// Index of the `)` matching the `(` at `open`, if any.
fn matching_close(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in s[open..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Normalize one CDL element: strip whitespace, replace point variables by
/// `_V_`, keep numbers, recurse into nested calls, and collapse an argument
/// list made only of single-letter variables to `(_V_)`.
pub fn normalize(element: &str) -> String {
    let t: String = element.chars().filter(|c| !c.is_whitespace()).collect();
    normalize_stripped(&t)
}

fn normalize_stripped(t: &str) -> String {
    let Some(open) = t.find('(') else {
        return if is_number(t) { t.to_string() } else { replace_variables(t) };
    };
    match matching_close(t, open) {
        Some(close) if close == t.len() - 1 => {
            let name = &t[..open];
            let parts = split_top(&t[open + 1..close]);
            if parts.iter().all(|p| is_single_variable(p)) {
                return format!("{name}({PLACEHOLDER})");
            }
            let processed: Vec<String> = parts
                .iter()
                .map(|p| {
                    if is_number(p) {
                        p.to_string()
                    } else if p.contains('(') {
                        normalize_stripped(p)
                    } else {
                        PLACEHOLDER.to_string()
                    }
                })
                .collect();
            format!("{name}({})", processed.join(","))
        }
        _ => replace_variables(t),
    }
}

/// Substring before the first `(`.
pub fn predicate_name(x: &str) -> &str {
    x.split('(').next().unwrap_or(x)
}

/// Numeric tokens of `x`, by value.
pub fn numbers(x: &str) -> BTreeSet<BigRational> {
    number_re()
        .find_iter(x)
        .filter_map(|m| parse_decimal(m.as_str()))
        .collect()
}

/// One of the five graded match values, held in tenths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Score(u8);

impl Score {
    pub const EXACT: Score = Score(10);
    pub const NAME_AND_NUMBER: Score = Score(8);
    pub const NAME: Score = Score(5);
    pub const NUMBER: Score = Score(3);
    pub const NONE: Score = Score(0);

    pub fn tenths(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 10.0
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.value())
    }
}

/// Graded similarity of two normalized elements.
pub fn match_score(p: &str, g: &str) -> Score {
    if p == g {
        return Score::EXACT;
    }
    let same_name = predicate_name(p) == predicate_name(g);
    let shared_number = !numbers(p).is_disjoint(&numbers(g));
    match (same_name, shared_number) {
        (true, true) => Score::NAME_AND_NUMBER,
        (true, false) => Score::NAME,
        (false, true) => Score::NUMBER,
        (false, false) => Score::NONE,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<Score>>,
}

impl ScoreMatrix {
    pub fn row_max(&self) -> Vec<Score> {
        self.cells
            .iter()
            .map(|r| r.iter().copied().max().unwrap_or(Score::NONE))
            .collect()
    }
}

/// `match_score` over the cross product of two normalized sets (sorted order).
pub fn build_score_matrix(p: &BTreeSet<String>, g: &BTreeSet<String>) -> ScoreMatrix {
    ScoreMatrix {
        rows: p.iter().cloned().collect(),
        cols: g.iter().cloned().collect(),
        cells: p.iter().map(|x| g.iter().map(|y| match_score(x, y)).collect()).collect(),
    }
}

pub fn normalize_set<S: AsRef<str>>(xs: &[S]) -> BTreeSet<String> {
    xs.iter().map(|x| normalize(x.as_ref())).collect()
}

/// Fuzzy Jaccard similarity of two raw CDL sets.
///
/// The intersection sums the best score of each predicted element, so the
/// measure is not symmetric in its arguments.
pub fn fuzzy_jaccard<S: AsRef<str>, T: AsRef<str>>(p: &[S], g: &[T]) -> f64 {
    let (num, den) = fuzzy_jaccard_tenths(p, g);
    num as f64 / den as f64
}

/// Numerator and denominator of [`fuzzy_jaccard`], both in tenths.
pub fn fuzzy_jaccard_tenths<S: AsRef<str>, T: AsRef<str>>(p: &[S], g: &[T]) -> (u64, u64) {
    let pn = normalize_set(p);
    let gn = normalize_set(g);
    match (pn.is_empty(), gn.is_empty()) {
        (true, true) => return (1, 1),
        (true, false) | (false, true) => return (0, 1),
        _ => {}
    }
    let m = build_score_matrix(&pn, &gn);
    let inter: u64 = m.row_max().iter().map(|s| u64::from(s.tenths())).sum();
    let union = 10 * (pn.len() + gn.len()) as u64 - inter;
    (inter, union)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParseScore {
    pub construction: f64,
    pub condition: f64,
    pub goal: f64,
    pub parse_score: f64,
}

fn goal_set(g: &str) -> Vec<&str> {
    if g.trim().is_empty() {
        Vec::new()
    } else {
        vec![g]
    }
}

/// Mean of the construction, condition (text and image merged) and goal similarities.
pub fn parse_score(pred: &RawProblemCdl, gt: &RawProblemCdl) -> ParseScore {
    let merged = |r: &RawProblemCdl| -> Vec<String> { r.text_cdl.iter().chain(&r.image_cdl).cloned().collect() };
    let construction = fuzzy_jaccard(&pred.construction_cdl, &gt.construction_cdl);
    let condition = fuzzy_jaccard(&merged(pred), &merged(gt));
    let goal = fuzzy_jaccard(&goal_set(&pred.goal_cdl), &goal_set(&gt.goal_cdl));
    ParseScore {
        construction,
        condition,
        goal,
        parse_score: (construction + condition + goal) / 3.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    #[serde(flatten)]
    pub score: ParseScore,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub rows: Vec<ScoreRow>,
    /// Ground-truth ids with no prediction; they score 0 on every component.
    pub missing: Vec<String>,
    pub mean: ParseScore,
}

/// Score every ground-truth problem against its prediction (matched by id).
pub fn score_corpus(pred: &BTreeMap<String, RawProblemCdl>, gt: &BTreeMap<String, RawProblemCdl>) -> ScoreReport {
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    for (id, g) in gt {
        let score = match pred.get(id) {
            Some(p) => parse_score(p, g),
            None => {
                missing.push(id.clone());
                ParseScore {
                    construction: 0.0,
                    condition: 0.0,
                    goal: 0.0,
                    parse_score: 0.0,
                }
            }
        };
        rows.push(ScoreRow { id: id.clone(), score });
    }
    let n = rows.len().max(1) as f64;
    let avg = |f: fn(&ParseScore) -> f64| rows.iter().map(|r| f(&r.score)).sum::<f64>() / n;
    let mean = ParseScore {
        construction: avg(|s| s.construction),
        condition: avg(|s| s.condition),
        goal: avg(|s| s.goal),
        parse_score: avg(|s| s.parse_score),
    };
    ScoreReport { rows, missing, mean }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>12} {:>10} {:>8} {:>12}", "id", "construction", "condition", "goal", "parse_score")?;
        let line = |f: &mut fmt::Formatter<'_>, id: &str, s: &ParseScore| {
            writeln!(
                f,
                "{:<24} {:>12.4} {:>10.4} {:>8.4} {:>12.4}",
                id, s.construction, s.condition, s.goal, s.parse_score
            )
        };
        for r in &self.rows {
            line(f, &r.id, &r.score)?;
        }
        line(f, "MEAN", &self.mean)?;
        for m in &self.missing {
            writeln!(f, "missing prediction: {m}")?;
        }
        Ok(())
    }
}
