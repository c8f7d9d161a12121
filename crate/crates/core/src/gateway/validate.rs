//! Schema and vocabulary checks on model-produced CDL.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cdl::{parse_expr, parse_fact, Fact, ParseError, ProblemCdl, RawProblemCdl};
use crate::knowledge::{expand_fact, validity_check, AtomBase, KnowledgeBase, PredicateKind, Validity};

use super::GatewayError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    IllegalPredicate,
    /// Construction predicate outside construction_cdl, or a plain fact inside it.
    ConstructionMisplaced,
    AnswerNotPure,
    GoalNotValue,
    IllegalOperator,
    WhitespaceInPredicate,
    UndeclaredEntity,
    Unparseable,
    Negation,
}

impl ViolationKind {
    /// Number of the prompt rule the violation breaks.
    pub fn rule(self) -> u8 {
        match self {
            Self::IllegalPredicate => 0,
            Self::ConstructionMisplaced => 2,
            Self::AnswerNotPure => 3,
            Self::GoalNotValue => 4,
            Self::IllegalOperator | Self::WhitespaceInPredicate | Self::Unparseable | Self::Negation => 5,
            Self::UndeclaredEntity => 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: u8,
    pub kind: ViolationKind,
    /// `construction_cdl`, `text_cdl`, `image_cdl`, `goal_cdl` or `problem_answer`.
    pub field: String,
    pub element: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOutputReport {
    pub document: RawProblemCdl,
    pub violations: Vec<Violation>,
    /// Present exactly when there are no violations.
    #[serde(skip)]
    pub problem: Option<ProblemCdl>,
}

impl ModelOutputReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The JSON object inside a completion, tolerating code fences and prose around it.
fn extract_object(raw: &str) -> Result<serde_json::Map<String, Value>, GatewayError> {
    let start = raw.find('{');
    let end = raw.rfind('}');
    let (Some(s), Some(e)) = (start, end) else {
        return Err(GatewayError::MalformedDocument("no JSON object found".into()));
    };
    if e < s {
        return Err(GatewayError::MalformedDocument("no JSON object found".into()));
    }
    match serde_json::from_str::<Value>(&raw[s..=e]) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(GatewayError::MalformedDocument("top level is not an object".into())),
        Err(err) => Err(GatewayError::MalformedDocument(err.to_string())),
    }
}

fn string_list(m: &serde_json::Map<String, Value>, key: &str) -> Result<Vec<String>, GatewayError> {
    match m.get(key) {
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                _ => Err(GatewayError::MalformedDocument(format!("{key} must hold strings"))),
            })
            .collect(),
        Some(_) => Err(GatewayError::MalformedDocument(format!("{key} must be an array"))),
        None => Err(GatewayError::MalformedDocument(format!("missing field {key}"))),
    }
}

fn parse_document(raw: &str) -> Result<RawProblemCdl, GatewayError> {
    let m = extract_object(raw)?;
    let goal = match m.get("goal_cdl") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(GatewayError::MalformedDocument("goal_cdl must be a single string".into())),
        None => return Err(GatewayError::MalformedDocument("missing field goal_cdl".into())),
    };
    let answer = match m.get("problem_answer") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => {
            return Err(GatewayError::MalformedDocument(
                "problem_answer must be a string or number".into(),
            ))
        }
    };
    Ok(RawProblemCdl {
        construction_cdl: string_list(&m, "construction_cdl")?,
        text_cdl: string_list(&m, "text_cdl")?,
        image_cdl: string_list(&m, "image_cdl")?,
        goal_cdl: goal,
        problem_answer: answer,
    })
}

struct Checker<'a> {
    kb: &'a KnowledgeBase,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn flag(&mut self, kind: ViolationKind, field: &str, element: &str, message: String) {
        self.out.push(Violation {
            rule: kind.rule(),
            kind,
            field: field.to_string(),
            element: element.to_string(),
            message,
        });
    }

    /// Parse one element, flagging whitespace, syntax, operators and names.
    fn fact(&mut self, field: &str, text: &str) -> Option<Fact> {
        if text.chars().any(char::is_whitespace) {
            self.flag(
                ViolationKind::WhitespaceInPredicate,
                field,
                text,
                "whitespace inside a predicate or operator".into(),
            );
        }
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let f = match parse_fact(&compact) {
            Ok(f) => f,
            Err(ParseError::UnknownOperator { name, .. }) => {
                self.flag(
                    ViolationKind::IllegalOperator,
                    field,
                    text,
                    format!("`{name}` is not an allowed operator"),
                );
                return None;
            }
            Err(e) => {
                self.flag(ViolationKind::Unparseable, field, text, e.to_string());
                return None;
            }
        };
        if let Err(name) = self.kb.check_names(&f) {
            self.flag(
                ViolationKind::IllegalPredicate,
                field,
                text,
                format!("illegal predicate {name}"),
            );
            return None;
        }
        if matches!(f, Fact::Not(_)) {
            self.flag(ViolationKind::Negation, field, text, "negated facts are not CDL".into());
            return None;
        }
        Some(f)
    }

    fn kind_of(&self, f: &Fact) -> Option<PredicateKind> {
        match f {
            Fact::Atom(a) | Fact::Not(a) => self.kb.predicate(&a.name).map(|d| d.kind),
            _ => None,
        }
    }
}

/// Check a model's JSON output against the schema, vocabulary and prompt rules.
///
/// A document that is not a JSON object with the four CDL fields is an
/// error; everything else is reported as violations.
pub fn validate_model_output(raw: &str, kb: &KnowledgeBase) -> Result<ModelOutputReport, GatewayError> {
    let doc = parse_document(raw)?;
    let mut c = Checker { kb, out: Vec::new() };

    let mut construction = Vec::new();
    for e in &doc.construction_cdl {
        let Some(f) = c.fact("construction_cdl", e) else { continue };
        if c.kind_of(&f) != Some(PredicateKind::Construction) {
            c.flag(
                ViolationKind::ConstructionMisplaced,
                "construction_cdl",
                e,
                "only construction predicates belong in construction_cdl".into(),
            );
            continue;
        }
        construction.push(f);
    }
    let mut facts = Vec::new();
    for (field, list) in [("text_cdl", &doc.text_cdl), ("image_cdl", &doc.image_cdl)] {
        for e in list {
            let Some(f) = c.fact(field, e) else { continue };
            if c.kind_of(&f) == Some(PredicateKind::Construction) {
                c.flag(
                    ViolationKind::ConstructionMisplaced,
                    field,
                    e,
                    "construction predicates belong in construction_cdl".into(),
                );
                continue;
            }
            if matches!(f, Fact::Value(_)) {
                c.flag(ViolationKind::GoalNotValue, field, e, "Value(...) is only allowed in goal_cdl".into());
                continue;
            }
            facts.push((field, e.clone(), f));
        }
    }

    let goal_text = doc.goal_cdl.trim();
    if goal_text.is_empty() {
        c.flag(ViolationKind::GoalNotValue, "goal_cdl", "", "goal_cdl is empty".into());
    } else if let Some(g) = c.fact("goal_cdl", &doc.goal_cdl) {
        let relation = matches!(
            c.kind_of(&g),
            Some(PredicateKind::Relation | PredicateKind::Entity | PredicateKind::BasicEntity)
        );
        if matches!(g, Fact::Value(_)) || relation {
            facts.push(("goal_cdl", doc.goal_cdl.clone(), g));
        } else {
            c.flag(
                ViolationKind::GoalNotValue,
                "goal_cdl",
                &doc.goal_cdl,
                "the requested quantity must be wrapped in Value(...)".into(),
            );
        }
    }

    let answer = doc.problem_answer.trim();
    if !answer.is_empty() {
        match parse_expr(answer) {
            Ok(e) if e.symbols().is_empty() => {}
            _ => c.flag(
                ViolationKind::AnswerNotPure,
                "problem_answer",
                answer,
                "the answer must be a bare number or expression".into(),
            ),
        }
    }

    // Entities must be declared by the construction facts.
    let mut declared = AtomBase::new();
    let mut points: BTreeSet<char> = BTreeSet::new();
    for f in &construction {
        points.extend(f.points());
        for g in expand_fact(f, kb) {
            if let Fact::Atom(a) = &g {
                declared.insert(kb, a);
            }
        }
    }
    for (field, text, f) in &facts {
        let missing: BTreeSet<char> = f.points().into_iter().filter(|p| !points.contains(p)).collect();
        if !missing.is_empty() {
            let names: String = missing.iter().collect();
            c.flag(
                ViolationKind::UndeclaredEntity,
                field,
                text,
                format!("points {names} are not declared in construction_cdl"),
            );
            continue;
        }
        let Ok(Validity::Unmet(unmet)) = validity_check(&kb.canonicalize_fact(f), kb, &declared) else {
            continue;
        };
        let basic: Vec<String> = unmet
            .iter()
            .filter(|a| matches!(a.name.as_str(), "Point" | "Line" | "Plane"))
            .map(|a| a.to_string())
            .collect();
        if !basic.is_empty() {
            c.flag(
                ViolationKind::UndeclaredEntity,
                field,
                text,
                format!("undeclared entity {}", basic.join(", ")),
            );
        }
    }

    let mut violations = c.out;
    let problem = if violations.is_empty() {
        match ProblemCdl::from_raw(&doc) {
            Ok(p) => Some(p),
            Err(e) => {
                violations.push(Violation {
                    rule: ViolationKind::Unparseable.rule(),
                    kind: ViolationKind::Unparseable,
                    field: String::new(),
                    element: String::new(),
                    message: e.to_string(),
                });
                None
            }
        }
    } else {
        None
    };
    Ok(ModelOutputReport {
        document: doc,
        violations,
        problem,
    })
}
