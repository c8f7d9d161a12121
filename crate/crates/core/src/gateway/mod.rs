//! Prompts for external models, validation of what they return, and the
//! HTTP client that talks to them.
//!
//! Only [`Provider::request_parse`] and [`Provider::request_solve`] touch the
//! network; everything else is pure.

mod provider;
mod validate;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cdl::{parse_expr, Expr, ParseError, RawProblemCdl};
use crate::knowledge::KnowledgeBase;

pub use provider::{completion_text, Provider, ProviderConfig, DEFAULT_SECRET_ENV};
pub use validate::{validate_model_output, ModelOutputReport, Violation, ViolationKind};

pub const PARSE_TEMPLATE: &str = include_str!("../../templates/parse_prompt.txt");
pub const SOLVE_TEMPLATE: &str = include_str!("../../templates/solve_prompt.txt");
pub const DESIGNED_SAMPLES_JSON: &str = include_str!("../../data/designed_samples.json");

const PREDICATES_SLOT: &str = "[valid_predicates_str]";
const EXAMPLES_SLOT: &str = "[examples_str]";

/// Example counts used in the few-shot experiments.
pub const SAMPLE_GRADIENTS: [usize; 4] = [15, 25, 35, 45];

/// Marker that introduces the answer line of a direct-solve completion.
pub const FINAL_ANSWER_MARKER: &str = "FINAL ANSWER:";

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("sample count {0} is not one of 15, 25, 35, 45")]
    BadSampleCount(usize),
    #[error("{requested} examples requested but only {available} are available")]
    NotEnoughSamples { requested: usize, available: usize },
    #[error("malformed model output: {0}")]
    MalformedDocument(String),
    #[error("no line starts with `{FINAL_ANSWER_MARKER}`")]
    MarkerAbsent,
    #[error("cannot parse final answer `{text}`: {source}")]
    BadAnswer { text: String, source: ParseError },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("provider rejected the credentials (HTTP {0})")]
    AuthFailure(u16),
    #[error("provider error (HTTP {status}): {body}")]
    Provider { status: u16, body: String },
    #[error("environment variable {0} holding the provider secret is not set")]
    MissingSecret(String),
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("cannot read image {path}: {source}")]
    Image {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A worked example shown to the model: a problem statement and its CDL.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignedSample {
    pub description: String,
    #[serde(flatten)]
    pub cdl: RawProblemCdl,
}

/// The shipped example corpus, in order.
pub fn designed_samples() -> Vec<DesignedSample> {
    serde_json::from_str(DESIGNED_SAMPLES_JSON).expect("shipped samples parse")
}

/// What the model is asked to formalize or solve.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInput {
    pub text: String,
    /// Image file path or `http(s)` URL.
    #[serde(default)]
    pub image: Option<String>,
}

/// A fully rendered parsing prompt.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    /// Template text up to the predicate list.
    pub preamble: String,
    /// One predicate name per line.
    pub predicate_list: String,
    pub examples: String,
    pub sample_count: usize,
    /// Template text between the predicate list and the examples.
    pub rules: String,
    /// Template text after the examples.
    pub closing: String,
    pub problem: ProblemInput,
    pub warnings: Vec<String>,
}

impl PromptBundle {
    /// The system message: the template with both slots filled.
    pub fn system_prompt(&self) -> String {
        format!(
            "{}{}{}{}{}",
            self.preamble, self.predicate_list, self.rules, self.examples, self.closing
        )
    }

    /// The user message text.
    pub fn user_prompt(&self) -> String {
        format!("Problem:\n{}\n", self.problem.text)
    }
}

#[derive(Serialize)]
struct ExampleOutput<'a> {
    construction_cdl: &'a [String],
    text_cdl: &'a [String],
    image_cdl: &'a [String],
    goal_cdl: &'a str,
    problem_answer: &'a str,
}

fn render_examples(samples: &[DesignedSample]) -> String {
    let mut out = String::new();
    for (i, s) in samples.iter().enumerate() {
        let c = &s.cdl;
        let json = serde_json::to_string(&ExampleOutput {
            construction_cdl: &c.construction_cdl,
            text_cdl: &c.text_cdl,
            image_cdl: &c.image_cdl,
            goal_cdl: &c.goal_cdl,
            problem_answer: &c.problem_answer,
        })
        .expect("example serializes");
        let _ = writeln!(out, "Example {}\nProblem: {}\nOutput: {}", i + 1, s.description, json);
    }
    out
}

/// Render the parsing prompt with the first `count` samples.
///
/// A count outside [`SAMPLE_GRADIENTS`] is an error unless `allow_override`
/// is set, in which case it is accepted with a warning.
pub fn build_parse_prompt(
    samples: &[DesignedSample],
    count: usize,
    kb: &KnowledgeBase,
    problem: &ProblemInput,
    allow_override: bool,
) -> Result<PromptBundle, GatewayError> {
    let mut warnings = Vec::new();
    if !SAMPLE_GRADIENTS.contains(&count) {
        if !allow_override {
            return Err(GatewayError::BadSampleCount(count));
        }
        warnings.push(format!("sample count {count} is outside the standard gradients 15/25/35/45"));
    }
    if count > samples.len() {
        return Err(GatewayError::NotEnoughSamples {
            requested: count,
            available: samples.len(),
        });
    }
    let (preamble, rest) = PARSE_TEMPLATE.split_once(PREDICATES_SLOT).expect("template has predicate slot");
    let (rules, closing) = rest.split_once(EXAMPLES_SLOT).expect("template has examples slot");
    let predicate_list = kb.predicate_names().collect::<Vec<_>>().join("\n");
    Ok(PromptBundle {
        preamble: preamble.to_string(),
        predicate_list,
        examples: render_examples(&samples[..count]),
        sample_count: count,
        rules: rules.to_string(),
        closing: closing.to_string(),
        problem: problem.clone(),
        warnings,
    })
}

/// The direct-solve prompt for `problem`.
pub fn build_solve_prompt(problem: &ProblemInput) -> String {
    format!("{SOLVE_TEMPLATE}{}\n", problem.text)
}

/// Parse the expression on the last line that starts with the answer marker.
pub fn extract_final_answer(completion: &str) -> Result<Expr, GatewayError> {
    let line = completion
        .lines()
        .rev()
        .map(|l| l.trim().trim_start_matches('*').trim_start())
        .find(|l| l.starts_with(FINAL_ANSWER_MARKER))
        .ok_or(GatewayError::MarkerAbsent)?;
    let text = line[FINAL_ANSWER_MARKER.len()..]
        .trim()
        .trim_matches('*')
        .trim()
        .trim_end_matches('.')
        .to_string();
    parse_expr(&text).map_err(|source| GatewayError::BadAnswer { text, source })
}
