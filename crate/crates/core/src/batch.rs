//! Corpus loading and parallel batch solving.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdl::{answers_equal, parse_expr, ProblemCdl, RawProblemCdl, DEFAULT_REL_TOL};
use crate::engine::{search, SearchOutcome, SolveLimits, UnsolvedReason};
use crate::knowledge::KnowledgeBase;

/// Step budget of the reference envelope reported alongside each run.
pub const ENVELOPE_STEPS: usize = 57;
/// Time budget (seconds) of the reference envelope.
pub const ENVELOPE_SECS: f64 = 1.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subject {
    /// Composite solid structures.
    #[serde(rename = "CSS")]
    Css,
    /// Spatial metric relations.
    #[serde(rename = "SMR")]
    Smr,
    /// Solid shape identification.
    #[serde(rename = "SSI")]
    Ssi,
    /// Measurement of solid geometric forms.
    #[serde(rename = "MSGF")]
    Msgf,
}

impl Subject {
    pub const ALL: [Subject; 4] = [Subject::Css, Subject::Smr, Subject::Ssi, Subject::Msgf];

    pub fn code(self) -> &'static str {
        match self {
            Self::Css => "CSS",
            Self::Smr => "SMR",
            Self::Ssi => "SSI",
            Self::Msgf => "MSGF",
        }
    }
}

/// One problem of a corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub id: String,
    #[serde(default)]
    pub text: String,
    /// Image file name, relative to the record's directory.
    #[serde(default)]
    pub image: Option<String>,
    #[serde(default)]
    pub subjects: Vec<Subject>,
    #[serde(default)]
    pub cdl: Option<RawProblemCdl>,
    /// Reference answer; falls back to the CDL's `problem_answer` when empty.
    #[serde(default)]
    pub answer: String,
}

impl ProblemRecord {
    pub fn reference_answer(&self) -> &str {
        if self.answer.trim().is_empty() {
            self.cdl.as_ref().map(|c| c.problem_answer.as_str()).unwrap_or("")
        } else {
            &self.answer
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub file: String,
    pub reason: String,
}

/// Read every `*.json` record in `dir`, in file-name order.
///
/// Unreadable or malformed records are returned as skipped rather than failing the load.
pub fn load_corpus(dir: &Path) -> std::io::Result<(Vec<ProblemRecord>, Vec<SkippedRecord>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for path in files {
        let file = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let rec = std::fs::read_to_string(&path)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str::<ProblemRecord>(&t).map_err(|e| e.to_string()));
        match rec {
            Ok(r) => match r.cdl.as_ref().map(ProblemCdl::from_raw) {
                Some(Err(e)) => skipped.push(SkippedRecord {
                    file,
                    reason: format!("invalid CDL: {e}"),
                }),
                _ => records.push(r),
            },
            Err(reason) => skipped.push(SkippedRecord { file, reason }),
        }
    }
    Ok((records, skipped))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProblemOutcome {
    Solved { value: Option<String> },
    Unsolved { reason: UnsolvedReason },
    Contradiction { givens: Vec<String> },
    Error { message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemResult {
    pub id: String,
    pub subjects: Vec<Subject>,
    pub outcome: ProblemOutcome,
    pub steps: usize,
    pub time_secs: f64,
    pub answer_match: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub total: usize,
    pub solved: usize,
    pub matched: usize,
    /// `matched / total`, 0 for an empty group.
    pub accuracy: f64,
    pub avg_steps: f64,
    pub avg_time_secs: f64,
}

impl Aggregate {
    fn of<'a>(rows: impl Iterator<Item = &'a ProblemResult>) -> Self {
        let mut a = Aggregate::default();
        let (mut steps, mut time) = (0usize, 0f64);
        for r in rows {
            a.total += 1;
            a.solved += matches!(r.outcome, ProblemOutcome::Solved { .. }) as usize;
            a.matched += r.answer_match as usize;
            steps += r.steps;
            time += r.time_secs;
        }
        if a.total > 0 {
            let n = a.total as f64;
            a.accuracy = a.matched as f64 / n;
            a.avg_steps = steps as f64 / n;
            a.avg_time_secs = time / n;
        }
        a
    }
}

/// How many solved problems stayed within the reference step and time envelope.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub step_cap: usize,
    pub time_cap_secs: f64,
    pub solved: usize,
    pub within: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Sorted by id.
    pub problems: Vec<ProblemResult>,
    pub skipped: Vec<SkippedRecord>,
    pub overall: Aggregate,
    /// A problem counts once under each of its tags.
    pub per_subject: BTreeMap<Subject, Aggregate>,
    pub envelope: Envelope,
}

impl RunReport {
    pub fn new(mut problems: Vec<ProblemResult>, skipped: Vec<SkippedRecord>) -> Self {
        problems.sort_by(|a, b| a.id.cmp(&b.id));
        let overall = Aggregate::of(problems.iter());
        let per_subject = Subject::ALL
            .iter()
            .map(|&s| (s, Aggregate::of(problems.iter().filter(|r| r.subjects.contains(&s)))))
            .collect();
        let solved: Vec<&ProblemResult> = problems
            .iter()
            .filter(|r| matches!(r.outcome, ProblemOutcome::Solved { .. }))
            .collect();
        let within = solved
            .iter()
            .filter(|r| r.steps <= ENVELOPE_STEPS && r.time_secs <= ENVELOPE_SECS)
            .count();
        let envelope = Envelope {
            step_cap: ENVELOPE_STEPS,
            time_cap_secs: ENVELOPE_SECS,
            solved: solved.len(),
            within,
            fraction: if solved.is_empty() { 1.0 } else { within as f64 / solved.len() as f64 },
        };
        Self {
            problems,
            skipped,
            overall,
            per_subject,
            envelope,
        }
    }

    /// The same report with every wall-clock measurement set to zero.
    pub fn without_timing(&self) -> Self {
        let problems = self
            .problems
            .iter()
            .map(|r| ProblemResult {
                time_secs: 0.0,
                ..r.clone()
            })
            .collect();
        Self::new(problems, self.skipped.clone())
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:<12} {:>6} {:>9} {:>6}", "id", "outcome", "steps", "time(s)", "match")?;
        for r in &self.problems {
            let outcome = match &r.outcome {
                ProblemOutcome::Solved { .. } => "solved".to_string(),
                ProblemOutcome::Unsolved { reason } => reason.to_string(),
                ProblemOutcome::Contradiction { .. } => "contradiction".to_string(),
                ProblemOutcome::Error { .. } => "error".to_string(),
            };
            writeln!(
                f,
                "{:<24} {:<12} {:>6} {:>9.3} {:>6}",
                r.id,
                outcome,
                r.steps,
                r.time_secs,
                if r.answer_match { "yes" } else { "no" }
            )?;
        }
        for s in &self.skipped {
            writeln!(f, "skipped {}: {}", s.file, s.reason)?;
        }
        writeln!(f)?;
        write!(f, "{:<10} {:>8}", "", "Overall")?;
        for s in Subject::ALL {
            write!(f, " {:>8}", s.code())?;
        }
        writeln!(f)?;
        let pct = |a: &Aggregate| {
            if a.total == 0 {
                "-".to_string()
            } else {
                format!("{:.1}%", a.accuracy * 100.0)
            }
        };
        write!(f, "{:<10} {:>8}", "accuracy", pct(&self.overall))?;
        for s in Subject::ALL {
            write!(f, " {:>8}", pct(&self.per_subject[&s]))?;
        }
        writeln!(f)?;
        write!(f, "{:<10} {:>8}", "problems", self.overall.total)?;
        for s in Subject::ALL {
            write!(f, " {:>8}", self.per_subject[&s].total)?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "avg steps {:.1}, avg time {:.3}s; {}/{} solved within {} steps and {}s",
            self.overall.avg_steps,
            self.overall.avg_time_secs,
            self.envelope.within,
            self.envelope.solved,
            self.envelope.step_cap,
            self.envelope.time_cap_secs
        )
    }
}

/// Solve one record and grade it against its reference answer.
pub fn solve_record(rec: &ProblemRecord, kb: &KnowledgeBase, limits: &SolveLimits) -> ProblemResult {
    let start = std::time::Instant::now();
    let result = |outcome, steps, answer_match| ProblemResult {
        id: rec.id.clone(),
        subjects: rec.subjects.clone(),
        outcome,
        steps,
        time_secs: start.elapsed().as_secs_f64(),
        answer_match,
    };
    let Some(raw) = &rec.cdl else {
        return result(
            ProblemOutcome::Error {
                message: "record has no CDL annotation".into(),
            },
            0,
            false,
        );
    };
    let p = match ProblemCdl::from_raw(raw) {
        Ok(p) => p,
        Err(e) => return result(ProblemOutcome::Error { message: e.to_string() }, 0, false),
    };
    match search(&p, kb, limits) {
        Err(e) => result(ProblemOutcome::Error { message: e.to_string() }, 0, false),
        Ok(SearchOutcome::Solved(t)) => {
            let reference = rec.reference_answer().trim();
            let matched = match &t.value {
                None => reference.is_empty(),
                Some(v) => match (parse_expr(v), parse_expr(reference)) {
                    (Ok(a), Ok(b)) => answers_equal(&a, &b, DEFAULT_REL_TOL).unwrap_or(false),
                    _ => false,
                },
            };
            result(ProblemOutcome::Solved { value: t.value }, t.step_count, matched)
        }
        Ok(SearchOutcome::Unsolved { reason, step_count, .. }) => {
            result(ProblemOutcome::Unsolved { reason }, step_count, false)
        }
        Ok(SearchOutcome::Contradiction { conflict, step_count, .. }) => result(
            ProblemOutcome::Contradiction {
                givens: conflict.givens,
            },
            step_count,
            false,
        ),
    }
}

/// Solve every record on `parallel` worker threads.
pub fn batch_solve(
    records: &[ProblemRecord],
    skipped: Vec<SkippedRecord>,
    kb: &KnowledgeBase,
    limits: &SolveLimits,
    parallel: usize,
) -> RunReport {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .expect("thread pool");
    let rows = pool.install(|| records.par_iter().map(|r| solve_record(r, kb, limits)).collect());
    RunReport::new(rows, skipped)
}
