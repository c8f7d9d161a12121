use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use solidgeo::batch::{batch_solve, load_corpus, ProblemRecord};
use solidgeo::cdl::{ProblemCdl, RawProblemCdl};
use solidgeo::engine::{search, EngineError, SearchOutcome, SolveLimits, Traversal, DEFAULT_STEP_CAP};
use solidgeo::gateway::{
    build_parse_prompt, completion_text, designed_samples, validate_model_output, GatewayError, ProblemInput,
    Provider, ProviderConfig,
};
use solidgeo::knowledge::{KnowledgeBase, SHIPPED_PREDICATES, SHIPPED_THEOREMS};
use solidgeo::metrics::score_corpus;

/// Process exit codes. Scripts may rely on these values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
enum Exit {
    Ok = 0,
    Unsolved = 10,
    Contradiction = 11,
    Violations = 12,
    Input = 20,
    Provider = 21,
}

/// Failure carrying the exit code it should produce.
#[derive(Debug)]
struct Failure(Exit, anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(Exit::Input, e.into())
    }
}

fn provider_failure(e: GatewayError) -> Failure {
    Failure(Exit::Provider, e.into())
}

#[derive(Parser)]
#[command(name = "solidgeo", version, about = "Formal solid geometry: parse, reason, score.")]
struct Cli {
    /// Predicate GDL file (defaults to the shipped library).
    #[arg(long, global = true)]
    kb_predicates: Option<PathBuf>,
    /// Theorem GDL file (defaults to the shipped bank).
    #[arg(long, global = true)]
    kb_theorems: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Structured,
}

#[derive(Args, Clone)]
struct LimitArgs {
    /// Time budget in seconds.
    #[arg(long, default_value_t = 300.0)]
    time_limit: f64,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: usize,
    #[arg(long, default_value = "bfs")]
    traversal: Traversal,
}

impl LimitArgs {
    fn limits(&self) -> Result<SolveLimits> {
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            bail!("--time-limit must be a positive number of seconds");
        }
        Ok(SolveLimits {
            time_limit: Duration::from_secs_f64(self.time_limit),
            step_cap: self.step_cap,
            traversal: self.traversal,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load the predicate and theorem files and report what they declare.
    ValidateKb,
    /// Solve one problem (a CDL document or a corpus record).
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Solve every record of a corpus directory and report accuracy.
    BatchSolve {
        corpus: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[command(flatten)]
        limits: LimitArgs,
    },
    /// Compare predicted CDL against ground truth.
    Score { predictions: PathBuf, ground_truth: PathBuf },
    /// Ask a model provider to formalize a problem and validate its answer.
    Parse {
        problem: PathBuf,
        #[arg(long)]
        provider_config: PathBuf,
        #[arg(long, default_value_t = 45)]
        samples: usize,
        /// Accept a sample count other than 15, 25, 35 or 45.
        #[arg(long)]
        allow_sample_override: bool,
        /// Write the validated CDL document here.
        #[arg(long)]
        write: Option<PathBuf>,
        /// Run the engine on the validated CDL.
        #[arg(long)]
        then_solve: bool,
        #[command(flatten)]
        limits: LimitArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code as u8)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_kb(cli: &Cli) -> Result<KnowledgeBase> {
    if cli.kb_predicates.is_none() && cli.kb_theorems.is_none() {
        return Ok(KnowledgeBase::shipped());
    }
    let preds = match &cli.kb_predicates {
        Some(p) => read(p)?,
        None => SHIPPED_PREDICATES.to_string(),
    };
    let thms = match &cli.kb_theorems {
        Some(p) => read(p)?,
        None => SHIPPED_THEOREMS.to_string(),
    };
    KnowledgeBase::load(&preds, &thms).context("knowledge base failed to load")
}

fn emit<T: Serialize>(out: Output, value: &T, text: impl FnOnce() -> String) {
    match out {
        Output::Structured => println!("{}", serde_json::to_string_pretty(value).expect("serializable")),
        Output::Text => {
            let t = text();
            if t.ends_with('\n') {
                print!("{t}");
            } else {
                println!("{t}");
            }
        }
    }
}

/// A problem file holds either a bare CDL document or a record with a `cdl` field.
fn read_problem(path: &Path) -> Result<RawProblemCdl> {
    let v: Value = serde_json::from_str(&read(path)?).with_context(|| format!("{} is not JSON", path.display()))?;
    if v.get("cdl").is_some() {
        let rec: ProblemRecord = serde_json::from_value(v)?;
        return rec.cdl.with_context(|| format!("{} has a null cdl field", path.display()));
    }
    serde_json::from_value(v).with_context(|| format!("{} is not a CDL document", path.display()))
}

fn run(cli: &Cli) -> Result<Exit, Failure> {
    match &cli.command {
        Command::ValidateKb => {
            let kb = load_kb(cli)?;
            emit(cli.output, kb.report(), || kb.report().to_string());
            Ok(Exit::Ok)
        }
        Command::Solve { problem, limits } => {
            let kb = load_kb(cli)?;
            let raw = read_problem(problem)?;
            let p = ProblemCdl::from_raw(&raw).context("invalid problem")?;
            solve_and_report(cli.output, &p, &kb, &limits.limits()?)
        }
        Command::BatchSolve {
            corpus,
            parallel,
            limits,
        } => {
            let kb = load_kb(cli)?;
            let (records, skipped) =
                load_corpus(corpus).with_context(|| format!("cannot read corpus {}", corpus.display()))?;
            let report = batch_solve(&records, skipped, &kb, &limits.limits()?, *parallel);
            emit(cli.output, &report, || report.to_string());
            Ok(Exit::Ok)
        }
        Command::Score {
            predictions,
            ground_truth,
        } => {
            let pred = read_cdl_map(predictions)?;
            let gt = read_cdl_map(ground_truth)?;
            let report = score_corpus(&pred, &gt);
            emit(cli.output, &report, || report.to_string());
            Ok(Exit::Ok)
        }
        Command::Parse {
            problem,
            provider_config,
            samples,
            allow_sample_override,
            write,
            then_solve,
            limits,
        } => {
            let kb = load_kb(cli)?;
            let input = read_input(problem)?;
            let config = ProviderConfig::load(provider_config).map_err(|e| Failure(Exit::Input, e.into()))?;
            let bundle = build_parse_prompt(&designed_samples(), *samples, &kb, &input, *allow_sample_override)
                .map_err(|e| Failure(Exit::Input, e.into()))?;
            for w in &bundle.warnings {
                eprintln!("warning: {w}");
            }
            let provider = Provider::new(config).map_err(provider_failure)?;
            let body = provider.request_parse(&bundle).map_err(provider_failure)?;
            let report = validate_model_output(&completion_text(&body), &kb).map_err(provider_failure)?;
            let Some(p) = report.problem.clone() else {
                emit(cli.output, &report, || {
                    let mut s = String::from("model output violates the CDL rules:\n");
                    for v in &report.violations {
                        s += &format!("  rule {} [{}] {}: {}\n", v.rule, v.field, v.element, v.message);
                    }
                    s
                });
                return Ok(Exit::Violations);
            };
            if let Some(path) = write {
                std::fs::write(path, serde_json::to_string_pretty(&report.document)? + "\n")
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            if !then_solve {
                emit(cli.output, &report.document, || {
                    serde_json::to_string_pretty(&report.document).expect("serializable") + "\n"
                });
                return Ok(Exit::Ok);
            }
            if cli.output == Output::Text {
                println!("{}", serde_json::to_string_pretty(&report.document)?);
            }
            solve_and_report(cli.output, &p, &kb, &limits.limits()?)
        }
    }
}

fn read_input(path: &Path) -> Result<ProblemInput> {
    let v: Value = serde_json::from_str(&read(path)?).with_context(|| format!("{} is not JSON", path.display()))?;
    let text = v["text"].as_str().context("problem file needs a text field")?.to_string();
    // Image paths are relative to the problem file.
    let image = v["image"].as_str().map(|img| {
        if img.contains("://") || img.starts_with("data:") || Path::new(img).is_absolute() {
            img.to_string()
        } else {
            path.parent().unwrap_or(Path::new(".")).join(img).display().to_string()
        }
    });
    Ok(ProblemInput { text, image })
}

/// Predictions or ground truth: an object keyed by id, or a list of records.
fn read_cdl_map(path: &Path) -> Result<BTreeMap<String, RawProblemCdl>> {
    let v: Value = serde_json::from_str(&read(path)?).with_context(|| format!("{} is not JSON", path.display()))?;
    match v {
        Value::Array(items) => items
            .into_iter()
            .map(|item| {
                let rec: ProblemRecord = serde_json::from_value(item)?;
                let cdl = rec.cdl.with_context(|| format!("record {} has no cdl", rec.id))?;
                Ok((rec.id, cdl))
            })
            .collect(),
        Value::Object(_) => Ok(serde_json::from_value(v)?),
        _ => bail!("{} must hold an object or an array", path.display()),
    }
}

fn solve_and_report(out: Output, p: &ProblemCdl, kb: &KnowledgeBase, limits: &SolveLimits) -> Result<Exit, Failure> {
    let outcome = match search(p, kb, limits) {
        Ok(o) => o,
        Err(EngineError::Contradiction(conflict)) => SearchOutcome::Contradiction {
            conflict,
            step_count: 0,
            elapsed_secs: 0.0,
        },
        Err(e) => return Err(Failure(Exit::Input, e.into())),
    };
    let code = match &outcome {
        SearchOutcome::Solved(_) => Exit::Ok,
        SearchOutcome::Unsolved { .. } => Exit::Unsolved,
        SearchOutcome::Contradiction { .. } => Exit::Contradiction,
    };
    emit(out, &outcome, || match &outcome {
        SearchOutcome::Solved(t) => t.to_string(),
        SearchOutcome::Unsolved {
            reason,
            step_count,
            elapsed_secs,
        } => format!("unsolved ({reason}) after {step_count} steps in {elapsed_secs:.3}s\n"),
        SearchOutcome::Contradiction { conflict, .. } => format!("contradiction\n{conflict}"),
    });
    Ok(code)
}
