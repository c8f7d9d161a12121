//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines are
//! always printed: `cargo test -p solidgeo-core --test acceptance`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::chains::{attach, attach_avoiding, random_solid, Labels};
use common::mock::{completion, MockServer};
use common::oracle::{naive_fuzzy_jaccard, random_element};
use common::read_fixture;
use solidgeo::batch::{batch_solve, load_corpus, ProblemOutcome, RunReport};
use solidgeo::cdl::{answers_equal, parse_expr, ProblemCdl, RawProblemCdl, DEFAULT_REL_TOL};
use solidgeo::engine::{replay_trace, search, SearchOutcome, SolveLimits};
use solidgeo::gateway::{
    build_parse_prompt, completion_text, designed_samples, validate_model_output, ProblemInput, Provider,
    ProviderConfig, ViolationKind,
};
use solidgeo::knowledge::KnowledgeBase;
use solidgeo::metrics::{fuzzy_jaccard, match_score, normalize, Score};
use solidgeo::solids::{compose, is_closed_surface};

enum Verdict {
    Pass(String),
    /// Soft criterion missed; reported but not fatal.
    Warn(String),
}

type Check = fn() -> Result<Verdict, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || {
        format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64())
    })
}

fn corpus() -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn metrics_golden() -> Result<Verdict, String> {
    let start = Instant::now();
    for (raw, want) in [
        ("Equal(LengthOfLine(A,B),5)", "Equal(LengthOfLine(_V_),5)"),
        ("Equal(HeightOfCone(O,P),12)", "Equal(HeightOfCone(_V_),12)"),
        ("Shape(AB,BC,CD,DA)", "Shape(_V_,_V_,_V_,_V_)"),
        ("Collinear(PABQ)", "Collinear(_V_)"),
    ] {
        ensure(normalize(raw) == want, || format!("normalize({raw}) = {}", normalize(raw)))?;
    }
    for (p, g, want) in [
        ("Equal(_V_,5)", "Equal(_V_,5)", Score::EXACT),
        ("Equal(_V_,5)", "Equal(_V_,5.0)", Score::NAME_AND_NUMBER),
        ("Equal(_V_,5)", "Equal(_V_,3)", Score::NAME),
        ("Equal(_V_,5)", "LengthOf(_V_,5)", Score::NUMBER),
        ("Equal(_V_,5)", "LengthOf(_V_,3)", Score::NONE),
    ] {
        ensure(match_score(p, g) == want, || format!("S({p}, {g}) = {}", match_score(p, g)))?;
    }
    let none: [&str; 0] = [];
    ensure(fuzzy_jaccard(&none, &none) == 1.0, || "both empty != 1".into())?;
    ensure(fuzzy_jaccard(&["Shape(O)"], &none) == 0.0, || "one empty != 0".into())?;
    within(start.elapsed(), 1.0)?;
    Ok(Verdict::Pass("4 normalizations, 5 scores, 2 boundaries".into()))
}

fn jaccard_oracle() -> Result<Verdict, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for i in 0..1000 {
        let p: Vec<_> = (0..rng.gen_range(0..7)).map(|_| random_element(&mut rng)).collect();
        let g: Vec<_> = (0..rng.gen_range(0..7)).map(|_| random_element(&mut rng)).collect();
        let pr: Vec<String> = p.iter().map(|e| e.raw(&mut rng)).collect();
        let gr: Vec<String> = g.iter().map(|e| e.raw(&mut rng)).collect();
        let want = naive_fuzzy_jaccard(&p, &g);
        let want = *want.numer() as f64 / *want.denom() as f64;
        let got = fuzzy_jaccard(&pr, &gr);
        ensure(got == want, || format!("pair {i}: {got} != {want} for {pr:?} / {gr:?}"))?;
    }
    within(start.elapsed(), 10.0)?;
    Ok(Verdict::Pass("1000 pairs equal the naive evaluation".into()))
}

fn solids_algebra() -> Result<Verdict, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xfacade);
    for i in 0..1000 {
        let mut labels = Labels::default();
        let a = random_solid(&mut rng, &mut labels);
        let (s_ab, b, s_ba) = attach(&mut rng, &a, &mut labels);
        let ab = compose(&a, &s_ab, &b, &s_ba).map_err(|e| e.to_string())?;
        ensure(is_closed_surface(&ab), || format!("case {i}: glued solid is open"))?;
        let ba = compose(&b, &s_ba, &a, &s_ab).map_err(|e| e.to_string())?;
        ensure(ab == ba, || format!("case {i}: gluing does not commute"))?;
        let (s_bc, c, s_cb) = attach_avoiding(&mut rng, &b, Some(&s_ba), &mut labels);
        let left = compose(&ab, &s_bc, &c, &s_cb).map_err(|e| e.to_string())?;
        let bc = compose(&b, &s_bc, &c, &s_cb).map_err(|e| e.to_string())?;
        let right = compose(&a, &s_ab, &bc, &s_ba).map_err(|e| e.to_string())?;
        ensure(left == right, || format!("case {i}: gluing does not associate"))?;
        ensure(is_closed_surface(&left), || format!("case {i}: chain is open"))?;
    }
    within(start.elapsed(), 10.0)?;
    Ok(Verdict::Pass("1000 glue cases closed, commutative, associative".into()))
}

fn engine_corpus() -> Result<Verdict, String> {
    let start = Instant::now();
    let kb = KnowledgeBase::shipped();
    let (records, skipped) = load_corpus(&corpus()).map_err(|e| e.to_string())?;
    ensure(records.len() == 25 && skipped.is_empty(), || {
        format!("{} records, {} skipped", records.len(), skipped.len())
    })?;
    let limits = SolveLimits::default();
    for r in &records {
        let p = ProblemCdl::from_raw(r.cdl.as_ref().unwrap()).map_err(|e| e.to_string())?;
        let t0 = Instant::now();
        let out = search(&p, &kb, &limits).map_err(|e| format!("{}: {e}", r.id))?;
        let SearchOutcome::Solved(trace) = out else {
            return Err(format!("{} not solved: {out:?}", r.id));
        };
        ensure(t0.elapsed() < limits.time_limit, || format!("{} over budget", r.id))?;
        let reference = r.reference_answer();
        if !reference.is_empty() {
            let got = parse_expr(trace.value.as_deref().unwrap_or("")).map_err(|e| e.to_string())?;
            let want = parse_expr(reference).map_err(|e| e.to_string())?;
            ensure(answers_equal(&got, &want, DEFAULT_REL_TOL) == Ok(true), || {
                format!("{}: {got} != {want}", r.id)
            })?;
        }
        replay_trace(&trace, &p, &kb).map_err(|d| format!("{} replay: {d}", r.id))?;
    }
    within(start.elapsed(), 60.0)?;
    Ok(Verdict::Pass("25/25 solved, matched and replayed".into()))
}

fn contradiction() -> Result<Verdict, String> {
    let start = Instant::now();
    let kb = KnowledgeBase::shipped();
    let raw: RawProblemCdl =
        serde_json::from_str(&read_fixture("cube_contradiction.json")).map_err(|e| e.to_string())?;
    let p = ProblemCdl::from_raw(&raw).map_err(|e| e.to_string())?;
    let out = search(&p, &kb, &SolveLimits::default()).map_err(|e| e.to_string())?;
    let SearchOutcome::Contradiction { conflict, .. } = out else {
        return Err(format!("expected a contradiction, got {out:?}"));
    };
    for g in ["Equal(LengthOfLine(AB),2)", "Equal(LengthOfLine(BC),3)"] {
        ensure(conflict.givens.iter().any(|x| x == g), || format!("{g} not named in {:?}", conflict.givens))?;
    }
    within(start.elapsed(), 1.0)?;
    Ok(Verdict::Pass("both side lengths named".into()))
}

fn step_report() -> Result<Verdict, String> {
    let kb = KnowledgeBase::shipped();
    let (records, skipped) = load_corpus(&corpus()).map_err(|e| e.to_string())?;
    let r = batch_solve(&records, skipped, &kb, &SolveLimits::default(), 4);
    let solved: Vec<_> = r
        .problems
        .iter()
        .filter(|p| matches!(p.outcome, ProblemOutcome::Solved { .. }))
        .collect();
    ensure(r.problems.len() == records.len(), || "missing rows".into())?;
    ensure(r.problems.iter().all(|p| p.time_secs.is_finite() && p.time_secs >= 0.0), || "bad time".into())?;
    let within = solved
        .iter()
        .filter(|p| p.steps <= r.envelope.step_cap && p.time_secs <= r.envelope.time_cap_secs)
        .count();
    ensure(r.envelope.solved == solved.len() && r.envelope.within == within, || "envelope mismatch".into())?;
    let steps: usize = r.problems.iter().map(|p| p.steps).sum();
    ensure((r.overall.avg_steps - steps as f64 / r.problems.len() as f64).abs() < 1e-9, || "avg steps".into())?;
    let summary = format!(
        "{}/{} solved within {} steps and {}s ({:.0}%)",
        within,
        solved.len(),
        r.envelope.step_cap,
        r.envelope.time_cap_secs,
        r.envelope.fraction * 100.0
    );
    if r.envelope.fraction >= 0.8 {
        Ok(Verdict::Pass(summary))
    } else {
        Ok(Verdict::Warn(format!("{summary}, below 80%")))
    }
}

fn gateway() -> Result<Verdict, String> {
    let kb = KnowledgeBase::shipped();
    std::env::set_var("SOLIDGEO_ACCEPTANCE_KEY", "k");
    let cases: [(&str, &[ViolationKind]); 7] = [
        ("clean", &[]),
        ("rule0_illegal_predicate", &[ViolationKind::IllegalPredicate]),
        ("rule2_construction_misplaced", &[ViolationKind::ConstructionMisplaced]),
        ("rule3_answer_not_pure", &[ViolationKind::AnswerNotPure]),
        ("rule4_goal_not_value", &[ViolationKind::GoalNotValue]),
        ("rule5_illegal_operator", &[ViolationKind::IllegalOperator, ViolationKind::WhitespaceInPredicate]),
        ("rule6_undeclared_entity", &[ViolationKind::UndeclaredEntity]),
    ];
    let script = cases
        .iter()
        .map(|(name, _)| (200, completion(&read_fixture(&format!("model_outputs/{name}.json")))))
        .collect();
    let server = MockServer::start(script);
    let config = ProviderConfig::from_toml_str(&format!(
        "endpoint = \"{}\"\nmodel = \"mock\"\napi_key_env = \"SOLIDGEO_ACCEPTANCE_KEY\"\n",
        server.url
    ))
    .map_err(|e| e.to_string())?;
    let provider = Provider::new(config).map_err(|e| e.to_string())?;
    let input = ProblemInput {
        text: "A cone has base radius 3 and height 4. Find its volume.".into(),
        image: None,
    };
    let bundle = build_parse_prompt(&designed_samples(), 45, &kb, &input, false).map_err(|e| e.to_string())?;
    let again = build_parse_prompt(&designed_samples(), 45, &kb, &input, false).map_err(|e| e.to_string())?;
    ensure(bundle.system_prompt().as_bytes() == again.system_prompt().as_bytes() && bundle == again, || {
        "prompt differs between builds".into()
    })?;
    for (name, want) in cases {
        let body = provider.request_parse(&bundle).map_err(|e| e.to_string())?;
        let report = validate_model_output(&completion_text(&body), &kb).map_err(|e| e.to_string())?;
        let got: std::collections::BTreeSet<_> = report.violations.iter().map(|v| v.kind).collect();
        let want: std::collections::BTreeSet<_> = want.iter().copied().collect();
        ensure(got == want, || format!("{name}: {got:?} != {want:?}"))?;
    }
    server.join();
    Ok(Verdict::Pass("6 rule fixtures and the clean one classified; prompt stable".into()))
}

fn determinism() -> Result<Verdict, String> {
    let kb = KnowledgeBase::shipped();
    let (records, skipped) = load_corpus(&corpus()).map_err(|e| e.to_string())?;
    let run = || -> RunReport { batch_solve(&records, skipped.clone(), &kb, &SolveLimits::default(), 4) };
    let (a, b) = (run(), run());
    ensure(a.without_timing() == b.without_timing(), || "reports differ".into())?;
    Ok(Verdict::Pass("two runs agree apart from wall time".into()))
}

fn main() {
    let checks: [(&str, Check); 8] = [
        ("metrics golden suite", metrics_golden),
        ("fuzzy Jaccard vs naive oracle", jaccard_oracle),
        ("solids algebra", solids_algebra),
        ("engine on curated corpus", engine_corpus),
        ("contradiction detection", contradiction),
        ("step/time report", step_report),
        ("gateway validation", gateway),
        ("determinism", determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(Verdict::Pass(detail)) => println!("criterion {}: {name} ... PASS ({detail}; {secs:.2}s)", i + 1),
            Ok(Verdict::Warn(detail)) => {
                println!("criterion {}: {name} ... PASS with warning ({detail}; {secs:.2}s)", i + 1)
            }
            Err(why) => {
                failed += 1;
                println!("criterion {}: {name} ... FAIL ({why}; {secs:.2}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
