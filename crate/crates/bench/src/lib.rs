//! Shared inputs for the benchmarks.

use std::path::PathBuf;

use solidgeo::batch::{load_corpus, ProblemRecord};
use solidgeo::cdl::ProblemCdl;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus")
}

pub fn corpus() -> Vec<ProblemRecord> {
    load_corpus(&corpus_dir()).expect("curated corpus").0
}

/// The parsed CDL of corpus problem `id`.
pub fn problem(id: &str) -> ProblemCdl {
    let rec = corpus().into_iter().find(|r| r.id == id).expect("known id");
    ProblemCdl::from_raw(rec.cdl.as_ref().expect("annotated")).expect("valid CDL")
}
