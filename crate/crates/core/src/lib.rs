//! Formal solid geometry: a condition description language, a predicate and
//! theorem knowledge base, a forward-search reasoning engine with exact
//! algebra, the face-set composition algebra, fuzzy parse metrics and a
//! gateway to external models that produce CDL.

pub mod batch;
pub mod cdl;
pub mod engine;
pub mod gateway;
pub mod knowledge;
pub mod metrics;
pub mod solids;
