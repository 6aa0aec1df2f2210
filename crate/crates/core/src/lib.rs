//! Biomedical instruction-data pipeline: ingest annotated corpora, curate
//! them, forge bilingual instruction instances, plan two-stage fine-tuning and
//! score model generations.

pub mod curation;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod forge;
pub mod ingest;
pub mod jsonl;
pub mod schema;
pub mod stage;

pub use error::{Error, Result};
pub use jsonl::Registry;
pub use schema::*;

/// Evaluation report in double precision.
pub type EvalReport = eval::Report<f64>;
/// Evaluation report in single precision.
pub type EvalReport32 = eval::Report<f32>;
/// Evaluation report in exact rational arithmetic.
pub type ExactEvalReport = eval::Report<num_rational::Ratio<i64>>;
pub type PrfScores = eval::Prf<f64>;
