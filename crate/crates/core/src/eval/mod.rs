//! Inverse parsing of model generations and metric computation.

mod harness;
mod metrics;
mod parse;

pub use harness::{
    evaluate_dataset, gold_choice, gold_entities, gold_labels, gold_relations, is_scored, parse_for, sample_subset,
    GoldInstance, PredictionRecord,
};
pub use metrics::{score_accuracy, score_micro_f1, EntityItem, MetricName, Prf, Report, Scalar, Typed};
pub use parse::{parse_ner_output, parse_qa_choice, parse_re_output, parse_tc_output, ParseOutcome, ParseStatus};
