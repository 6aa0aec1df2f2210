use std::collections::{BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forge::instance_id;
use crate::schema::{Corpus, DatasetDescriptor, RelationTriple, TaskType, UnifiedDocument};

use super::metrics::{score_accuracy, score_micro_f1, EntityItem, Report, Scalar};
use super::parse::{parse_ner_output, parse_qa_choice, parse_re_output, parse_tc_output, ParseOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub instance_id: String,
    pub raw_text: String,
}

/// A gold document under the instance id its forged instance carries.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldInstance {
    pub instance_id: String,
    pub doc: UnifiedDocument,
}

impl GoldInstance {
    pub fn from_corpus(corpus: &Corpus) -> Vec<GoldInstance> {
        corpus
            .docs
            .iter()
            .map(|d| GoldInstance {
                instance_id: instance_id(&corpus.descriptor.id, &d.doc_id),
                doc: d.clone(),
            })
            .collect()
    }
}

/// Deterministic uniform sample of `n` items without replacement, returned
/// in original order. `n >= len` returns everything.
pub fn sample_subset<T: Clone>(items: &[T], n: usize, seed: u64) -> Vec<T> {
    if n >= items.len() {
        return items.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

/// Tasks with a quantitative metric.
pub fn is_scored(task: TaskType) -> bool {
    matches!(task, TaskType::Ner | TaskType::Re | TaskType::Tc | TaskType::QaMc)
}

pub fn gold_entities(doc: &UnifiedDocument) -> BTreeSet<EntityItem> {
    doc.entities
        .iter()
        .map(|e| EntityItem::new(&e.surface, &e.etype))
        .collect()
}

pub fn gold_relations(doc: &UnifiedDocument) -> BTreeSet<RelationTriple> {
    doc.relations.iter().cloned().collect()
}

pub fn gold_labels(doc: &UnifiedDocument) -> BTreeSet<String> {
    doc.labels.iter().cloned().collect()
}

/// Multi-answer items are scored against their first key.
pub fn gold_choice(doc: &UnifiedDocument) -> Option<String> {
    doc.qa.as_ref().and_then(|q| q.answer_keys.first().cloned())
}

/// Declared vocabulary followed by any extra labels the gold data uses.
fn vocabulary<'a>(desc: &DatasetDescriptor, extra: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut vocab = desc.label_vocab.clone();
    for label in extra {
        if !vocab.iter().any(|v| v == label) {
            vocab.push(label.to_string());
        }
    }
    vocab
}

/// Parses one generation for `doc` with the parser `desc.task` calls for.
pub fn parse_for(raw: &str, doc: &UnifiedDocument, desc: &DatasetDescriptor, vocab: &[String]) -> Result<ParseOutcome> {
    Ok(match desc.task {
        TaskType::Ner => parse_ner_output(raw, desc.language, vocab),
        TaskType::Re => parse_re_output(raw, desc.language, vocab, desc.prompted_relation()),
        TaskType::Tc => parse_tc_output(raw, desc.language, vocab),
        TaskType::QaMc => {
            let options = doc.qa.as_ref().and_then(|q| q.options.as_deref()).unwrap_or(&[]);
            parse_qa_choice(raw, options)
        }
        other => return Err(Error::UnknownTaskMetric(other)),
    })
}

/// Parses every prediction (missing ones as empty text) and scores the
/// dataset with micro-F1 or accuracy.
pub fn evaluate_dataset<S: Scalar>(
    gold: &[GoldInstance],
    predictions: &HashMap<String, String>,
    desc: &DatasetDescriptor,
) -> Result<Report<S>> {
    if !is_scored(desc.task) {
        return Err(Error::UnknownTaskMetric(desc.task));
    }
    let vocab = match desc.task {
        TaskType::Ner => vocabulary(
            desc,
            gold.iter()
                .flat_map(|g| g.doc.entities.iter().map(|e| e.etype.as_str())),
        ),
        TaskType::Re => vocabulary(
            desc,
            gold.iter()
                .flat_map(|g| g.doc.relations.iter().map(|r| r.rtype.as_str())),
        ),
        TaskType::Tc => vocabulary(desc, gold.iter().flat_map(|g| g.doc.labels.iter().map(String::as_str))),
        _ => Vec::new(),
    };
    let parsed: Vec<ParseOutcome> = gold
        .par_iter()
        .map(|g| {
            let raw = predictions.get(&g.instance_id).map_or("", String::as_str);
            parse_for(raw, &g.doc, desc, &vocab)
        })
        .collect::<Result<_>>()?;
    let unparseable = parsed.iter().filter(|p| p.is_unparseable()).count();

    let mut report: Report<S> = match desc.task {
        TaskType::Ner => {
            let g: Vec<_> = gold.iter().map(|g| gold_entities(&g.doc)).collect();
            let p: Vec<_> = parsed.into_iter().map(|p| p.ner).collect();
            score_micro_f1(&g, &p)?
        }
        TaskType::Re => {
            let g: Vec<_> = gold.iter().map(|g| gold_relations(&g.doc)).collect();
            let p: Vec<_> = parsed.into_iter().map(|p| p.re).collect();
            score_micro_f1(&g, &p)?
        }
        TaskType::Tc => {
            let g: Vec<_> = gold.iter().map(|g| gold_labels(&g.doc)).collect();
            let p: Vec<_> = parsed.into_iter().map(|p| p.tc).collect();
            score_micro_f1(&g, &p)?
        }
        _ => {
            let g: Vec<String> = gold.iter().map(|g| gold_choice(&g.doc).unwrap_or_default()).collect();
            let p: Vec<Option<String>> = parsed.into_iter().map(|p| p.qa_choice).collect();
            score_accuracy(&g, &p)?
        }
    };
    report.unparseable_count = unparseable;
    Ok(report.with_dataset(desc.id.clone()))
}
