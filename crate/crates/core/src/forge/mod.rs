//! Turns harmonized documents into (instruction, input, output) records.

mod bank;
pub mod grammar;
mod template;

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::schema::{Corpus, DatasetDescriptor, Language, Speaker, TaskType, UnifiedDocument};

pub use bank::{default_template_bank, default_templates};
pub use grammar::{serialize_gold, serialize_gold_with};
pub use template::{allowed_slots, InstructionTemplate, TemplateBank, SLOTS};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionInstance {
    pub instance_id: String,
    pub dataset_id: String,
    pub task: TaskType,
    pub language: Language,
    pub template_id: String,
    pub instruction: String,
    pub input: String,
    pub output: String,
    pub source_doc_id: String,
}

pub fn instance_id(dataset_id: &str, doc_id: &str) -> String {
    format!("{dataset_id}#{doc_id}")
}

fn list_sep(lang: Language) -> &'static str {
    match lang {
        Language::En => ", ",
        Language::Zh => "，",
    }
}

fn language_name(lang: Language, written_in: Language) -> &'static str {
    match (lang, written_in) {
        (Language::En, Language::En) => "English",
        (Language::Zh, Language::En) => "Chinese",
        (Language::En, Language::Zh) => "英语",
        (Language::Zh, Language::Zh) => "中文",
    }
}

fn render_options(doc: &UnifiedDocument) -> String {
    doc.qa
        .as_ref()
        .and_then(|q| q.options.as_ref())
        .map(|opts| {
            opts.iter()
                .map(|o| format!("{}. {}", o.key, o.text))
                .collect::<Vec<_>>()
                .join("\n")
        })
        .unwrap_or_default()
}

/// Question-style tasks: the original question is the instruction and the
/// answer is the output.
fn render_direct(doc: &UnifiedDocument, desc: &DatasetDescriptor) -> Result<(String, String)> {
    let mismatch = || Error::PayloadMismatch {
        doc: doc.doc_id.clone(),
        task: desc.task,
    };
    match desc.task {
        TaskType::QaMc | TaskType::QaSqa | TaskType::QaCqa => {
            let qa = doc.qa.as_ref().ok_or_else(mismatch)?;
            let instruction = if desc.task == TaskType::QaMc {
                format!("{}\n{}", qa.question, render_options(doc))
            } else {
                qa.question.clone()
            };
            Ok((instruction, qa.context.clone().unwrap_or_default()))
        }
        TaskType::Mrd => {
            let turns = doc.dialogue.as_ref().ok_or_else(mismatch)?;
            let last_answer = turns
                .iter()
                .rposition(|t| t.speaker == Speaker::Assistant)
                .ok_or_else(mismatch)?;
            let question_at = turns[..last_answer]
                .iter()
                .rposition(|t| t.speaker == Speaker::User)
                .ok_or_else(mismatch)?;
            let history = turns[..question_at]
                .iter()
                .map(|t| {
                    let who = match t.speaker {
                        Speaker::User => "user",
                        Speaker::Assistant => "assistant",
                    };
                    format!("{who}: {}", t.text)
                })
                .collect::<Vec<_>>()
                .join("\n");
            Ok((turns[question_at].text.clone(), history))
        }
        _ => unreachable!("render_direct called for a templated task"),
    }
}

fn slot_values(doc: &UnifiedDocument, desc: &DatasetDescriptor, lang: Language) -> BTreeMap<&'static str, String> {
    let mut v = BTreeMap::new();
    let text = match (&doc.pair, &doc.translation) {
        (Some(p), _) if matches!(desc.task, TaskType::TpSs | TaskType::TpTe) => format!("{}\n{}", p.text_a, p.text_b),
        (Some(p), _) => p.text_a.clone(),
        (_, Some(t)) => t.text_a.clone(),
        _ => doc.text.clone(),
    };
    v.insert("text", text);
    if !desc.label_vocab.is_empty() {
        let joined = desc.label_vocab.join(list_sep(lang));
        v.insert("entity_types", joined.clone());
        v.insert("labels", joined);
    }
    if let Some(t) = &doc.translation {
        v.insert("source_lang", language_name(t.source_lang, lang).to_string());
        v.insert("target_lang", language_name(t.target_lang, lang).to_string());
    }
    if let Some(qa) = &doc.qa {
        v.insert("question", qa.question.clone());
        v.insert("options", render_options(doc));
        if let Some(c) = &qa.context {
            v.insert("context", c.clone());
        }
    }
    v
}

/// Renders one document with one template.
pub fn render_instance(
    doc: &UnifiedDocument,
    template: &InstructionTemplate,
    desc: &DatasetDescriptor,
) -> Result<InstructionInstance> {
    if template.task != desc.task || template.language != desc.language {
        return Err(Error::InvalidTemplate {
            template: template.template_id.clone(),
            reason: format!(
                "template is for ({}, {}), dataset is ({}, {})",
                template.task, template.language, desc.task, desc.language
            ),
        });
    }
    let output = serialize_gold_with(doc, desc.task, desc.language, desc.relation_mode())?;
    let (instruction, input) = if desc.task.is_qa() || desc.task == TaskType::Mrd {
        render_direct(doc, desc)?
    } else {
        let values = slot_values(doc, desc, template.language);
        let instruction = template.fill(&values)?;
        let input = if template.slots().contains(&"text") {
            String::new()
        } else {
            values["text"].clone()
        };
        (instruction, input)
    };
    Ok(InstructionInstance {
        instance_id: instance_id(&desc.id, &doc.doc_id),
        dataset_id: desc.id.clone(),
        task: desc.task,
        language: desc.language,
        template_id: template.template_id.clone(),
        instruction,
        input,
        output,
        source_doc_id: doc.doc_id.clone(),
    })
}

/// `desc` with an empty label vocabulary filled from the labels `docs`
/// actually use (entity types, relation types, event types or classes), in
/// first-occurrence order.
pub fn with_observed_labels(desc: &DatasetDescriptor, docs: &[UnifiedDocument]) -> DatasetDescriptor {
    let mut out = desc.clone();
    if !out.label_vocab.is_empty() {
        return out;
    }
    let mut push = |l: &str| {
        if !out.label_vocab.iter().any(|v| v == l) {
            out.label_vocab.push(l.to_string());
        }
    };
    for d in docs {
        d.entities
            .iter()
            .filter(|_| desc.task == TaskType::Ner)
            .for_each(|e| push(&e.etype));
        d.relations.iter().for_each(|r| push(&r.rtype));
        d.events.iter().for_each(|e| push(&e.event_type));
        d.labels.iter().for_each(|l| push(l));
        if let Some(l) = d.pair.as_ref().and_then(|p| p.label.as_deref()) {
            push(l);
        }
    }
    out
}

/// Index of the template for `(seed, dataset_id, doc_id)` among `n`. The
/// draw depends only on these three values, so adding other datasets never
/// changes existing assignments.
pub fn template_index(seed: u64, dataset_id: &str, doc_id: &str, n: usize) -> usize {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(dataset_id.as_bytes());
    h.update([0u8]);
    h.update(doc_id.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key).random_range(0..n)
}

/// One instance per document, in corpus order then document order.
pub fn build_corpus(corpora: &[Corpus], bank: &TemplateBank, seed: u64) -> Result<Vec<InstructionInstance>> {
    let mut out = Vec::new();
    for corpus in corpora {
        let desc = &corpus.descriptor;
        let group = bank.matching(desc.task, desc.language);
        if group.is_empty() {
            return Err(Error::NoTemplate(desc.task, desc.language));
        }
        let rendered: Vec<Result<InstructionInstance>> = corpus
            .docs
            .par_iter()
            .map(|doc| {
                let t = group[template_index(seed, &desc.id, &doc.doc_id, group.len())];
                render_instance(doc, t, desc)
            })
            .collect();
        for r in rendered {
            out.push(r?);
        }
    }
    let mut ids = HashSet::with_capacity(out.len());
    for inst in &out {
        if !ids.insert(inst.instance_id.as_str()) {
            return Err(Error::DuplicateInstance(inst.instance_id.clone()));
        }
    }
    Ok(out)
}
