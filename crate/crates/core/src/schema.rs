//! Harmonized task schema shared by every stage of the pipeline.
//!
//! A [`UnifiedDocument`] is one annotated text unit; which payload fields it
//! carries is decided by the [`TaskType`] of the dataset it belongs to. Entity
//! offsets count Unicode scalar values, never bytes, so Chinese and English
//! corpora share the same span arithmetic.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::stage::StageType;

/// The closed set of 15 task types a dataset can be filed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskType {
    #[serde(rename = "NER/NEN")]
    Ner,
    #[serde(rename = "RE")]
    Re,
    #[serde(rename = "CRE")]
    Cre,
    #[serde(rename = "EE")]
    Ee,
    #[serde(rename = "COREF")]
    Coref,
    #[serde(rename = "TC")]
    Tc,
    #[serde(rename = "QA-mc")]
    QaMc,
    #[serde(rename = "QA-sqa")]
    QaSqa,
    #[serde(rename = "QA-cqa")]
    QaCqa,
    #[serde(rename = "MRD")]
    Mrd,
    #[serde(rename = "MT")]
    Mt,
    #[serde(rename = "TP-ss")]
    TpSs,
    #[serde(rename = "TP-te")]
    TpTe,
    #[serde(rename = "TT-ds")]
    TtDs,
    #[serde(rename = "TT-ts")]
    TtTs,
}

impl TaskType {
    pub const ALL: [TaskType; 15] = [
        TaskType::Ner,
        TaskType::Re,
        TaskType::Cre,
        TaskType::Ee,
        TaskType::Coref,
        TaskType::Tc,
        TaskType::QaMc,
        TaskType::QaSqa,
        TaskType::QaCqa,
        TaskType::Mrd,
        TaskType::Mt,
        TaskType::TpSs,
        TaskType::TpTe,
        TaskType::TtDs,
        TaskType::TtTs,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            TaskType::Ner => "NER/NEN",
            TaskType::Re => "RE",
            TaskType::Cre => "CRE",
            TaskType::Ee => "EE",
            TaskType::Coref => "COREF",
            TaskType::Tc => "TC",
            TaskType::QaMc => "QA-mc",
            TaskType::QaSqa => "QA-sqa",
            TaskType::QaCqa => "QA-cqa",
            TaskType::Mrd => "MRD",
            TaskType::Mt => "MT",
            TaskType::TpSs => "TP-ss",
            TaskType::TpTe => "TP-te",
            TaskType::TtDs => "TT-ds",
            TaskType::TtTs => "TT-ts",
        }
    }

    pub fn is_qa(self) -> bool {
        matches!(self, TaskType::QaMc | TaskType::QaSqa | TaskType::QaCqa)
    }

    /// Tasks whose gold output is a set of relation triples.
    pub fn is_relational(self) -> bool {
        matches!(self, TaskType::Re | TaskType::Cre | TaskType::Coref)
    }

    /// Which payload a document of this task must (or may) carry.
    pub fn payload(self) -> PayloadKind {
        match self {
            TaskType::Ner => PayloadKind::Entities,
            TaskType::Re | TaskType::Cre | TaskType::Coref => PayloadKind::Relations,
            TaskType::Ee => PayloadKind::Events,
            TaskType::Tc => PayloadKind::Labels,
            TaskType::QaMc | TaskType::QaSqa | TaskType::QaCqa => PayloadKind::Qa,
            TaskType::Mrd => PayloadKind::Dialogue,
            TaskType::Mt => PayloadKind::Translation,
            TaskType::TpSs | TaskType::TpTe | TaskType::TtDs | TaskType::TtTs => PayloadKind::Pair,
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for TaskType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskType::ALL
            .into_iter()
            .find(|t| t.tag() == s)
            .ok_or_else(|| Error::UnknownTaskType(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Entities,
    Relations,
    Events,
    Labels,
    Qa,
    Dialogue,
    Translation,
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
}

impl Language {
    pub const ALL: [Language; 2] = [Language::En, Language::Zh];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "en" => Ok(Language::En),
            "zh" => Ok(Language::Zh),
            other => Err(Error::UnknownLanguage(other.to_string())),
        }
    }
}

/// How relation triples are rendered for a relational dataset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationMode {
    /// `(head, tail, type)` items.
    #[default]
    Typed,
    /// `[head, tail]` items; the single relation type is implied by the prompt.
    Pair,
}

/// One registry row.
///
/// The trailing optional fields are registry flags the pipeline needs: the
/// declared label vocabulary (entity, relation, event or class labels, in
/// prompt order), the event role vocabulary, the relation output mode, a
/// manual stage assignment and the general-dialogue marker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub id: String,
    pub name: String,
    pub task: TaskType,
    pub language: Language,
    pub split_counts: BTreeMap<String, u64>,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub label_vocab: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub role_vocab: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation_mode: Option<RelationMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_override: Option<StageType>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub general_dialogue: bool,
}

impl DatasetDescriptor {
    pub fn new(id: impl Into<String>, task: TaskType, language: Language) -> Self {
        let id = id.into();
        DatasetDescriptor {
            name: id.clone(),
            id,
            task,
            language,
            split_counts: BTreeMap::new(),
            description: String::new(),
            source_url: None,
            label_vocab: Vec::new(),
            role_vocab: Vec::new(),
            relation_mode: None,
            stage_override: None,
            general_dialogue: false,
        }
    }

    pub fn with_labels<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.label_vocab = labels.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_split(mut self, split: impl Into<String>, count: u64) -> Self {
        self.split_counts.insert(split.into(), count);
        self
    }

    pub fn relation_mode(&self) -> RelationMode {
        self.relation_mode.unwrap_or_default()
    }

    /// The relation implied by the prompt in pair mode.
    pub fn prompted_relation(&self) -> Option<&str> {
        match (self.relation_mode(), self.label_vocab.as_slice()) {
            (RelationMode::Pair, [only]) => Some(only.as_str()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub etype: String,
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub norm_id: Option<String>,
}

impl EntityMention {
    pub fn new(surface: impl Into<String>, etype: impl Into<String>, start: usize, end: usize) -> Self {
        EntityMention {
            surface: surface.into(),
            etype: etype.into(),
            start,
            end,
            norm_id: None,
        }
    }
}

/// Also used for coreference links, with `rtype == "coref"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationTriple {
    pub head: String,
    pub tail: String,
    pub rtype: String,
}

impl RelationTriple {
    pub fn new(head: impl Into<String>, tail: impl Into<String>, rtype: impl Into<String>) -> Self {
        RelationTriple {
            head: head.into(),
            tail: tail.into(),
            rtype: rtype.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventArgument {
    pub role: String,
    pub filler: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFrame {
    pub event_type: String,
    pub trigger: String,
    #[serde(default)]
    pub arguments: Vec<EventArgument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaOption {
    pub key: String,
    pub text: String,
}

/// For QA-mc, `answer_keys` holds option keys. For the free-text QA tasks it
/// holds the reference answers themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAInstance {
    pub question: String,
    #[serde(default)]
    pub options: Option<Vec<QaOption>>,
    #[serde(default)]
    pub answer_keys: Vec<String>,
    #[serde(default)]
    pub context: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueTurn {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextPairInstance {
    pub text_a: String,
    pub text_b: String,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationPair {
    pub text_a: String,
    pub text_b: String,
    pub source_lang: Language,
    pub target_lang: Language,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnifiedDocument {
    pub doc_id: String,
    pub dataset_id: String,
    pub language: Language,
    pub text: String,
    #[serde(default)]
    pub entities: Vec<EntityMention>,
    #[serde(default)]
    pub relations: Vec<RelationTriple>,
    #[serde(default)]
    pub events: Vec<EventFrame>,
    #[serde(default)]
    pub labels: Vec<String>,
    #[serde(default)]
    pub qa: Option<QAInstance>,
    #[serde(default)]
    pub dialogue: Option<Vec<DialogueTurn>>,
    #[serde(default)]
    pub pair: Option<TextPairInstance>,
    #[serde(default)]
    pub translation: Option<TranslationPair>,
}

impl UnifiedDocument {
    pub fn new(
        doc_id: impl Into<String>,
        dataset_id: impl Into<String>,
        language: Language,
        text: impl Into<String>,
    ) -> Self {
        UnifiedDocument {
            doc_id: doc_id.into(),
            dataset_id: dataset_id.into(),
            language,
            text: text.into(),
            entities: Vec::new(),
            relations: Vec::new(),
            events: Vec::new(),
            labels: Vec::new(),
            qa: None,
            dialogue: None,
            pair: None,
            translation: None,
        }
    }

    /// Length of `text` in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// A dataset's descriptor together with its documents.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub descriptor: DatasetDescriptor,
    pub docs: Vec<UnifiedDocument>,
}

impl Corpus {
    pub fn new(descriptor: DatasetDescriptor, docs: Vec<UnifiedDocument>) -> Self {
        Corpus { descriptor, docs }
    }
}

/// `text[start..end]` in Unicode scalar values, if the range is in bounds.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
    let from = indices.nth(start)?;
    let to = if end == start {
        from
    } else {
        indices.nth(end - start - 1)?
    };
    Some(&text[from..to])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationResult {
    Ok,
    Violations(Vec<Violation>),
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        matches!(self, ValidationResult::Ok)
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            ValidationResult::Ok => &[],
            ValidationResult::Violations(v) => v,
        }
    }
}

pub const SPAN_OUT_OF_BOUNDS: &str = "span out of bounds";
pub const PAYLOAD_TASK_MISMATCH: &str = "payload/task mismatch";

/// Checks every schema invariant of `doc` against the dataset it claims to
/// belong to. Pure; violations come back as data.
pub fn validate_document(doc: &UnifiedDocument, desc: &DatasetDescriptor) -> ValidationResult {
    let mut out = Vec::new();

    if doc.doc_id.is_empty() {
        out.push(Violation::new("doc_id", "must be non-empty"));
    }
    if doc.dataset_id != desc.id {
        out.push(Violation::new("dataset_id", format!("expected {}", desc.id)));
    }
    if doc.language != desc.language {
        out.push(Violation::new("language", format!("expected {}", desc.language)));
    }

    let len = doc.char_len();
    for (i, e) in doc.entities.iter().enumerate() {
        let field = format!("entities[{i}]");
        if e.start >= e.end {
            out.push(Violation::new(&field, "start must be < end"));
        } else if e.end > len {
            out.push(Violation::new(&field, SPAN_OUT_OF_BOUNDS));
        } else if char_slice(&doc.text, e.start, e.end) != Some(e.surface.as_str()) {
            out.push(Violation::new(&field, "text[start:end] != surface"));
        }
        if e.etype.is_empty() {
            out.push(Violation::new(&field, "etype must be non-empty"));
        }
    }

    let surfaces: HashSet<&str> = doc.entities.iter().map(|e| e.surface.as_str()).collect();
    let grounded = |s: &str| surfaces.contains(s) || doc.text.contains(s);

    for (i, r) in doc.relations.iter().enumerate() {
        let field = format!("relations[{i}]");
        if r.head.is_empty() || r.tail.is_empty() {
            out.push(Violation::new(&field, "head and tail must be non-empty"));
            continue;
        }
        if !grounded(&r.head) || !grounded(&r.tail) {
            out.push(Violation::new(&field, "argument not found in entities or text"));
        }
        if let Some(prompted) = desc.prompted_relation() {
            if r.rtype != prompted {
                out.push(Violation::new(&field, format!("pair mode implies relation {prompted}")));
            }
        }
    }

    for (i, ev) in doc.events.iter().enumerate() {
        let field = format!("events[{i}]");
        if ev.event_type.is_empty() {
            out.push(Violation::new(&field, "event_type must be non-empty"));
        }
        if !ev.trigger.is_empty() && !grounded(&ev.trigger) {
            out.push(Violation::new(&field, "trigger not found in entities or text"));
        }
        for arg in &ev.arguments {
            if !desc.role_vocab.is_empty() && !desc.role_vocab.contains(&arg.role) {
                out.push(Violation::new(
                    &field,
                    format!("role {} not in role vocabulary", arg.role),
                ));
            }
            if !grounded(&arg.filler) {
                out.push(Violation::new(
                    &field,
                    format!("filler {} not found in entities or text", arg.filler),
                ));
            }
        }
    }

    check_payload(doc, desc.task, &mut out);

    if let Some(qa) = &doc.qa {
        if qa.question.is_empty() {
            out.push(Violation::new("qa.question", "must be non-empty"));
        }
        if desc.task == TaskType::QaMc {
            match &qa.options {
                Some(opts) if !opts.is_empty() => {
                    let mut seen = HashSet::new();
                    for o in opts {
                        if !seen.insert(o.key.as_str()) {
                            out.push(Violation::new("qa.options", format!("duplicate key {}", o.key)));
                        }
                    }
                    if qa.answer_keys.is_empty() {
                        out.push(Violation::new("qa.answer_keys", "must be non-empty"));
                    }
                    for k in &qa.answer_keys {
                        if !seen.contains(k.as_str()) {
                            out.push(Violation::new("qa.answer_keys", format!("{k} is not an option key")));
                        }
                    }
                }
                _ => out.push(Violation::new("qa.options", "QA-mc requires options")),
            }
        }
    }
    if let Some(turns) = &doc.dialogue {
        for (i, t) in turns.iter().enumerate() {
            if t.text.is_empty() {
                out.push(Violation::new(format!("dialogue[{i}]"), "text must be non-empty"));
            }
        }
    }
    if let Some(p) = &doc.pair {
        if p.text_a.is_empty() || p.text_b.is_empty() {
            out.push(Violation::new("pair", "both texts must be non-empty"));
        }
    }
    if let Some(t) = &doc.translation {
        if t.text_a.is_empty() || t.text_b.is_empty() {
            out.push(Violation::new("translation", "both texts must be non-empty"));
        }
    }

    if out.is_empty() {
        ValidationResult::Ok
    } else {
        ValidationResult::Violations(out)
    }
}

fn check_payload(doc: &UnifiedDocument, task: TaskType, out: &mut Vec<Violation>) {
    let kind = task.payload();
    let entities_allowed = matches!(
        kind,
        PayloadKind::Entities | PayloadKind::Relations | PayloadKind::Events
    );
    let populated = [
        ("entities", !doc.entities.is_empty(), entities_allowed),
        ("relations", !doc.relations.is_empty(), kind == PayloadKind::Relations),
        ("events", !doc.events.is_empty(), kind == PayloadKind::Events),
        ("labels", !doc.labels.is_empty(), kind == PayloadKind::Labels),
        ("qa", doc.qa.is_some(), kind == PayloadKind::Qa),
        ("dialogue", doc.dialogue.is_some(), kind == PayloadKind::Dialogue),
        ("pair", doc.pair.is_some(), kind == PayloadKind::Pair),
        (
            "translation",
            doc.translation.is_some(),
            kind == PayloadKind::Translation,
        ),
    ];
    for (field, present, allowed) in populated {
        if present && !allowed {
            out.push(Violation::new(field, PAYLOAD_TASK_MISMATCH));
        }
    }
    let missing = match kind {
        PayloadKind::Qa => doc.qa.is_none().then_some("qa"),
        PayloadKind::Dialogue => match &doc.dialogue {
            Some(turns) if !turns.is_empty() => None,
            _ => Some("dialogue"),
        },
        PayloadKind::Pair => doc.pair.is_none().then_some("pair"),
        PayloadKind::Translation => doc.translation.is_none().then_some("translation"),
        _ => None,
    };
    if let Some(field) = missing {
        out.push(Violation::new(field, format!("required by {task}")));
    }
}
