//! Quality pipeline: exact dedup, train/test overlap removal, subtask
//! decomposition and corpus statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{self, Write as _};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::jsonl::Registry;
use crate::schema::{Corpus, DatasetDescriptor, Language, TaskType, UnifiedDocument};
use crate::stage::{assign_stage, StageType};

/// NFKC, ASCII letters lowercased, whitespace runs collapsed, ends trimmed.
pub fn normalize_for_hash(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.nfkc() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c.to_ascii_lowercase());
    }
    out
}

/// The text a document is compared by. Plain documents use `text`; payload
/// documents (QA, dialogue, pairs, translations) append their payload text so
/// that records with an empty `text` field are not all considered equal.
pub fn content_text(doc: &UnifiedDocument) -> String {
    let mut parts: Vec<&str> = vec![&doc.text];
    if let Some(qa) = &doc.qa {
        parts.push(&qa.question);
        if let Some(opts) = &qa.options {
            parts.extend(opts.iter().map(|o| o.text.as_str()));
        }
        if let Some(c) = &qa.context {
            parts.push(c);
        }
    }
    if let Some(turns) = &doc.dialogue {
        parts.extend(turns.iter().map(|t| t.text.as_str()));
    }
    if let Some(p) = &doc.pair {
        parts.push(&p.text_a);
        parts.push(&p.text_b);
    }
    if let Some(t) = &doc.translation {
        parts.push(&t.text_a);
        parts.push(&t.text_b);
    }
    parts.retain(|p| !p.is_empty());
    parts.join("\n")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationCounts {
    pub input_count: usize,
    pub duplicates_removed: usize,
    pub overlap_removed: usize,
    pub output_count: usize,
}

impl CurationCounts {
    pub fn balanced(&self) -> bool {
        self.input_count == self.output_count + self.duplicates_removed + self.overlap_removed
    }

    fn absorb(&mut self, other: &CurationCounts) {
        self.input_count += other.input_count;
        self.duplicates_removed += other.duplicates_removed;
        self.overlap_removed += other.overlap_removed;
        self.output_count += other.output_count;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationReport {
    pub input_count: usize,
    pub duplicates_removed: usize,
    pub overlap_removed: usize,
    pub output_count: usize,
    pub per_dataset: BTreeMap<String, CurationCounts>,
}

impl CurationReport {
    pub fn totals(&self) -> CurationCounts {
        CurationCounts {
            input_count: self.input_count,
            duplicates_removed: self.duplicates_removed,
            overlap_removed: self.overlap_removed,
            output_count: self.output_count,
        }
    }

    /// The arithmetic invariant, checked for the totals and every dataset.
    pub fn is_consistent(&self) -> bool {
        let mut sum = CurationCounts::default();
        for c in self.per_dataset.values() {
            if !c.balanced() {
                return false;
            }
            sum.absorb(c);
        }
        self.totals().balanced() && sum == self.totals()
    }

    pub fn merge(&mut self, other: &CurationReport) {
        self.input_count += other.input_count;
        self.duplicates_removed += other.duplicates_removed;
        self.overlap_removed += other.overlap_removed;
        self.output_count += other.output_count;
        for (k, v) in &other.per_dataset {
            self.per_dataset.entry(k.clone()).or_default().absorb(v);
        }
    }

    pub fn to_text(&self) -> String {
        let mut rows = vec![[
            "dataset".to_string(),
            "input".into(),
            "duplicates".into(),
            "overlap".into(),
            "output".into(),
        ]];
        for (id, c) in &self.per_dataset {
            rows.push(counts_row(id, c));
        }
        rows.push(counts_row("TOTAL", &self.totals()));
        align(&rows)
    }
}

fn counts_row(id: &str, c: &CurationCounts) -> [String; 5] {
    [
        id.to_string(),
        c.input_count.to_string(),
        c.duplicates_removed.to_string(),
        c.overlap_removed.to_string(),
        c.output_count.to_string(),
    ]
}

/// Left-aligned first column, right-aligned numbers.
fn align<const N: usize>(rows: &[[String; N]]) -> String {
    let mut widths = [0usize; N];
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (i, cell) in r.iter().enumerate() {
            let pad = widths[i] - cell.chars().count();
            if i == 0 {
                line.push_str(cell);
                line.extend(std::iter::repeat_n(' ', pad));
            } else {
                line.push_str("  ");
                line.extend(std::iter::repeat_n(' ', pad));
                line.push_str(cell);
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }
    out
}

/// Drops train documents whose normalized content matches any test document,
/// then keeps only the first train document per normalized content.
pub fn dedup_and_filter_overlap(
    train: &[UnifiedDocument],
    test: &[UnifiedDocument],
) -> (Vec<UnifiedDocument>, CurationReport) {
    let test_keys: HashSet<String> = test.par_iter().map(|d| normalize_for_hash(&content_text(d))).collect();
    let train_keys: Vec<String> = train.par_iter().map(|d| normalize_for_hash(&content_text(d))).collect();

    let mut report = CurationReport::default();
    let mut seen: HashSet<&str> = HashSet::with_capacity(train.len());
    let mut kept = Vec::with_capacity(train.len());
    for (doc, key) in train.iter().zip(&train_keys) {
        let per = report.per_dataset.entry(doc.dataset_id.clone()).or_default();
        per.input_count += 1;
        report.input_count += 1;
        if test_keys.contains(key) {
            per.overlap_removed += 1;
            report.overlap_removed += 1;
        } else if !seen.insert(key) {
            per.duplicates_removed += 1;
            report.duplicates_removed += 1;
        } else {
            per.output_count += 1;
            report.output_count += 1;
            kept.push(doc.clone());
        }
    }
    (kept, report)
}

/// Label subsets to split a dataset into.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtaskPlan {
    pub subsets: Vec<Vec<String>>,
}

impl SubtaskPlan {
    /// One single-label subset per vocabulary label.
    pub fn per_label(desc: &DatasetDescriptor) -> Self {
        SubtaskPlan {
            subsets: desc.label_vocab.iter().map(|l| vec![l.clone()]).collect(),
        }
    }
}

pub fn virtual_dataset_id(id: &str, subset: &[String]) -> String {
    format!("{id}/{}", subset.join("+"))
}

/// Emits the original corpus followed by one virtual corpus per label subset.
/// Every document appears in every virtual corpus; annotations outside the
/// subset are dropped, and documents left with none are kept as negatives.
pub fn decompose_subtasks(
    docs: &[UnifiedDocument],
    desc: &DatasetDescriptor,
    plan: &SubtaskPlan,
) -> Result<Vec<Corpus>> {
    let mut out = vec![Corpus::new(desc.clone(), docs.to_vec())];
    if plan.subsets.is_empty() {
        return Ok(out);
    }
    if !matches!(desc.task, TaskType::Ner | TaskType::Re) {
        return Err(Error::NotDecomposable(desc.task));
    }
    for subset in &plan.subsets {
        if let Some(missing) = subset.iter().find(|l| !desc.label_vocab.contains(l)) {
            return Err(Error::UnknownLabel(missing.clone()));
        }
    }
    for subset in &plan.subsets {
        let keep: BTreeSet<&str> = subset.iter().map(String::as_str).collect();
        let vid = virtual_dataset_id(&desc.id, subset);
        let mut vdesc = desc.clone();
        vdesc.id = vid.clone();
        vdesc.name = format!("{} ({})", desc.name, subset.join(", "));
        vdesc.label_vocab = desc
            .label_vocab
            .iter()
            .filter(|l| keep.contains(l.as_str()))
            .cloned()
            .collect();
        let vdocs = docs
            .iter()
            .map(|d| {
                let mut v = d.clone();
                v.dataset_id = vid.clone();
                match desc.task {
                    TaskType::Ner => v.entities.retain(|e| keep.contains(e.etype.as_str())),
                    _ => v.relations.retain(|r| keep.contains(r.rtype.as_str())),
                }
                v
            })
            .collect();
        out.push(Corpus::new(vdesc, vdocs));
    }
    Ok(out)
}

/// Task groups used for the statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskGroup {
    NamedEntityRecognition,
    RelationExtraction,
    EventExtraction,
    TextClassification,
    TextPair,
    MachineTranslation,
    QuestionAnswering,
    MultiRoundDialogue,
    GeneralDialogue,
    Other,
}

impl TaskGroup {
    pub fn of(desc: &DatasetDescriptor) -> Self {
        if desc.general_dialogue {
            return TaskGroup::GeneralDialogue;
        }
        match desc.task {
            TaskType::Ner => TaskGroup::NamedEntityRecognition,
            TaskType::Re | TaskType::Cre | TaskType::Coref => TaskGroup::RelationExtraction,
            TaskType::Ee => TaskGroup::EventExtraction,
            TaskType::Tc => TaskGroup::TextClassification,
            TaskType::TpSs | TaskType::TpTe => TaskGroup::TextPair,
            TaskType::Mt => TaskGroup::MachineTranslation,
            TaskType::QaMc | TaskType::QaSqa | TaskType::QaCqa => TaskGroup::QuestionAnswering,
            TaskType::Mrd => TaskGroup::MultiRoundDialogue,
            TaskType::TtDs | TaskType::TtTs => TaskGroup::Other,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            TaskGroup::NamedEntityRecognition => "Named Entity Recognition",
            TaskGroup::RelationExtraction => "Relation Extraction",
            TaskGroup::EventExtraction => "Event Extraction",
            TaskGroup::TextClassification => "Text Classification",
            TaskGroup::TextPair => "Text Pair Task",
            TaskGroup::MachineTranslation => "Machine Translation",
            TaskGroup::QuestionAnswering => "Biomedical Question Answering",
            TaskGroup::MultiRoundDialogue => "Biomedical Multi-Round Dialogue",
            TaskGroup::GeneralDialogue => "General Dialogue Data",
            TaskGroup::Other => "Other Additional Tasks",
        }
    }
}

impl fmt::Display for TaskGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub group: TaskGroup,
    pub en: u64,
    pub zh: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsTable {
    pub rows: Vec<StatsRow>,
    pub total: u64,
    pub stage1_total: u64,
    pub stage2_total: u64,
}

impl StatsTable {
    pub fn cell(&self, group: TaskGroup, lang: Language) -> u64 {
        self.rows
            .iter()
            .find(|r| r.group == group)
            .map(|r| match lang {
                Language::En => r.en,
                Language::Zh => r.zh,
            })
            .unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        let blank_zero = |n: u64| if n == 0 { String::new() } else { thousands(n) };
        let mut rows = vec![["Task Type".to_string(), "English".into(), "Chinese".into()]];
        for r in &self.rows {
            rows.push([r.group.title().to_string(), blank_zero(r.en), blank_zero(r.zh)]);
        }
        rows.push(["Total".into(), String::new(), thousands(self.total)]);
        rows.push(["Stage 1 (Type1)".into(), String::new(), thousands(self.stage1_total)]);
        rows.push(["Stage 2 (all)".into(), String::new(), thousands(self.stage2_total)]);
        align(&rows)
    }
}

/// `1114315` as `1,114,315`.
pub fn thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

/// Counts per task group and language. A dataset's count is its curated
/// document count when present, otherwise its registered `train` split size.
pub fn corpus_stats(registry: &Registry, curated: &BTreeMap<String, usize>) -> StatsTable {
    let mut cells: BTreeMap<TaskGroup, (u64, u64)> = BTreeMap::new();
    let mut table = StatsTable::default();
    for d in registry.iter() {
        let n = match curated.get(&d.id) {
            Some(&c) => c as u64,
            None => d.split_counts.get("train").copied().unwrap_or(0),
        };
        let cell = cells.entry(TaskGroup::of(d)).or_default();
        match d.language {
            Language::En => cell.0 += n,
            Language::Zh => cell.1 += n,
        }
        table.total += n;
        if assign_stage(d) == StageType::Type1 {
            table.stage1_total += n;
        }
    }
    table.stage2_total = table.total;
    table.rows = cells
        .into_iter()
        .map(|(group, (en, zh))| StatsRow { group, en, zh })
        .collect();
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::EntityMention;

    fn doc(id: &str, text: &str) -> UnifiedDocument {
        UnifiedDocument::new(id, "ds", Language::En, text)
    }

    #[test]
    fn normalization_examples() {
        assert_eq!(normalize_for_hash("  Aspirin\tworks "), "aspirin works");
        assert_eq!(normalize_for_hash(""), "");
        assert_eq!(normalize_for_hash("\u{FF21}\u{FF22}\u{FF23}"), "abc");
        assert_eq!(normalize_for_hash("a \n\n b"), "a b");
    }

    #[test]
    fn duplicates_and_overlap() {
        let train = vec![
            doc("1", "A"),
            doc("2", "B"),
            doc("3", "A"),
            doc("4", "C"),
            doc("5", "a "),
        ];
        let (kept, rep) = dedup_and_filter_overlap(&train, &[]);
        assert_eq!(
            kept.iter().map(|d| d.doc_id.as_str()).collect::<Vec<_>>(),
            ["1", "2", "4"]
        );
        assert_eq!(rep.duplicates_removed, 2);
        assert!(rep.is_consistent());

        let (kept, rep) = dedup_and_filter_overlap(&[doc("1", "x  y"), doc("2", "z")], &[doc("t", "x y")]);
        assert_eq!(kept.len(), 1);
        assert_eq!(rep.overlap_removed, 1);

        let (kept, rep) = dedup_and_filter_overlap(&[doc("1", "p"), doc("2", "q")], &[doc("t", "r")]);
        assert_eq!(kept.len(), 2);
        assert_eq!((rep.duplicates_removed, rep.overlap_removed), (0, 0));
    }

    #[test]
    fn decomposition() {
        let desc = DatasetDescriptor::new("bc5cdr", TaskType::Ner, Language::En).with_labels(["Chemical", "Disease"]);
        let mut d = doc("1", "flu");
        d.dataset_id = "bc5cdr".into();
        d.entities.push(EntityMention::new("flu", "Disease", 0, 3));
        let out = decompose_subtasks(std::slice::from_ref(&d), &desc, &SubtaskPlan::per_label(&desc)).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].docs[0], d);
        assert_eq!(out[1].descriptor.id, "bc5cdr/Chemical");
        assert!(out[1].docs[0].entities.is_empty());
        assert_eq!(out[2].docs[0].entities.len(), 1);

        let only = decompose_subtasks(&[d.clone()], &desc, &SubtaskPlan::default()).unwrap();
        assert_eq!(only.len(), 1);

        let bad = SubtaskPlan {
            subsets: vec![vec!["Gene".into()]],
        };
        assert!(matches!(decompose_subtasks(&[d], &desc, &bad), Err(Error::UnknownLabel(l)) if l == "Gene"));
    }

    #[test]
    fn empty_registry_stats() {
        let t = corpus_stats(&Registry::new(), &BTreeMap::new());
        assert!(t.rows.is_empty());
        assert_eq!(t.total, 0);
        assert_eq!(thousands(1_114_315), "1,114,315");
        assert_eq!(thousands(0), "0");
    }
}
