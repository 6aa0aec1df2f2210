//! Source-format readers that turn annotated corpora into [`UnifiedDocument`]s.
//!
//! Every reader works in two layers. The lenient layer (`read_*`) yields one
//! `Result` per source document so a single bad record does not sink a whole
//! file; the strict layer (`parse_*`) stops at the first broken document.

mod bioc;
mod conll;
mod pubtator;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl::Registry;
use crate::schema::{validate_document, Language, UnifiedDocument};

pub use bioc::{parse_bioc_xml, read_bioc_xml, write_bioc_xml};
pub use conll::{parse_conll, read_conll, write_conll};
pub use pubtator::{parse_pubtator, read_pubtator, write_pubtator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceFormat {
    Pubtator,
    BiocXml,
    Conll,
    GenericJsonl,
}

impl SourceFormat {
    /// Guesses the format from a file name.
    pub fn from_path(path: &Path) -> Option<Self> {
        let name = path.file_name()?.to_str()?.to_ascii_lowercase();
        if name.ends_with(".pubtator") || name.ends_with(".pubtator.txt") {
            Some(SourceFormat::Pubtator)
        } else if name.ends_with(".xml") {
            Some(SourceFormat::BiocXml)
        } else if name.ends_with(".conll") || name.ends_with(".tsv") || name.ends_with(".bio") {
            Some(SourceFormat::Conll)
        } else if name.ends_with(".jsonl") {
            Some(SourceFormat::GenericJsonl)
        } else {
            None
        }
    }
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceFormat::Pubtator => "pubtator",
            SourceFormat::BiocXml => "bioc_xml",
            SourceFormat::Conll => "conll",
            SourceFormat::GenericJsonl => "generic_jsonl",
        })
    }
}

impl std::str::FromStr for SourceFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pubtator" => Ok(SourceFormat::Pubtator),
            "bioc_xml" | "bioc" => Ok(SourceFormat::BiocXml),
            "conll" => Ok(SourceFormat::Conll),
            "generic_jsonl" | "jsonl" => Ok(SourceFormat::GenericJsonl),
            other => Err(format!("unknown source format {other}")),
        }
    }
}

/// How a CoNLL stream marks document boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConllBoundary {
    /// Every blank line closes a document.
    BlankLine,
    /// `-DOCSTART-` lines open documents; blank lines separate sentences.
    DocStart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub dataset_id: String,
    pub format: SourceFormat,
    #[serde(default)]
    pub entity_type_map: Option<BTreeMap<String, String>>,
    pub split: String,
    /// Filled from the registry by [`ingest_dataset`].
    pub language: Language,
    /// `None` picks [`ConllBoundary::DocStart`] when the stream has any
    /// `-DOCSTART-` line.
    #[serde(default)]
    pub conll_boundary: Option<ConllBoundary>,
}

impl IngestConfig {
    pub fn new(dataset_id: impl Into<String>, format: SourceFormat, split: impl Into<String>) -> Self {
        IngestConfig {
            dataset_id: dataset_id.into(),
            format,
            entity_type_map: None,
            split: split.into(),
            language: Language::En,
            conll_boundary: None,
        }
    }

    pub fn with_language(mut self, language: Language) -> Self {
        self.language = language;
        self
    }

    pub(crate) fn map_type(&self, label: &str) -> String {
        self.entity_type_map
            .as_ref()
            .and_then(|m| m.get(label))
            .cloned()
            .unwrap_or_else(|| label.to_string())
    }
}

/// Output of a lenient reader: one entry per source document, in input order.
#[derive(Debug, Default)]
pub struct ParsedStream {
    pub docs: Vec<Result<UnifiedDocument>>,
    pub warnings: Vec<String>,
}

impl ParsedStream {
    fn into_strict(self) -> Result<Vec<UnifiedDocument>> {
        self.docs.into_iter().collect()
    }
}

pub fn read_generic_jsonl(stream: &str, cfg: &IngestConfig) -> ParsedStream {
    let mut out = ParsedStream::default();
    for (i, line) in stream.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str::<UnifiedDocument>(line)
            .map_err(|_| Error::MalformedLine(i + 1))
            .map(|mut d| {
                if d.dataset_id.is_empty() {
                    d.dataset_id = cfg.dataset_id.clone();
                }
                for e in &mut d.entities {
                    e.etype = cfg.map_type(&e.etype);
                }
                d
            });
        out.docs.push(doc);
    }
    out
}

pub fn parse_generic_jsonl(stream: &str, cfg: &IngestConfig) -> Result<Vec<UnifiedDocument>> {
    read_generic_jsonl(stream, cfg).into_strict()
}

pub fn read_stream(stream: &str, cfg: &IngestConfig) -> Result<ParsedStream> {
    Ok(match cfg.format {
        SourceFormat::Pubtator => read_pubtator(stream, cfg),
        SourceFormat::BiocXml => read_bioc_xml(stream, cfg)?,
        SourceFormat::Conll => read_conll(stream, cfg),
        SourceFormat::GenericJsonl => read_generic_jsonl(stream, cfg),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub doc_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub dataset_id: String,
    pub split: String,
    pub format: SourceFormat,
    pub loaded: usize,
    pub violations: usize,
    pub warnings: Vec<String>,
    pub rejected: Vec<Rejection>,
}

impl IngestReport {
    pub fn total(&self) -> usize {
        self.loaded + self.violations
    }
}

#[derive(Debug)]
pub struct Ingested {
    pub docs: Vec<UnifiedDocument>,
    pub report: IngestReport,
}

/// Reads, parses and validates one source file. Documents that fail parsing
/// or validation are dropped and counted; only structural failures (I/O,
/// broken XML, unknown dataset) are errors.
pub fn ingest_dataset(path: &Path, cfg: &IngestConfig, registry: &Registry) -> Result<Ingested> {
    let desc = registry.require(&cfg.dataset_id)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg = cfg.clone().with_language(desc.language);
    let parsed = read_stream(&text, &cfg)?;

    let mut report = IngestReport {
        dataset_id: cfg.dataset_id.clone(),
        split: cfg.split.clone(),
        format: cfg.format,
        loaded: 0,
        violations: 0,
        warnings: parsed.warnings,
        rejected: Vec::new(),
    };
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for item in parsed.docs {
        let doc = match item {
            Ok(doc) => doc,
            Err(e) => {
                report.violations += 1;
                report.rejected.push(Rejection {
                    doc_id: None,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let mut reasons: Vec<String> = validate_document(&doc, desc)
            .violations()
            .iter()
            .map(ToString::to_string)
            .collect();
        if !seen.insert(doc.doc_id.clone()) {
            reasons.push("doc_id: duplicate within dataset".to_string());
        }
        if reasons.is_empty() {
            report.loaded += 1;
            docs.push(doc);
        } else {
            report.violations += 1;
            report.rejected.push(Rejection {
                doc_id: Some(doc.doc_id.clone()),
                reason: reasons.join("; "),
            });
        }
    }
    Ok(Ingested { docs, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{DatasetDescriptor, TaskType};

    fn registry() -> Registry {
        Registry::from_descriptors([
            DatasetDescriptor::new("cdr", TaskType::Ner, Language::En).with_labels(["Chemical", "Disease"])
        ])
        .unwrap()
    }

    const THREE_DOCS: &str = "1|t|Aspirin helps\n1|a|pain relief\n1\t0\t7\tAspirin\tChemical\n\n\
2|t|Fever\n2|a|and cough\n2\t0\t5\tFever\tDisease\n\n\
3|t|Nothing here\n3|a|at all\n";

    #[test]
    fn ingests_clean_pubtator_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.pubtator");
        std::fs::write(&path, THREE_DOCS).unwrap();
        let cfg = IngestConfig::new("cdr", SourceFormat::Pubtator, "train");
        let out = ingest_dataset(&path, &cfg, &registry()).unwrap();
        assert_eq!(out.report.loaded, 3);
        assert_eq!(out.report.violations, 0);
        assert_eq!(out.docs.len(), 3);
    }

    #[test]
    fn bad_mention_drops_only_its_document() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.pubtator");
        let broken = THREE_DOCS.replace("2\t0\t5\tFever", "2\t0\t5\tFeverish");
        std::fs::write(&path, broken).unwrap();
        let cfg = IngestConfig::new("cdr", SourceFormat::Pubtator, "train");
        let out = ingest_dataset(&path, &cfg, &registry()).unwrap();
        assert_eq!(out.report.loaded, 2);
        assert_eq!(out.report.violations, 1);
        assert_eq!(out.report.total(), 3);
        let ids: Vec<_> = out.docs.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, ["1", "3"]);
    }

    #[test]
    fn unregistered_dataset_is_an_error() {
        let cfg = IngestConfig::new("nope", SourceFormat::Pubtator, "train");
        let err = ingest_dataset(Path::new("/does/not/matter"), &cfg, &registry()).unwrap_err();
        assert!(matches!(err, Error::UnknownDataset(id) if id == "nope"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let cfg = IngestConfig::new("cdr", SourceFormat::Pubtator, "train");
        let err = ingest_dataset(Path::new("/no/such/file.pubtator"), &cfg, &registry()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn generic_jsonl_fills_dataset_and_flags_bad_lines() {
        let cfg = IngestConfig::new("cdr", SourceFormat::GenericJsonl, "train");
        let line = r#"{"doc_id":"a","dataset_id":"","language":"en","text":"x"}"#;
        let parsed = read_generic_jsonl(&format!("{line}\nnot json\n"), &cfg);
        assert_eq!(parsed.docs.len(), 2);
        assert_eq!(parsed.docs[0].as_ref().unwrap().dataset_id, "cdr");
        assert!(matches!(parsed.docs[1], Err(Error::MalformedLine(2))));
    }

    #[test]
    fn format_guessed_from_extension() {
        assert_eq!(
            SourceFormat::from_path(Path::new("a/train.pubtator")),
            Some(SourceFormat::Pubtator)
        );
        assert_eq!(
            SourceFormat::from_path(Path::new("test.bioc.xml")),
            Some(SourceFormat::BiocXml)
        );
        assert_eq!(
            SourceFormat::from_path(Path::new("dev.conll")),
            Some(SourceFormat::Conll)
        );
        assert_eq!(
            SourceFormat::from_path(Path::new("x.jsonl")),
            Some(SourceFormat::GenericJsonl)
        );
        assert_eq!(SourceFormat::from_path(Path::new("x.pdf")), None);
    }
}
