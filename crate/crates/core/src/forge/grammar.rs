//! Canonical gold-output strings.
//!
//! These grammars are scoring-relevant: the eval parsers invert them, so any
//! change here must be mirrored in `eval::parse`.

use crate::error::{Error, Result};
use crate::schema::{Language, RelationMode, RelationTriple, Speaker, TaskType, UnifiedDocument};

pub const EN_ITEM_SEP: &str = "; ";
pub const ZH_ITEM_SEP: &str = "；";
pub const EN_HEADER_SEP: &str = ": ";
pub const ZH_HEADER_SEP: &str = "：";

pub const TC_MARKER_EN: &str = "Result: ";
pub const TC_MARKER_ZH: &str = "上述文本被分类为: ";

pub fn empty_ner_marker(lang: Language) -> &'static str {
    match lang {
        Language::En => "No entities found.",
        Language::Zh => "未识别出实体。",
    }
}

pub fn empty_re_marker(lang: Language) -> &'static str {
    match lang {
        Language::En => "No relations found.",
        Language::Zh => "未识别出关系。",
    }
}

pub fn empty_tc_marker(lang: Language) -> &'static str {
    match lang {
        Language::En => "No labels assigned.",
        Language::Zh => "未识别出类别。",
    }
}

pub fn empty_ee_marker(lang: Language) -> &'static str {
    match lang {
        Language::En => "No events found.",
        Language::Zh => "未识别出事件。",
    }
}

fn item_sep(lang: Language) -> &'static str {
    match lang {
        Language::En => EN_ITEM_SEP,
        Language::Zh => ZH_ITEM_SEP,
    }
}

fn header_sep(lang: Language) -> &'static str {
    match lang {
        Language::En => EN_HEADER_SEP,
        Language::Zh => ZH_HEADER_SEP,
    }
}

/// Unique `(surface, type)` pairs grouped by type. Types and surfaces keep
/// first-occurrence order.
pub fn grouped_entities(doc: &UnifiedDocument) -> Vec<(&str, Vec<&str>)> {
    let mut groups: Vec<(&str, Vec<&str>)> = Vec::new();
    for e in &doc.entities {
        let idx = match groups.iter().position(|(t, _)| *t == e.etype) {
            Some(i) => i,
            None => {
                groups.push((e.etype.as_str(), Vec::new()));
                groups.len() - 1
            }
        };
        let items = &mut groups[idx].1;
        if !items.contains(&e.surface.as_str()) {
            items.push(e.surface.as_str());
        }
    }
    groups
}

pub fn serialize_ner(doc: &UnifiedDocument, lang: Language) -> String {
    let groups = grouped_entities(doc);
    if groups.is_empty() {
        return empty_ner_marker(lang).to_string();
    }
    groups
        .iter()
        .map(|(t, items)| format!("{t}{}{}", header_sep(lang), items.join(item_sep(lang))))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn unique_triples(doc: &UnifiedDocument) -> Vec<&RelationTriple> {
    let mut out: Vec<&RelationTriple> = Vec::new();
    for r in &doc.relations {
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

pub fn serialize_re(doc: &UnifiedDocument, lang: Language, mode: RelationMode) -> String {
    let triples = unique_triples(doc);
    if triples.is_empty() {
        return empty_re_marker(lang).to_string();
    }
    let mut seen_pairs: Vec<(&str, &str)> = Vec::new();
    let mut items = Vec::new();
    for r in triples {
        match mode {
            RelationMode::Typed => items.push(format!("({}, {}, {})", r.head, r.tail, r.rtype)),
            RelationMode::Pair => {
                let pair = (r.head.as_str(), r.tail.as_str());
                if !seen_pairs.contains(&pair) {
                    seen_pairs.push(pair);
                    items.push(format!("[{}, {}]", r.head, r.tail));
                }
            }
        }
    }
    // Relation lists use "; " in both languages.
    items.join(EN_ITEM_SEP)
}

pub fn serialize_tc(doc: &UnifiedDocument, lang: Language) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for l in &doc.labels {
        if !labels.contains(&l.as_str()) {
            labels.push(l);
        }
    }
    if labels.is_empty() {
        return empty_tc_marker(lang).to_string();
    }
    match lang {
        Language::En => format!("{TC_MARKER_EN}{}", labels.join(EN_ITEM_SEP)),
        Language::Zh => format!("{TC_MARKER_ZH}{}", labels.join(ZH_ITEM_SEP)),
    }
}

pub fn serialize_ee(doc: &UnifiedDocument, lang: Language) -> String {
    if doc.events.is_empty() {
        return empty_ee_marker(lang).to_string();
    }
    doc.events
        .iter()
        .map(|ev| {
            let mut parts = vec![format!("Trigger: {}", ev.trigger)];
            parts.extend(ev.arguments.iter().map(|a| format!("{}: {}", a.role, a.filler)));
            format!("{}: ({})", ev.event_type, parts.join(", "))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Gold output for `doc`, with relational tasks in typed mode.
pub fn serialize_gold(doc: &UnifiedDocument, task: TaskType, language: Language) -> Result<String> {
    serialize_gold_with(doc, task, language, RelationMode::Typed)
}

pub fn serialize_gold_with(
    doc: &UnifiedDocument,
    task: TaskType,
    language: Language,
    mode: RelationMode,
) -> Result<String> {
    let mismatch = || Error::PayloadMismatch {
        doc: doc.doc_id.clone(),
        task,
    };
    Ok(match task {
        TaskType::Ner => serialize_ner(doc, language),
        TaskType::Re | TaskType::Cre | TaskType::Coref => serialize_re(doc, language, mode),
        TaskType::Ee => serialize_ee(doc, language),
        TaskType::Tc => serialize_tc(doc, language),
        TaskType::QaMc => {
            let qa = doc.qa.as_ref().ok_or_else(mismatch)?;
            let options = qa.options.as_deref().unwrap_or(&[]);
            let lines: Option<Vec<String>> = qa
                .answer_keys
                .iter()
                .map(|k| {
                    options
                        .iter()
                        .find(|o| &o.key == k)
                        .map(|o| format!("{}. {}", o.key, o.text))
                })
                .collect();
            match lines {
                Some(l) if !l.is_empty() => l.join("\n"),
                _ => return Err(mismatch()),
            }
        }
        TaskType::QaSqa | TaskType::QaCqa => {
            let qa = doc.qa.as_ref().ok_or_else(mismatch)?;
            qa.answer_keys.join("\n")
        }
        TaskType::Mrd => doc
            .dialogue
            .as_ref()
            .and_then(|turns| turns.iter().rev().find(|t| t.speaker == Speaker::Assistant))
            .map(|t| t.text.clone())
            .ok_or_else(mismatch)?,
        TaskType::Mt => doc.translation.as_ref().ok_or_else(mismatch)?.text_b.clone(),
        TaskType::TpSs | TaskType::TpTe => doc.pair.as_ref().and_then(|p| p.label.clone()).ok_or_else(mismatch)?,
        TaskType::TtDs | TaskType::TtTs => doc.pair.as_ref().ok_or_else(mismatch)?.text_b.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{EntityMention, EventArgument, EventFrame, QAInstance, QaOption};

    fn doc_with(entities: &[(&str, &str)]) -> UnifiedDocument {
        let mut d = UnifiedDocument::new("1", "ds", Language::En, "");
        for (s, t) in entities {
            d.entities.push(EntityMention::new(*s, *t, 0, 1));
        }
        d
    }

    #[test]
    fn ner_english_example() {
        let d = doc_with(&[
            ("valproic acid", "Chemical"),
            ("Valproic acid", "Chemical"),
            ("VPA", "Chemical"),
            ("epileptic", "Disease"),
            ("VPA", "Chemical"),
            ("Ammonia", "Chemical"),
            ("NH3", "Chemical"),
            ("drowsiness", "Disease"),
            ("ammonia", "Chemical"),
        ]);
        let mut d2 = d.clone();
        // Reorder into the first-occurrence order of the published example.
        d2.entities = [
            ("valproic acid", "Chemical"),
            ("Ammonia", "Chemical"),
            ("NH3", "Chemical"),
            ("ammonia", "Chemical"),
            ("VPA", "Chemical"),
            ("Valproic acid", "Chemical"),
            ("epileptic", "Disease"),
            ("drowsiness", "Disease"),
        ]
        .iter()
        .map(|(s, t)| EntityMention::new(*s, *t, 0, 1))
        .collect();
        assert_eq!(
            serialize_gold(&d2, TaskType::Ner, Language::En).unwrap(),
            "Chemical: valproic acid; Ammonia; NH3; ammonia; VPA; Valproic acid\nDisease: epileptic; drowsiness"
        );
        assert!(serialize_ner(&d, Language::En).starts_with("Chemical: valproic acid; Valproic acid; VPA"));
    }

    #[test]
    fn ner_chinese_uses_fullwidth_separators() {
        let d = doc_with(&[("成人 SARS", "疾病"), ("SARST 细胞亚群", "身体"), ("细胞", "身体")]);
        assert_eq!(
            serialize_ner(&d, Language::Zh),
            "疾病：成人 SARS\n身体：SARST 细胞亚群；细胞"
        );
    }

    #[test]
    fn ner_empty_markers() {
        let d = doc_with(&[]);
        assert_eq!(serialize_ner(&d, Language::En), "No entities found.");
        assert_eq!(serialize_ner(&d, Language::Zh), "未识别出实体。");
    }

    #[test]
    fn re_chinese_typed_example() {
        let mut d = UnifiedDocument::new("1", "ds", Language::Zh, "");
        for tail in ["泌尿系畸形", "双肾"] {
            d.relations.push(RelationTriple::new("13-三体综合征", tail, "并发症"));
        }
        assert_eq!(
            serialize_gold(&d, TaskType::Re, Language::Zh).unwrap(),
            "(13-三体综合征, 泌尿系畸形, 并发症); (13-三体综合征, 双肾, 并发症)"
        );
    }

    #[test]
    fn re_pair_mode() {
        let mut d = UnifiedDocument::new("1", "ds", Language::En, "");
        d.relations
            .push(RelationTriple::new("Phenobarbital", "dyskinesia", "CID"));
        d.relations
            .push(RelationTriple::new("phenobarbital", "dyskinesia", "CID"));
        assert_eq!(
            serialize_gold_with(&d, TaskType::Re, Language::En, RelationMode::Pair).unwrap(),
            "[Phenobarbital, dyskinesia]; [phenobarbital, dyskinesia]"
        );
    }

    #[test]
    fn tc_both_languages() {
        let mut d = UnifiedDocument::new("1", "ds", Language::En, "");
        d.labels = vec!["Prevention".into()];
        assert_eq!(serialize_tc(&d, Language::En), "Result: Prevention");
        d.labels = vec!["治疗或手术".into(), "药物".into()];
        assert_eq!(serialize_tc(&d, Language::Zh), "上述文本被分类为: 治疗或手术；药物");
    }

    #[test]
    fn ee_format() {
        let mut d = UnifiedDocument::new("1", "ds", Language::En, "");
        d.events.push(EventFrame {
            event_type: "Infection".into(),
            trigger: "infected".into(),
            arguments: vec![
                EventArgument {
                    role: "Theme".into(),
                    filler: "the ward patients".into(),
                },
                EventArgument {
                    role: "Cause".into(),
                    filler: "Norovirus".into(),
                },
            ],
        });
        assert_eq!(
            serialize_ee(&d, Language::En),
            "Infection: (Trigger: infected, Theme: the ward patients, Cause: Norovirus)"
        );
    }

    #[test]
    fn qa_mc_key_and_text() {
        let mut d = UnifiedDocument::new("1", "ds", Language::En, "");
        d.qa = Some(QAInstance {
            question: "q".into(),
            options: Some(vec![
                QaOption {
                    key: "A".into(),
                    text: "yes".into(),
                },
                QaOption {
                    key: "B".into(),
                    text: "no".into(),
                },
            ]),
            answer_keys: vec!["B".into()],
            context: None,
        });
        assert_eq!(serialize_gold(&d, TaskType::QaMc, Language::En).unwrap(), "B. no");
        assert!(serialize_gold(&d, TaskType::Mt, Language::En).is_err());
    }
}
