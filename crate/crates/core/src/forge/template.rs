use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::schema::{Language, PayloadKind, TaskType};

pub const SLOTS: [&str; 8] = [
    "text",
    "entity_types",
    "labels",
    "options",
    "question",
    "context",
    "source_lang",
    "target_lang",
];

/// Slots a template of `task` may reference.
pub fn allowed_slots(task: TaskType) -> &'static [&'static str] {
    match task.payload() {
        PayloadKind::Entities => &["text", "entity_types"],
        PayloadKind::Relations | PayloadKind::Events | PayloadKind::Labels => &["text", "labels"],
        PayloadKind::Pair => &["text", "labels"],
        PayloadKind::Translation => &["text", "source_lang", "target_lang"],
        PayloadKind::Qa => &["question", "options", "context"],
        PayloadKind::Dialogue => &["question", "context"],
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionTemplate {
    pub template_id: String,
    pub task: TaskType,
    pub language: Language,
    pub instruction_pattern: String,
    #[serde(default)]
    pub notes: String,
}

impl InstructionTemplate {
    /// Slot names in order of first appearance.
    pub fn slots(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        let mut rest = self.instruction_pattern.as_str();
        while let Some(open) = rest.find('{') {
            let after = &rest[open + 1..];
            match after.find('}') {
                Some(close) => {
                    let name = &after[..close];
                    if !out.contains(&name) {
                        out.push(name);
                    }
                    rest = &after[close + 1..];
                }
                None => break,
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let allowed = allowed_slots(self.task);
        for slot in self.slots() {
            if !allowed.contains(&slot) {
                return Err(Error::InvalidTemplate {
                    template: self.template_id.clone(),
                    reason: format!("slot {{{slot}}} is not fillable for {}", self.task),
                });
            }
        }
        Ok(())
    }

    pub fn fill(&self, values: &BTreeMap<&str, String>) -> Result<String> {
        let mut out = self.instruction_pattern.clone();
        for slot in self.slots() {
            let v = values
                .get(slot)
                .ok_or_else(|| Error::MissingSlotData(slot.to_string()))?;
            out = out.replace(&format!("{{{slot}}}"), v);
        }
        Ok(out)
    }
}

/// Templates grouped by `(task, language)`, each group in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TemplateBank {
    templates: Vec<InstructionTemplate>,
    groups: BTreeMap<(TaskType, Language), Vec<usize>>,
}

impl TemplateBank {
    pub fn new(templates: Vec<InstructionTemplate>) -> Result<Self> {
        let mut groups: BTreeMap<_, Vec<usize>> = BTreeMap::new();
        let mut ids = std::collections::HashSet::new();
        for (i, t) in templates.iter().enumerate() {
            t.validate()?;
            if !ids.insert(t.template_id.as_str()) {
                return Err(Error::InvalidTemplate {
                    template: t.template_id.clone(),
                    reason: "duplicate template_id".into(),
                });
            }
            groups.entry((t.task, t.language)).or_default().push(i);
        }
        Ok(TemplateBank { templates, groups })
    }

    pub fn matching(&self, task: TaskType, language: Language) -> Vec<&InstructionTemplate> {
        self.groups
            .get(&(task, language))
            .map(|ix| ix.iter().map(|&i| &self.templates[i]).collect())
            .unwrap_or_default()
    }

    pub fn get(&self, template_id: &str) -> Option<&InstructionTemplate> {
        self.templates.iter().find(|t| t.template_id == template_id)
    }

    pub fn templates(&self) -> &[InstructionTemplate] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::new(jsonl::read_jsonl(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        jsonl::write_jsonl(path, &self.templates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tpl(pattern: &str, task: TaskType) -> InstructionTemplate {
        InstructionTemplate {
            template_id: "t".into(),
            task,
            language: Language::En,
            instruction_pattern: pattern.into(),
            notes: String::new(),
        }
    }

    #[test]
    fn slot_scan_and_validation() {
        let t = tpl("Identify {entity_types} entities: \"{text}\" ({text})", TaskType::Ner);
        assert_eq!(t.slots(), ["entity_types", "text"]);
        assert!(t.validate().is_ok());
        assert!(tpl("Classify {text} into {labels}", TaskType::Ner).validate().is_err());
        assert!(tpl("Translate {text} to {target_lang}", TaskType::Mt)
            .validate()
            .is_ok());
    }

    #[test]
    fn fill_replaces_every_occurrence() {
        let t = tpl("{text} / {text}", TaskType::Ner);
        let vals = BTreeMap::from([("text", "x".to_string())]);
        assert_eq!(t.fill(&vals).unwrap(), "x / x");
        let t = tpl("{entity_types}", TaskType::Ner);
        assert!(matches!(t.fill(&vals), Err(Error::MissingSlotData(s)) if s == "entity_types"));
    }
}
