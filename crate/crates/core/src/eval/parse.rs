//! Tolerant parsers from free-text generations back to structured
//! predictions. Every parser is total: odd input yields `Unparseable`, never
//! an error or a panic.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::forge::grammar::{empty_ner_marker, empty_re_marker, empty_tc_marker};
use crate::schema::{Language, QaOption, RelationTriple};

use super::metrics::EntityItem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Parsed,
    Partial,
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub status: ParseStatus,
    pub ner: BTreeSet<EntityItem>,
    pub re: BTreeSet<RelationTriple>,
    pub tc: BTreeSet<String>,
    pub qa_choice: Option<String>,
}

impl ParseOutcome {
    pub fn unparseable() -> Self {
        ParseOutcome {
            status: ParseStatus::Unparseable,
            ner: BTreeSet::new(),
            re: BTreeSet::new(),
            tc: BTreeSet::new(),
            qa_choice: None,
        }
    }

    fn with_status(status: ParseStatus) -> Self {
        ParseOutcome {
            status,
            ..Self::unparseable()
        }
    }

    pub fn is_unparseable(&self) -> bool {
        self.status == ParseStatus::Unparseable
    }
}

fn chars_eq_ci(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Byte index just past `needle` if it occurs at `at`, ignoring case.
fn match_ci(hay: &str, at: usize, needle: &str) -> Option<usize> {
    let mut rest = hay[at..].chars();
    let mut end = at;
    for nc in needle.chars() {
        let hc = rest.next()?;
        if !chars_eq_ci(hc, nc) {
            return None;
        }
        end += hc.len_utf8();
    }
    Some(end)
}

fn find_ci(hay: &str, needle: &str) -> Option<(usize, usize)> {
    if needle.is_empty() {
        return None;
    }
    hay.char_indices()
        .find_map(|(i, _)| match_ci(hay, i, needle).map(|e| (i, e)))
}

fn eq_ci(a: &str, b: &str) -> bool {
    a.chars().count() == b.chars().count() && a.chars().zip(b.chars()).all(|(x, y)| chars_eq_ci(x, y))
}

fn is_word(c: char) -> bool {
    c.is_ascii_alphanumeric()
}

/// A match of `needle` at `[start, end)` that does not cut through an ASCII word.
fn at_word_boundary(hay: &str, start: usize, end: usize) -> bool {
    let before = hay[..start].chars().next_back();
    let after = hay[end..].chars().next();
    let first = hay[start..end].chars().next();
    let last = hay[start..end].chars().next_back();
    let left_ok = !(first.is_some_and(is_word) && before.is_some_and(is_word));
    let right_ok = !(last.is_some_and(is_word) && after.is_some_and(is_word));
    left_ok && right_ok
}

/// All case-insensitive occurrences of `needle` that respect ASCII word
/// boundaries.
fn occurrences_ci(hay: &str, needle: &str) -> Vec<(usize, usize)> {
    if needle.is_empty() {
        return Vec::new();
    }
    hay.char_indices()
        .filter_map(|(i, _)| match_ci(hay, i, needle).map(|e| (i, e)))
        .filter(|&(s, e)| at_word_boundary(hay, s, e))
        .collect()
}

fn canonical<'a>(item: &str, vocab: &'a [String]) -> Option<&'a str> {
    vocab.iter().find(|v| eq_ci(v, item)).map(String::as_str)
}

fn contains_marker(raw: &str, markers: [&str; 2]) -> bool {
    markers.iter().any(|m| find_ci(raw, m).is_some())
}

const FILLER_ITEMS: [&str; 5] = ["none", "n/a", "无", "没有", "null"];

/// English and Chinese names for common entity types, used so a Chinese
/// answer can name an English type header and vice versa.
const TYPE_ALIASES: [(&str, &str); 12] = [
    ("Chemical", "化学物质"),
    ("Chemical", "化学物"),
    ("Disease", "疾病"),
    ("Gene", "基因"),
    ("Species", "物种"),
    ("Drug", "药物"),
    ("Symptom", "症状"),
    ("Protein", "蛋白质"),
    ("Body", "身体部位"),
    ("Department", "科室"),
    ("Procedure", "医疗程序"),
    ("Test", "检查"),
];

fn header_names(vocab: &[String]) -> Vec<(String, String)> {
    let mut names: Vec<(String, String)> = Vec::new();
    for v in vocab.iter().filter(|v| !v.trim().is_empty()) {
        names.push((v.clone(), v.clone()));
        for (en, zh) in TYPE_ALIASES {
            if eq_ci(v, en) {
                names.push((zh.to_string(), v.clone()));
            } else if v == zh {
                names.push((en.to_string(), v.clone()));
            }
        }
    }
    // Longest first so "Chemical entity" beats "Chemical" style prefixes.
    names.sort_by_key(|n| std::cmp::Reverse(n.0.chars().count()));
    names
}

const HEADER_SUFFIXES: [&str; 4] = ["entities", "entity", "实体", "类"];

fn skip_inline_space(line: &str, mut at: usize) -> usize {
    while let Some(c) = line[at..].chars().next() {
        if c == ' ' || c == '\t' {
            at += c.len_utf8();
        } else {
            break;
        }
    }
    at
}

/// `(content_start, canonical type)` for a header beginning at `at`.
fn header_at(line: &str, at: usize, names: &[(String, String)]) -> Option<(usize, String)> {
    for (name, canon) in names {
        let Some(end) = match_ci(line, at, name) else {
            continue;
        };
        if !at_word_boundary(line, at, end) {
            continue;
        }
        let mut pos = skip_inline_space(line, end);
        for suffix in HEADER_SUFFIXES {
            if let Some(e) = match_ci(line, pos, suffix) {
                pos = skip_inline_space(line, e);
                break;
            }
        }
        if let Some(c) = line[pos..].chars().next() {
            if c == ':' || c == '：' {
                return Some((pos + c.len_utf8(), canon.clone()));
            }
        }
    }
    None
}

/// Lines of `Type: a; b`. Types match `type_vocab` case-insensitively (plus
/// Chinese or English aliases) and come back in canonical casing. Both
/// languages' punctuation is accepted whatever the prompt language was.
pub fn parse_ner_output(raw: &str, _language: Language, type_vocab: &[String]) -> ParseOutcome {
    let names = header_names(type_vocab);
    let mut out = ParseOutcome::with_status(ParseStatus::Parsed);
    let mut any_header = false;
    let mut chatter = false;
    for line in raw.split('\n') {
        let mut headers: Vec<(usize, usize, String)> = Vec::new();
        let mut at = 0;
        while at < line.len() {
            if let Some((content, canon)) = header_at(line, at, &names) {
                headers.push((at, content, canon));
                at = content;
            } else {
                at += line[at..].chars().next().map_or(1, char::len_utf8);
            }
        }
        let lead_end = headers.first().map_or(line.len(), |h| h.0);
        if !line[..lead_end].trim().is_empty() {
            chatter = true;
        }
        for (i, (_, content, canon)) in headers.iter().enumerate() {
            any_header = true;
            let seg_end = headers.get(i + 1).map_or(line.len(), |h| h.0);
            for item in line[*content..seg_end].split([';', '；']) {
                let item = item.trim();
                if item.is_empty() || FILLER_ITEMS.iter().any(|f| eq_ci(f, item)) {
                    continue;
                }
                out.ner.insert(EntityItem::new(item, canon.clone()));
            }
        }
    }
    if !any_header {
        if contains_marker(raw, [empty_ner_marker(Language::En), empty_ner_marker(Language::Zh)]) {
            let only_marker = [Language::En, Language::Zh]
                .iter()
                .any(|l| eq_ci(raw.trim(), empty_ner_marker(*l)));
            return ParseOutcome::with_status(if only_marker {
                ParseStatus::Parsed
            } else {
                ParseStatus::Partial
            });
        }
        return ParseOutcome::unparseable();
    }
    if chatter {
        out.status = ParseStatus::Partial;
    }
    out
}

fn closer_for(open: char) -> Option<char> {
    match open {
        '(' => Some(')'),
        '（' => Some('）'),
        '[' => Some(']'),
        '【' => Some('】'),
        _ => None,
    }
}

fn is_closer(c: char) -> bool {
    matches!(c, ')' | '）' | ']' | '】')
}

/// Splits on `,`/`，` that sit outside any nested bracket.
fn split_top_level(content: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in content.char_indices() {
        if closer_for(c).is_some() {
            depth += 1;
        } else if is_closer(c) {
            depth = depth.saturating_sub(1);
        } else if depth == 0 && (c == ',' || c == '，') {
            parts.push(&content[start..i]);
            start = i + c.len_utf8();
        }
    }
    parts.push(&content[start..]);
    parts
}

const RE_SEPARATORS: [char; 11] = [' ', '\t', '\n', '\r', ';', '；', ',', '，', '、', '.', '。'];

/// `(head, tail, type)` triples and `[head, tail]` pairs. Pairs take their
/// type from `prompted_relation`; without one they are rejected.
pub fn parse_re_output(
    raw: &str,
    _language: Language,
    relation_vocab: &[String],
    prompted_relation: Option<&str>,
) -> ParseOutcome {
    let mut out = ParseOutcome::with_status(ParseStatus::Parsed);
    let mut groups = 0usize;
    let mut rejected = false;
    let mut depth = 0usize;
    let mut group_start = 0;
    let mut outside = String::new();
    for (i, c) in raw.char_indices() {
        if closer_for(c).is_some() {
            if depth == 0 {
                group_start = i + c.len_utf8();
            }
            depth += 1;
        } else if is_closer(c) && depth > 0 {
            depth -= 1;
            if depth == 0 {
                groups += 1;
                let parts: Vec<&str> = split_top_level(&raw[group_start..i])
                    .into_iter()
                    .map(str::trim)
                    .collect();
                if parts.iter().any(|p| p.is_empty()) {
                    rejected = true;
                    continue;
                }
                match (parts.as_slice(), prompted_relation) {
                    ([h, t, r], _) => {
                        let rtype = canonical(r, relation_vocab).unwrap_or(r);
                        out.re.insert(RelationTriple::new(*h, *t, rtype));
                    }
                    ([h, t], Some(rel)) => {
                        out.re.insert(RelationTriple::new(*h, *t, rel));
                    }
                    _ => rejected = true,
                }
            }
        } else if depth == 0 {
            outside.push(c);
        }
    }
    if depth > 0 {
        rejected = true;
    }
    if groups == 0 {
        if contains_marker(raw, [empty_re_marker(Language::En), empty_re_marker(Language::Zh)]) {
            let only_marker = [Language::En, Language::Zh]
                .iter()
                .any(|l| eq_ci(raw.trim(), empty_re_marker(*l)));
            return ParseOutcome::with_status(if only_marker {
                ParseStatus::Parsed
            } else {
                ParseStatus::Partial
            });
        }
        return ParseOutcome::unparseable();
    }
    if out.re.is_empty() && rejected {
        return ParseOutcome::unparseable();
    }
    if rejected || outside.chars().any(|c| !RE_SEPARATORS.contains(&c)) {
        out.status = ParseStatus::Partial;
    }
    out
}

const TC_MARKERS: [&str; 6] = [
    "上述文本被分类为:",
    "上述文本被分类为：",
    "Result:",
    "Result：",
    "Results:",
    "Results：",
];

/// Vocabulary labels occurring anywhere in `text`.
fn scan_labels(text: &str, vocab: &[String]) -> BTreeSet<String> {
    vocab
        .iter()
        .filter(|v| !occurrences_ci(text, v).is_empty())
        .cloned()
        .collect()
}

fn match_items(tail: &str, seps: &[char], vocab: &[String]) -> (BTreeSet<String>, bool) {
    let mut labels = BTreeSet::new();
    let mut all = true;
    for item in tail.split(seps) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let stripped = item.trim_end_matches(['.', '。']).trim();
        match canonical(item, vocab).or_else(|| canonical(stripped, vocab)) {
            Some(l) => {
                labels.insert(l.to_string());
            }
            None => all = false,
        }
    }
    (labels, all)
}

/// `Result: a; b` (or the Chinese marker). Falls back to scanning the whole
/// text for vocabulary labels.
pub fn parse_tc_output(raw: &str, _language: Language, label_vocab: &[String]) -> ParseOutcome {
    let empty_markers = [empty_tc_marker(Language::En), empty_tc_marker(Language::Zh)];
    let marker = TC_MARKERS
        .iter()
        .filter_map(|m| find_ci(raw, m))
        .min_by_key(|&(s, e)| (s, std::cmp::Reverse(e)));
    if let Some((start, end)) = marker {
        let tail = raw[end..].split('\n').next().unwrap_or("");
        let (labels, all) = match_items(tail, &[';', '；'], label_vocab);
        let (labels, all) = if all && !labels.is_empty() {
            (labels, true)
        } else {
            let (wide, wide_all) = match_items(tail, &[';', '；', ',', '，', '、'], label_vocab);
            if wide_all && !wide.is_empty() {
                (wide, true)
            } else {
                let mut merged = wide;
                merged.extend(scan_labels(tail, label_vocab));
                (merged, false)
            }
        };
        if !labels.is_empty() {
            let clean = all && raw[..start].trim().is_empty() && raw[end..].trim() == tail.trim();
            let mut out = ParseOutcome::with_status(if clean {
                ParseStatus::Parsed
            } else {
                ParseStatus::Partial
            });
            out.tc = labels;
            return out;
        }
    }
    if [Language::En, Language::Zh]
        .iter()
        .any(|l| eq_ci(raw.trim(), empty_tc_marker(*l)))
    {
        return ParseOutcome::with_status(ParseStatus::Parsed);
    }
    let found = scan_labels(raw, label_vocab);
    if !found.is_empty() {
        let mut out = ParseOutcome::with_status(ParseStatus::Partial);
        out.tc = found;
        return out;
    }
    if contains_marker(raw, empty_markers) {
        return ParseOutcome::with_status(ParseStatus::Partial);
    }
    ParseOutcome::unparseable()
}

fn key_followers(c: Option<char>) -> bool {
    matches!(c, None | Some('.' | ')' | '）' | ':' | '：' | '、' | '\n' | '\r'))
}

/// Keys with at least one boundary-respecting occurrence, in option order.
fn keys_where(raw: &str, options: &[QaOption], strong_only: bool) -> Vec<String> {
    let mut keys = Vec::new();
    for o in options {
        if o.key.is_empty() {
            continue;
        }
        let hit = raw.match_indices(o.key.as_str()).any(|(s, k)| {
            let e = s + k.len();
            if !at_word_boundary(raw, s, e) {
                return false;
            }
            if !strong_only {
                return true;
            }
            let before = raw[..s].chars().next_back();
            let after = raw[e..].chars().next();
            let bracketed = matches!(before, Some('(' | '（')) && matches!(after, Some(')' | '）'));
            bracketed || (after.is_some() && key_followers(after))
        });
        if hit && !keys.contains(&o.key) {
            keys.push(o.key.clone());
        }
    }
    keys
}

/// Resolution order: a key opening the answer, a unique strongly marked key
/// (`(B)`, `B.`, `B:`), a unique bare key token, then a unique option text.
pub fn parse_qa_choice(raw: &str, options: &[QaOption]) -> ParseOutcome {
    let chosen = |key: &str, status| {
        let mut out = ParseOutcome::with_status(status);
        out.qa_choice = Some(key.to_string());
        out
    };
    let trimmed = raw.trim_start().trim_start_matches(['(', '（']);
    for o in options.iter().filter(|o| !o.key.is_empty()) {
        if let Some(rest) = trimmed.strip_prefix(o.key.as_str()) {
            if key_followers(rest.chars().next()) {
                return chosen(&o.key, ParseStatus::Parsed);
            }
        }
    }
    for strong_only in [true, false] {
        if let [only] = keys_where(raw, options, strong_only).as_slice() {
            return chosen(only, ParseStatus::Partial);
        }
    }
    let by_text: Vec<&QaOption> = options
        .iter()
        .filter(|o| !o.text.trim().is_empty() && find_ci(raw, o.text.trim()).is_some())
        .collect();
    if let [only] = by_text.as_slice() {
        return chosen(&only.key, ParseStatus::Partial);
    }
    ParseOutcome::unparseable()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn ents(o: &ParseOutcome) -> Vec<(&str, &str)> {
        o.ner.iter().map(|e| (e.surface.as_str(), e.etype.as_str())).collect()
    }

    #[test]
    fn ner_examples() {
        let vocab = v(&["Chemical", "Disease"]);
        let o = parse_ner_output(
            "Chemical: valproic acid; Ammonia\nDisease: epileptic",
            Language::En,
            &vocab,
        );
        assert_eq!(o.status, ParseStatus::Parsed);
        assert_eq!(
            ents(&o),
            [
                ("Ammonia", "Chemical"),
                ("epileptic", "Disease"),
                ("valproic acid", "Chemical")
            ]
        );
        let o = parse_ner_output("The answer is unclear.", Language::En, &v(&["Chemical"]));
        assert!(o.is_unparseable() && o.ner.is_empty());
        let o = parse_ner_output("chemical:  Aspirin ;Aspirin", Language::En, &vocab);
        assert_eq!(ents(&o), [("Aspirin", "Chemical")]);
    }

    #[test]
    fn ner_chinese_and_aliases() {
        let o = parse_ner_output(
            "药物：阿司匹林；布洛芬\n疾病：流感",
            Language::Zh,
            &v(&["药物", "疾病"]),
        );
        assert_eq!(o.ner.len(), 3);
        assert_eq!(o.status, ParseStatus::Parsed);
        let o = parse_ner_output("疾病实体：流感", Language::Zh, &v(&["Disease"]));
        assert_eq!(ents(&o), [("流感", "Disease")]);
        let o = parse_ner_output("Sure! Chemical entities: aspirin", Language::En, &v(&["Chemical"]));
        assert_eq!(o.status, ParseStatus::Partial);
        assert_eq!(ents(&o), [("aspirin", "Chemical")]);
        let o = parse_ner_output("未识别出实体。", Language::Zh, &v(&["疾病"]));
        assert_eq!(o.status, ParseStatus::Parsed);
        assert!(o.ner.is_empty());
    }

    #[test]
    fn ner_header_needs_word_boundary() {
        let o = parse_ner_output("NonChemical: x", Language::En, &v(&["Chemical"]));
        assert!(o.is_unparseable());
    }

    #[test]
    fn re_examples() {
        let o = parse_re_output(
            "[Phenobarbital, dyskinesia]; [phenobarbital, dyskinesia]",
            Language::En,
            &v(&["CID"]),
            Some("CID"),
        );
        assert_eq!(o.re.len(), 2);
        assert!(o
            .re
            .contains(&RelationTriple::new("Phenobarbital", "dyskinesia", "CID")));
        let o = parse_re_output(
            "(13-三体综合征, 泌尿系畸形, 并发症)",
            Language::Zh,
            &v(&["并发症"]),
            None,
        );
        assert_eq!(o.re.iter().next().unwrap().rtype, "并发症");
        assert!(parse_re_output("no relations.", Language::En, &[], None).is_unparseable());
        let o = parse_re_output("(interleukin (IL)-6, fever, cause)", Language::En, &v(&["Cause"]), None);
        assert_eq!(
            o.re.iter().next().unwrap(),
            &RelationTriple::new("interleukin (IL)-6", "fever", "Cause")
        );
        assert!(parse_re_output("[a, b]", Language::En, &[], None).is_unparseable());
    }

    #[test]
    fn tc_examples() {
        let vocab = v(&["Prevention", "Treatment", "Diagnosis"]);
        let o = parse_tc_output("Result: Prevention", Language::En, &vocab);
        assert_eq!(o.tc.iter().collect::<Vec<_>>(), ["Prevention"]);
        assert_eq!(o.status, ParseStatus::Parsed);
        let o = parse_tc_output("上述文本被分类为: 治疗或手术", Language::Zh, &v(&["治疗或手术"]));
        assert_eq!(o.tc.iter().collect::<Vec<_>>(), ["治疗或手术"]);
        let o = parse_tc_output("It is about prevention and treatment", Language::En, &vocab);
        assert_eq!(o.tc.iter().collect::<Vec<_>>(), ["Prevention", "Treatment"]);
        assert_eq!(o.status, ParseStatus::Partial);
        let o = parse_tc_output("Result: treatment, diagnosis.", Language::En, &vocab);
        assert_eq!(o.tc.len(), 2);
        assert!(parse_tc_output("nothing here", Language::En, &vocab).is_unparseable());
    }

    fn opts() -> Vec<QaOption> {
        ["Aspirin", "Heparin", "Warfarin", "Vitamin K"]
            .iter()
            .zip(["A", "B", "C", "D"])
            .map(|(t, k)| QaOption {
                key: k.into(),
                text: t.to_string(),
            })
            .collect()
    }

    #[test]
    fn qa_examples() {
        assert_eq!(
            parse_qa_choice("The answer is B.", &opts()).qa_choice.as_deref(),
            Some("B")
        );
        assert_eq!(parse_qa_choice("B. Heparin", &opts()).qa_choice.as_deref(), Some("B"));
        assert_eq!(parse_qa_choice("(C)", &opts()).qa_choice.as_deref(), Some("C"));
        assert_eq!(parse_qa_choice("答案是D", &opts()).qa_choice.as_deref(), Some("D"));
        assert_eq!(
            parse_qa_choice("I would give warfarin", &opts()).qa_choice.as_deref(),
            Some("C")
        );
        assert!(parse_qa_choice("aspirin or heparin", &opts()).is_unparseable());
        assert!(parse_qa_choice("", &opts()).is_unparseable());
    }
}
