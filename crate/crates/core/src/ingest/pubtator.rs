//! PubTator: `PMID|t|title`, `PMID|a|abstract`, then tab-separated mention
//! lines. BC5CDR-style relation lines (`PMID<TAB>CID<TAB>id1<TAB>id2`) are
//! resolved through the mentions' normalization ids.

use crate::error::{Error, Result};
use crate::schema::{char_slice, EntityMention, RelationTriple, UnifiedDocument};

use super::{IngestConfig, ParsedStream};

enum Line<'a> {
    Title(&'a str, &'a str),
    Abstract(&'a str, &'a str),
    Mention {
        pmid: &'a str,
        start: usize,
        end: usize,
        surface: &'a str,
        etype: &'a str,
        norm_id: Option<&'a str>,
    },
    Relation {
        pmid: &'a str,
        rtype: &'a str,
        head_id: &'a str,
        tail_id: &'a str,
    },
}

fn classify(line: &str) -> Option<Line<'_>> {
    for (marker, is_title) in [("|t|", true), ("|a|", false)] {
        if let Some(pos) = line.find(marker) {
            let pmid = &line[..pos];
            if !pmid.is_empty() && !pmid.contains('\t') {
                let body = &line[pos + marker.len()..];
                return Some(if is_title {
                    Line::Title(pmid, body)
                } else {
                    Line::Abstract(pmid, body)
                });
            }
        }
    }
    let fields: Vec<&str> = line.split('\t').collect();
    match fields.as_slice() {
        [pmid, start, end, surface, etype, rest @ ..] if start.parse::<usize>().is_ok() => Some(Line::Mention {
            pmid,
            start: start.parse().ok()?,
            end: end.parse().ok()?,
            surface,
            etype,
            norm_id: rest.first().copied().filter(|s| !s.is_empty()),
        }),
        [pmid, rtype, head_id, tail_id, ..] if rtype.parse::<usize>().is_err() => Some(Line::Relation {
            pmid,
            rtype,
            head_id,
            tail_id,
        }),
        _ => None,
    }
}

struct Block<'a> {
    lines: Vec<(usize, &'a str)>,
}

fn blocks(stream: &str) -> Vec<Block<'_>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    for (i, line) in stream.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            if !cur.is_empty() {
                out.push(Block {
                    lines: std::mem::take(&mut cur),
                });
            }
        } else {
            cur.push((i + 1, line));
        }
    }
    if !cur.is_empty() {
        out.push(Block { lines: cur });
    }
    out
}

fn parse_block(block: &Block<'_>, cfg: &IngestConfig) -> Result<UnifiedDocument> {
    let first_line = block.lines[0].0;
    let mut pmid: Option<&str> = None;
    let mut title: Option<&str> = None;
    let mut abstract_: Option<&str> = None;
    let mut mentions = Vec::new();
    let mut relations = Vec::new();

    for &(no, raw) in &block.lines {
        let parsed = classify(raw).ok_or(Error::MalformedLine(no))?;
        let id = match &parsed {
            Line::Title(p, _) | Line::Abstract(p, _) => *p,
            Line::Mention { pmid, .. } | Line::Relation { pmid, .. } => *pmid,
        };
        match pmid {
            None => pmid = Some(id),
            Some(p) if p != id => return Err(Error::MalformedLine(no)),
            _ => {}
        }
        match parsed {
            Line::Title(_, t) if title.is_none() => title = Some(t),
            Line::Abstract(_, a) if abstract_.is_none() => abstract_ = Some(a),
            Line::Title(..) | Line::Abstract(..) => return Err(Error::MalformedLine(no)),
            Line::Mention {
                start,
                end,
                surface,
                etype,
                norm_id,
                ..
            } => mentions.push((start, end, surface, etype, norm_id)),
            Line::Relation {
                rtype,
                head_id,
                tail_id,
                ..
            } => relations.push((rtype, head_id, tail_id)),
        }
    }

    let pmid = pmid.ok_or(Error::MalformedLine(first_line))?;
    let title = title.ok_or(Error::MalformedLine(first_line))?;
    let text = format!("{}\n{}", title, abstract_.unwrap_or(""));

    let mut doc = UnifiedDocument::new(pmid, &cfg.dataset_id, cfg.language, text);
    for (start, end, surface, etype, norm_id) in mentions {
        if start >= end || char_slice(&doc.text, start, end) != Some(surface) {
            return Err(Error::OffsetMismatch {
                doc: pmid.to_string(),
                mention: format!("{surface}@{start}-{end}"),
            });
        }
        let mut m = EntityMention::new(surface, cfg.map_type(etype), start, end);
        m.norm_id = norm_id.map(str::to_string);
        doc.entities.push(m);
    }
    for (rtype, head_id, tail_id) in relations {
        let find = |id: &str| {
            doc.entities
                .iter()
                .find(|e| e.norm_id.as_deref().is_some_and(|n| n.split('|').any(|p| p == id)))
                .map(|e| e.surface.clone())
        };
        match (find(head_id), find(tail_id)) {
            (Some(h), Some(t)) => doc.relations.push(RelationTriple::new(h, t, rtype)),
            _ => return Err(Error::DanglingRef(format!("{pmid}:{rtype}:{head_id}:{tail_id}"))),
        }
    }
    Ok(doc)
}

pub fn read_pubtator(stream: &str, cfg: &IngestConfig) -> ParsedStream {
    ParsedStream {
        docs: blocks(stream).iter().map(|b| parse_block(b, cfg)).collect(),
        warnings: Vec::new(),
    }
}

/// One document per PMID; fails on the first malformed document.
pub fn parse_pubtator(stream: &str, cfg: &IngestConfig) -> Result<Vec<UnifiedDocument>> {
    read_pubtator(stream, cfg).into_strict()
}

/// Inverse of [`parse_pubtator`] for documents whose text is `title\nabstract`
/// with no further newlines. Relations are written only when both arguments
/// carry a normalization id.
pub fn write_pubtator(docs: &[UnifiedDocument]) -> String {
    let mut out = String::new();
    for doc in docs {
        let (title, abstract_) = doc.text.split_once('\n').unwrap_or((doc.text.as_str(), ""));
        out.push_str(&format!("{}|t|{}\n{}|a|{}\n", doc.doc_id, title, doc.doc_id, abstract_));
        for e in &doc.entities {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}",
                doc.doc_id, e.start, e.end, e.surface, e.etype
            ));
            if let Some(n) = &e.norm_id {
                out.push('\t');
                out.push_str(n);
            }
            out.push('\n');
        }
        for r in &doc.relations {
            let id_of = |s: &str| {
                doc.entities
                    .iter()
                    .find(|e| e.surface == s)
                    .and_then(|e| e.norm_id.clone())
            };
            if let (Some(h), Some(t)) = (id_of(&r.head), id_of(&r.tail)) {
                out.push_str(&format!("{}\t{}\t{}\t{}\n", doc.doc_id, r.rtype, h, t));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SourceFormat;

    fn cfg() -> IngestConfig {
        IngestConfig::new("ds", SourceFormat::Pubtator, "train")
    }

    #[test]
    fn single_document() {
        let docs = parse_pubtator("1|t|Abc\n1|a|xy\n1\t0\t3\tAbc\tDisease\n\n", &cfg()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].text, "Abc\nxy");
        assert_eq!(docs[0].entities, vec![EntityMention::new("Abc", "Disease", 0, 3)]);
    }

    #[test]
    fn empty_stream() {
        assert!(parse_pubtator("", &cfg()).unwrap().is_empty());
    }

    #[test]
    fn surface_disagreeing_with_span() {
        let err = parse_pubtator("1|t|Abc\n1|a|xy\n1\t0\t3\tAbd\tDisease\n", &cfg()).unwrap_err();
        assert!(matches!(err, Error::OffsetMismatch { .. }));
    }

    #[test]
    fn garbage_line_is_malformed() {
        let err = parse_pubtator("1|t|Abc\nhello world\n", &cfg()).unwrap_err();
        assert!(matches!(err, Error::MalformedLine(2)));
    }

    #[test]
    fn relation_lines_resolve_through_norm_ids() {
        let s = "7|t|Phenobarbital dyskinesia\n7|a|\n\
7\t0\t13\tPhenobarbital\tChemical\tD010634\n\
7\t14\t24\tdyskinesia\tDisease\tD004409\n\
7\tCID\tD010634\tD004409\n";
        let docs = parse_pubtator(s, &cfg()).unwrap();
        assert_eq!(
            docs[0].relations,
            vec![RelationTriple::new("Phenobarbital", "dyskinesia", "CID")]
        );
        assert_eq!(parse_pubtator(&write_pubtator(&docs), &cfg()).unwrap(), docs);
    }

    #[test]
    fn unknown_relation_id_dangles() {
        let s = "7|t|A b\n7|a|\n7\t0\t1\tA\tChemical\tD1\n7\tCID\tD1\tD9\n";
        assert!(matches!(parse_pubtator(s, &cfg()), Err(Error::DanglingRef(_))));
    }

    #[test]
    fn type_map_and_unicode_offsets() {
        let mut c = cfg();
        c.entity_type_map = Some([("疾病".to_string(), "Disease".to_string())].into());
        let s = "9|t|成人 SARS 研究\n9|a|\n9\t3\t7\tSARS\t疾病\n";
        let docs = parse_pubtator(s, &c).unwrap();
        assert_eq!(docs[0].entities[0].etype, "Disease");
        assert_eq!(docs[0].entities[0].start, 3);
    }
}
