//! BioC XML. Passages are flattened into one text joined by `"\n"`, and
//! annotation offsets are rebased from BioC's collection-relative offsets
//! onto that flattened text.

use std::collections::BTreeMap;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::error::{Error, Result};
use crate::schema::{char_slice, EntityMention, RelationTriple, UnifiedDocument};

use super::{IngestConfig, ParsedStream};

#[derive(Default)]
struct Annotation {
    id: String,
    infons: BTreeMap<String, String>,
    location: Option<(usize, usize)>,
    text: String,
}

#[derive(Default)]
struct Relation {
    id: String,
    infons: BTreeMap<String, String>,
    refs: Vec<String>,
}

#[derive(Default)]
struct Passage {
    offset: Option<usize>,
    text: String,
    annotations: Vec<Annotation>,
}

#[derive(Default)]
struct Document {
    id: String,
    passages: Vec<Passage>,
    loose_annotations: Vec<Annotation>,
    relations: Vec<Relation>,
}

fn attr(e: &BytesStart<'_>, key: &str) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.as_ref() == key.as_bytes())
        .and_then(|a| a.unescape_value().ok().map(|v| v.into_owned()))
}

fn syntax(reader: &Reader<&[u8]>, message: impl ToString) -> Error {
    Error::XmlSyntax {
        position: reader.buffer_position(),
        message: message.to_string(),
    }
}

struct Collector {
    stack: Vec<String>,
    text: String,
    infon_key: Option<String>,
    doc: Option<Document>,
    passage: Option<Passage>,
    annotation: Option<Annotation>,
    relation: Option<Relation>,
    done: Vec<Document>,
}

impl Collector {
    fn parent(&self) -> Option<&str> {
        self.stack.iter().rev().nth(1).map(String::as_str)
    }

    fn open(&mut self, e: &BytesStart<'_>, reader: &Reader<&[u8]>) -> Result<()> {
        let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
        self.text.clear();
        match name.as_str() {
            "document" => self.doc = Some(Document::default()),
            "passage" => self.passage = Some(Passage::default()),
            "annotation" => {
                self.annotation = Some(Annotation {
                    id: attr(e, "id").unwrap_or_default(),
                    ..Default::default()
                })
            }
            "relation" => {
                self.relation = Some(Relation {
                    id: attr(e, "id").unwrap_or_default(),
                    ..Default::default()
                })
            }
            "infon" => self.infon_key = attr(e, "key"),
            "location" => {
                if let Some(a) = self.annotation.as_mut() {
                    let num = |k: &str| -> Result<usize> {
                        attr(e, k)
                            .and_then(|v| v.trim().parse().ok())
                            .ok_or_else(|| syntax(reader, format!("location without numeric {k}")))
                    };
                    if a.location.is_none() {
                        a.location = Some((num("offset")?, num("length")?));
                    }
                }
            }
            "node" => {
                if let (Some(r), Some(id)) = (self.relation.as_mut(), attr(e, "refid")) {
                    r.refs.push(id);
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn close(&mut self, name: &str, reader: &Reader<&[u8]>) -> Result<()> {
        let text = std::mem::take(&mut self.text);
        let parent = self.parent().map(str::to_string);
        match (name, parent.as_deref()) {
            ("id", Some("document")) => {
                if let Some(d) = self.doc.as_mut() {
                    d.id = text.trim().to_string();
                }
            }
            ("offset", Some("passage")) => {
                if let Some(p) = self.passage.as_mut() {
                    p.offset = Some(
                        text.trim()
                            .parse()
                            .map_err(|_| syntax(reader, "non-numeric passage offset"))?,
                    );
                }
            }
            ("text", Some("passage")) => {
                if let Some(p) = self.passage.as_mut() {
                    p.text = text;
                }
            }
            ("text", Some("annotation")) => {
                if let Some(a) = self.annotation.as_mut() {
                    a.text = text;
                }
            }
            ("infon", Some(owner)) => {
                let key = self.infon_key.take().unwrap_or_default();
                match owner {
                    "annotation" => {
                        if let Some(a) = self.annotation.as_mut() {
                            a.infons.insert(key, text);
                        }
                    }
                    "relation" => {
                        if let Some(r) = self.relation.as_mut() {
                            r.infons.insert(key, text);
                        }
                    }
                    _ => {}
                }
            }
            ("annotation", _) => {
                if let Some(a) = self.annotation.take() {
                    match (self.passage.as_mut(), self.doc.as_mut()) {
                        (Some(p), _) => p.annotations.push(a),
                        (None, Some(d)) => d.loose_annotations.push(a),
                        _ => {}
                    }
                }
            }
            ("relation", _) => {
                if let (Some(r), Some(d)) = (self.relation.take(), self.doc.as_mut()) {
                    d.relations.push(r);
                }
            }
            ("passage", _) => {
                if let (Some(p), Some(d)) = (self.passage.take(), self.doc.as_mut()) {
                    d.passages.push(p);
                }
            }
            ("document", _) => {
                if let Some(d) = self.doc.take() {
                    self.done.push(d);
                }
            }
            _ => {}
        }
        Ok(())
    }
}

fn collect(stream: &str) -> Result<Vec<Document>> {
    let mut reader = Reader::from_str(stream);
    let mut c = Collector {
        stack: Vec::new(),
        text: String::new(),
        infon_key: None,
        doc: None,
        passage: None,
        annotation: None,
        relation: None,
        done: Vec::new(),
    };
    loop {
        let event = reader.read_event().map_err(|e| syntax(&reader, e))?;
        match event {
            Event::Start(e) => {
                c.stack.push(String::from_utf8_lossy(e.name().as_ref()).into_owned());
                c.open(&e, &reader)?;
            }
            Event::Empty(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                c.stack.push(name.clone());
                c.open(&e, &reader)?;
                c.close(&name, &reader)?;
                c.stack.pop();
            }
            Event::Text(t) => {
                let s = t.unescape().map_err(|e| syntax(&reader, e))?;
                c.text.push_str(&s);
            }
            Event::CData(t) => c.text.push_str(&String::from_utf8_lossy(&t)),
            Event::End(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                c.close(&name, &reader)?;
                c.stack.pop();
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if let Some(open) = c.stack.last() {
        return Err(syntax(&reader, format!("unclosed element <{open}>")));
    }
    Ok(c.done)
}

fn entity_type(a: &Annotation) -> String {
    ["type", "Type", "entity_type"]
        .iter()
        .find_map(|k| a.infons.get(*k))
        .cloned()
        .unwrap_or_else(|| "entity".to_string())
}

fn norm_id(a: &Annotation) -> Option<String> {
    ["identifier", "Identifier", "MESH", "NCBI Gene"]
        .iter()
        .find_map(|k| a.infons.get(*k))
        .cloned()
}

fn build(doc: Document, cfg: &IngestConfig) -> Result<UnifiedDocument> {
    // (source offset, flattened start, length) per passage
    let mut layout = Vec::new();
    let mut text = String::new();
    let mut cursor = 0usize;
    for (i, p) in doc.passages.iter().enumerate() {
        if i > 0 {
            text.push('\n');
            cursor += 1;
        }
        let len = p.text.chars().count();
        layout.push((p.offset.unwrap_or(0), cursor, len));
        text.push_str(&p.text);
        cursor += len;
    }

    let mut out = UnifiedDocument::new(&doc.id, &cfg.dataset_id, cfg.language, text);
    let mismatch = |a: &Annotation| Error::OffsetMismatch {
        doc: doc.id.clone(),
        mention: format!("{} ({})", a.id, a.text),
    };

    let mut by_id: BTreeMap<&str, String> = BTreeMap::new();
    let placed = doc
        .passages
        .iter()
        .enumerate()
        .flat_map(|(i, p)| p.annotations.iter().map(move |a| (Some(i), a)))
        .chain(doc.loose_annotations.iter().map(|a| (None, a)));
    for (passage, a) in placed {
        let Some((offset, length)) = a.location else {
            return Err(mismatch(a));
        };
        let slot = passage.or_else(|| {
            layout
                .iter()
                .position(|&(src, _, len)| src <= offset && offset + length <= src + len)
        });
        let Some((src, flat, _)) = slot.map(|i| layout[i]) else {
            return Err(mismatch(a));
        };
        if offset < src {
            return Err(mismatch(a));
        }
        let start = flat + (offset - src);
        let end = start + length;
        if length == 0 || char_slice(&out.text, start, end) != Some(a.text.as_str()) {
            return Err(mismatch(a));
        }
        let mut m = EntityMention::new(a.text.clone(), cfg.map_type(&entity_type(a)), start, end);
        m.norm_id = norm_id(a);
        out.entities.push(m);
        if !a.id.is_empty() {
            by_id.insert(a.id.as_str(), a.text.clone());
        }
    }

    for r in &doc.relations {
        let rtype = ["relation", "type", "Type"]
            .iter()
            .find_map(|k| r.infons.get(*k))
            .cloned()
            .unwrap_or_default();
        let surfaces: Option<Vec<&String>> = r.refs.iter().map(|id| by_id.get(id.as_str())).collect();
        match surfaces.as_deref() {
            Some([head, tail, ..]) => out.relations.push(RelationTriple::new(*head, *tail, rtype)),
            _ => return Err(Error::DanglingRef(r.id.clone())),
        }
    }
    Ok(out)
}

pub fn read_bioc_xml(stream: &str, cfg: &IngestConfig) -> Result<ParsedStream> {
    let docs = collect(stream)?;
    Ok(ParsedStream {
        docs: docs.into_iter().map(|d| build(d, cfg)).collect(),
        warnings: Vec::new(),
    })
}

/// Strict BioC reader; XML syntax errors are always fatal.
pub fn parse_bioc_xml(stream: &str, cfg: &IngestConfig) -> Result<Vec<UnifiedDocument>> {
    read_bioc_xml(stream, cfg)?.into_strict()
}

/// Writes each document as a single passage at offset 0.
pub fn write_bioc_xml(docs: &[UnifiedDocument]) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<collection><source>bioforge</source>\n");
    for doc in docs {
        out.push_str(&format!(
            "<document><id>{}</id><passage><offset>0</offset><text>{}</text>",
            escape(doc.doc_id.as_str()),
            escape(doc.text.as_str())
        ));
        for (i, e) in doc.entities.iter().enumerate() {
            out.push_str(&format!(
                "<annotation id=\"T{}\"><infon key=\"type\">{}</infon>",
                i,
                escape(e.etype.as_str())
            ));
            if let Some(n) = &e.norm_id {
                out.push_str(&format!("<infon key=\"identifier\">{}</infon>", escape(n.as_str())));
            }
            out.push_str(&format!(
                "<location offset=\"{}\" length=\"{}\"/><text>{}</text></annotation>",
                e.start,
                e.end - e.start,
                escape(e.surface.as_str())
            ));
        }
        out.push_str("</passage>");
        for (i, r) in doc.relations.iter().enumerate() {
            let find = |s: &str| doc.entities.iter().position(|e| e.surface == s);
            if let (Some(h), Some(t)) = (find(&r.head), find(&r.tail)) {
                out.push_str(&format!(
                    "<relation id=\"R{}\"><infon key=\"relation\">{}</infon><node refid=\"T{}\" role=\"head\"/><node refid=\"T{}\" role=\"tail\"/></relation>",
                    i,
                    escape(r.rtype.as_str()),
                    h,
                    t
                ));
            }
        }
        out.push_str("</document>\n");
    }
    out.push_str("</collection>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::SourceFormat;

    fn cfg() -> IngestConfig {
        IngestConfig::new("ds", SourceFormat::BiocXml, "train")
    }

    #[test]
    fn minimal_collection() {
        let xml = r#"<collection><document><id>1</id><passage><offset>0</offset><text>Gout attack</text>
<annotation id="A"><infon key="type">Disease</infon><location offset="0" length="4"/><text>Gout</text></annotation>
</passage></document></collection>"#;
        let docs = parse_bioc_xml(xml, &cfg()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].entities, vec![EntityMention::new("Gout", "Disease", 0, 4)]);
    }

    #[test]
    fn second_passage_offsets_are_rebased() {
        // passages "Hello" (source offset 0) and "abc" (source offset 6);
        // local offset 1 in the second passage lands at 5 + 1 + 1 = 7.
        let xml = r#"<collection><document><id>2</id>
<passage><offset>0</offset><text>Hello</text></passage>
<passage><offset>6</offset><text>abc</text>
<annotation id="T1"><infon key="type">X</infon><location offset="7" length="1"/><text>b</text></annotation>
</passage></document></collection>"#;
        let docs = parse_bioc_xml(xml, &cfg()).unwrap();
        assert_eq!(docs[0].text, "Hello\nabc");
        assert_eq!(docs[0].entities[0].start, 7);
        assert_eq!(docs[0].entities[0].end, 8);
    }

    #[test]
    fn dangling_relation() {
        let xml = r#"<collection><document><id>3</id><passage><offset>0</offset><text>ab</text>
<annotation id="T1"><infon key="type">X</infon><location offset="0" length="1"/><text>a</text></annotation></passage>
<relation id="R9"><infon key="relation">CID</infon><node refid="T1" role="a"/><node refid="T7" role="b"/></relation>
</document></collection>"#;
        let err = parse_bioc_xml(xml, &cfg()).unwrap_err();
        assert!(matches!(err, Error::DanglingRef(id) if id == "R9"));
    }

    #[test]
    fn broken_xml() {
        let err = parse_bioc_xml("<collection><document><id>1</passage>", &cfg()).unwrap_err();
        assert!(matches!(err, Error::XmlSyntax { .. }));
        let err = parse_bioc_xml("<collection><document>", &cfg()).unwrap_err();
        assert!(matches!(err, Error::XmlSyntax { .. }));
    }

    #[test]
    fn relations_and_escapes_round_trip() {
        let mut doc = UnifiedDocument::new("d<1>", "ds", crate::schema::Language::En, "A & B\ncause C");
        doc.entities.push(EntityMention::new("A", "Chemical", 0, 1));
        doc.entities.push(EntityMention::new("C", "Disease", 12, 13));
        doc.relations.push(RelationTriple::new("A", "C", "CID"));
        let back = parse_bioc_xml(&write_bioc_xml(std::slice::from_ref(&doc)), &cfg()).unwrap();
        assert_eq!(back, vec![doc]);
    }
}
