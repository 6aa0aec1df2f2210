//! Token-per-line BIO files. The token is the first column and the tag the
//! last, so multi-column CoNLL variants read the same way.

use crate::error::{Error, Result};
use crate::schema::{EntityMention, UnifiedDocument};

use super::{ConllBoundary, IngestConfig, ParsedStream};

const DOCSTART: &str = "-DOCSTART-";

enum Tag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

fn parse_tag(tag: &str) -> Option<Tag<'_>> {
    match tag {
        "O" => Some(Tag::Outside),
        _ => match tag.split_once('-') {
            Some(("B", x)) if !x.is_empty() => Some(Tag::Begin(x)),
            Some(("I", x)) if !x.is_empty() => Some(Tag::Inside(x)),
            _ => None,
        },
    }
}

struct Builder<'c> {
    cfg: &'c IngestConfig,
    id: String,
    text: String,
    chars: usize,
    sentence_open: bool,
    entities: Vec<EntityMention>,
    open: Option<(String, usize, String)>,
    error: Option<Error>,
}

impl<'c> Builder<'c> {
    fn new(cfg: &'c IngestConfig, id: String) -> Self {
        Builder {
            cfg,
            id,
            text: String::new(),
            chars: 0,
            sentence_open: false,
            entities: Vec::new(),
            open: None,
            error: None,
        }
    }

    fn is_empty(&self) -> bool {
        self.text.is_empty() && self.error.is_none()
    }

    fn close_entity(&mut self) {
        if let Some((etype, start, surface)) = self.open.take() {
            let end = start + surface.chars().count();
            self.entities
                .push(EntityMention::new(surface, self.cfg.map_type(&etype), start, end));
        }
    }

    fn end_sentence(&mut self) {
        self.close_entity();
        self.sentence_open = false;
    }

    fn push(&mut self, token: &str, tag: Tag<'_>, line_no: usize, warnings: &mut Vec<String>) {
        if !self.text.is_empty() {
            self.text.push(if self.sentence_open { ' ' } else { '\n' });
            self.chars += 1;
        }
        self.sentence_open = true;
        let start = self.chars;
        self.text.push_str(token);
        self.chars += token.chars().count();

        match tag {
            Tag::Outside => self.close_entity(),
            Tag::Begin(x) => {
                self.close_entity();
                self.open = Some((x.to_string(), start, token.to_string()));
            }
            Tag::Inside(x) => match &mut self.open {
                Some((etype, _, surface)) if etype == x => {
                    surface.push(' ');
                    surface.push_str(token);
                }
                _ => {
                    warnings.push(format!(
                        "line {line_no}: I-{x} without a preceding B-{x}, read as B-{x}"
                    ));
                    self.close_entity();
                    self.open = Some((x.to_string(), start, token.to_string()));
                }
            },
        }
    }

    fn finish(mut self) -> Result<UnifiedDocument> {
        self.close_entity();
        if let Some(e) = self.error {
            return Err(e);
        }
        let mut doc = UnifiedDocument::new(self.id, &self.cfg.dataset_id, self.cfg.language, self.text);
        doc.entities = self.entities;
        Ok(doc)
    }
}

pub fn read_conll(stream: &str, cfg: &IngestConfig) -> ParsedStream {
    let boundary = cfg.conll_boundary.unwrap_or_else(|| {
        if stream.lines().any(|l| l.trim_start().starts_with(DOCSTART)) {
            ConllBoundary::DocStart
        } else {
            ConllBoundary::BlankLine
        }
    });

    let mut out = ParsedStream::default();
    let mut count = 0usize;
    let mut next_id = |explicit: Option<&str>| {
        count += 1;
        match explicit {
            Some(id) if !id.is_empty() => id.to_string(),
            _ => count.to_string(),
        }
    };
    let mut cur: Option<Builder<'_>> = None;

    for (i, line) in stream.lines().enumerate() {
        let no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        let trimmed = line.trim();

        if let Some(rest) = trimmed.strip_prefix(DOCSTART) {
            if let Some(b) = cur.take().filter(|b| !b.is_empty()) {
                out.docs.push(b.finish());
            }
            let explicit = rest.split('\t').next().map(str::trim);
            cur = Some(Builder::new(cfg, next_id(explicit)));
            continue;
        }
        if trimmed.is_empty() {
            match boundary {
                ConllBoundary::BlankLine => {
                    if let Some(b) = cur.take().filter(|b| !b.is_empty()) {
                        out.docs.push(b.finish());
                    }
                }
                ConllBoundary::DocStart => {
                    if let Some(b) = cur.as_mut() {
                        b.end_sentence();
                    }
                }
            }
            continue;
        }

        let b = cur.get_or_insert_with(|| Builder::new(cfg, next_id(None)));
        if b.error.is_some() {
            continue;
        }
        let mut cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 2 {
            cols = line.split_whitespace().collect();
        }
        if cols.len() < 2 {
            b.error = Some(Error::MalformedLine(no));
            continue;
        }
        let token = cols[0].trim();
        if token.is_empty() {
            b.error = Some(Error::EmptyToken(no));
            continue;
        }
        match parse_tag(cols[cols.len() - 1].trim()) {
            Some(tag) => b.push(token, tag, no, &mut out.warnings),
            None => b.error = Some(Error::IllegalTag(no)),
        }
    }
    if let Some(b) = cur.filter(|b| !b.is_empty()) {
        out.docs.push(b.finish());
    }
    out
}

/// Token-joined text with contiguous B/I runs as entities.
pub fn parse_conll(stream: &str, cfg: &IngestConfig) -> Result<Vec<UnifiedDocument>> {
    read_conll(stream, cfg).into_strict()
}

/// Writes documents with `-DOCSTART- <doc_id>` headers. Tokens are the
/// space-separated pieces of each line of `text`; entities must cover whole
/// tokens.
pub fn write_conll(docs: &[UnifiedDocument]) -> String {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&format!("{DOCSTART} {}\n", doc.doc_id));
        let mut offset = 0usize;
        for (si, sentence) in doc.text.split('\n').enumerate() {
            if si > 0 {
                out.push('\n');
            }
            for token in sentence.split(' ') {
                let start = offset;
                let end = start + token.chars().count();
                offset = end + 1;
                let tag = doc
                    .entities
                    .iter()
                    .find(|e| e.start <= start && end <= e.end)
                    .map(|e| {
                        if e.start == start {
                            format!("B-{}", e.etype)
                        } else {
                            format!("I-{}", e.etype)
                        }
                    })
                    .unwrap_or_else(|| "O".to_string());
                out.push_str(&format!("{token}\t{tag}\n"));
            }
        }
        out.push('\n');
    }
    out
}
