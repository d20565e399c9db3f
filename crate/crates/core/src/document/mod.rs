//! Documents: parsing markup into sections, paragraphs and grounding spans.

mod html;
pub mod segment;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use self::html::{BlockKind, Extraction};
use self::segment::{split_clauses, split_sentences};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IngestError {
    #[error("document {0}: no content")]
    NoContent(String),
    #[error("document {doc_id}: no element at {path} segment {segment}")]
    UnresolvedAnchor { doc_id: String, path: String, segment: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub doc_id: String,
    pub domain: String,
    pub title: String,
    pub url: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParagraphKind {
    Prose,
    ListItem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanTag {
    Title,
    ListItem,
    Clause,
    Sentence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub sec_id: String,
    /// Absent for the implicit section holding content before the first header.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_span: Option<String>,
    pub level: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_sec: Option<String>,
    pub start: usize,
    pub end: usize,
    /// Where the section title sits in `text`; needed before spans exist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_range: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_anchor: Option<HtmlAnchor>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub p_id: String,
    pub kind: ParagraphKind,
    pub parent_sec: String,
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_id: Option<usize>,
    /// Paragraph that introduces the list this item belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_intro: Option<String>,
    pub html_anchor: HtmlAnchor,
}

/// Location of a string inside the markup: the element path, which text
/// segment of that element, and char offsets within the segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HtmlAnchor {
    pub path: String,
    pub segment: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub id_sp: String,
    pub start: usize,
    pub end: usize,
    pub tag: SpanTag,
    /// Paragraph id, or section id for title spans.
    pub parent_p: String,
    pub sentence_id: usize,
    pub html_anchor: HtmlAnchor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connective: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub domain: String,
    pub title: String,
    pub url: String,
    pub text: String,
    pub html: String,
    pub spans: Vec<Span>,
    pub sections: Vec<Section>,
    pub paragraphs: Vec<Paragraph>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Char-indexed substring. Out-of-range ends are clamped.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let mut indices = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let b0 = indices.by_ref().nth(start).unwrap_or(s.len());
    let b1 = if end > start { indices.nth(end - start - 1).unwrap_or(s.len()) } else { b0 };
    &s[b0..b1]
}

impl Document {
    pub fn slice(&self, start: usize, end: usize) -> &str {
        char_slice(&self.text, start, end)
    }

    pub fn span(&self, id: &str) -> Option<&Span> {
        self.spans.iter().find(|s| s.id_sp == id)
    }

    pub fn span_text(&self, span: &Span) -> &str {
        self.slice(span.start, span.end)
    }

    pub fn paragraph(&self, id: &str) -> Option<&Paragraph> {
        self.paragraphs.iter().find(|p| p.p_id == id)
    }

    pub fn section(&self, id: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.sec_id == id)
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Parse markup into a document with sections and paragraphs. Spans are
/// left empty; see [`segment_spans`].
pub fn parse_document(raw_html: &str, meta: DocMeta) -> Result<Document, IngestError> {
    let Extraction { blocks, title, warnings } = html::extract_blocks(raw_html);
    if blocks.is_empty() {
        return Err(IngestError::NoContent(meta.doc_id));
    }

    let mut text = String::new();
    let mut offset = 0usize;
    let mut ranges = Vec::with_capacity(blocks.len());
    for (i, block) in blocks.iter().enumerate() {
        if i > 0 {
            text.push('\n');
            offset += 1;
        }
        let len = block.text.chars().count();
        text.push_str(&block.text);
        ranges.push((offset, offset + len));
        offset += len;
    }
    let total = offset;

    let mut sections: Vec<Section> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut paragraphs: Vec<Paragraph> = Vec::new();
    let mut block_para: Vec<Option<usize>> = vec![None; blocks.len()];

    for (i, block) in blocks.iter().enumerate() {
        let (start, end) = ranges[i];
        let anchor = HtmlAnchor {
            path: block.path.clone(),
            segment: block.segment,
            start: 0,
            end: end - start,
        };
        match block.kind {
            BlockKind::Heading(level) => {
                while open
                    .last()
                    .is_some_and(|&s| sections[s].level >= level || sections[s].title_range.is_none())
                {
                    open.pop();
                }
                let parent = open.last().map(|&s| sections[s].sec_id.clone());
                sections.push(Section {
                    sec_id: format!("sec{}", sections.len() + 1),
                    title_span: None,
                    level,
                    parent_sec: parent,
                    start,
                    end: total,
                    title_range: Some((start, end)),
                    title_anchor: Some(anchor),
                });
                open.push(sections.len() - 1);
            }
            BlockKind::Prose | BlockKind::ListItem => {
                let parent = match open.last() {
                    Some(&s) => s,
                    None => {
                        sections.push(Section {
                            sec_id: format!("sec{}", sections.len() + 1),
                            title_span: None,
                            level: 1,
                            parent_sec: None,
                            start: 0,
                            end: total,
                            title_range: None,
                            title_anchor: None,
                        });
                        open.push(sections.len() - 1);
                        sections.len() - 1
                    }
                };
                let kind = if block.kind == BlockKind::ListItem {
                    ParagraphKind::ListItem
                } else {
                    ParagraphKind::Prose
                };
                let list_intro = block
                    .list_intro
                    .and_then(|b| block_para[b])
                    .map(|p| format!("p{}", p + 1));
                block_para[i] = Some(paragraphs.len());
                paragraphs.push(Paragraph {
                    p_id: format!("p{}", paragraphs.len() + 1),
                    kind,
                    parent_sec: sections[parent].sec_id.clone(),
                    start,
                    end,
                    list_id: block.list_id,
                    list_intro,
                    html_anchor: anchor,
                });
            }
        }
    }

    // A section runs until the next section at the same or a shallower level.
    // The implicit section only ever precedes the first header.
    for i in 0..sections.len() {
        let level = sections[i].level;
        let implicit = sections[i].title_range.is_none();
        let next = sections[i + 1..]
            .iter()
            .find(|s| implicit || s.level <= level)
            .map(|s| s.start);
        if let Some(end) = next {
            // keep the separating newline out of the section
            sections[i].end = end.saturating_sub(1).max(sections[i].start);
        }
    }

    let title = if meta.title.is_empty() {
        title
            .or_else(|| {
                sections
                    .iter()
                    .find_map(|s| s.title_range.map(|(a, b)| char_slice(&text, a, b).to_string()))
            })
            .unwrap_or_default()
    } else {
        meta.title
    };

    Ok(Document {
        doc_id: meta.doc_id,
        domain: meta.domain,
        title,
        url: meta.url,
        text,
        html: raw_html.to_string(),
        spans: Vec::new(),
        sections,
        paragraphs,
        warnings,
    })
}

/// Wrap plain text in minimal markup: blank lines separate paragraphs,
/// `#` lines are headers and `-`/`*` lines are list items.
pub fn plain_text_to_html(raw: &str) -> String {
    fn escape(s: &str) -> String {
        s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
    }
    let mut out = String::new();
    let mut para: Vec<&str> = Vec::new();
    let mut in_list = false;
    let flush = |para: &mut Vec<&str>, out: &mut String| {
        if !para.is_empty() {
            out.push_str(&format!("<p>{}</p>\n", escape(&para.join(" "))));
            para.clear();
        }
    };
    for line in raw.lines() {
        let t = line.trim();
        let item = t.strip_prefix("- ").or_else(|| t.strip_prefix("* "));
        if item.is_none() && in_list {
            out.push_str("</ul>\n");
            in_list = false;
        }
        if t.is_empty() {
            flush(&mut para, &mut out);
        } else if let Some(rest) = t.strip_prefix('#') {
            flush(&mut para, &mut out);
            let level = 1 + rest.chars().take_while(|&c| c == '#').count().min(5);
            let title = rest.trim_start_matches('#').trim();
            out.push_str(&format!("<h{level}>{}</h{level}>\n", escape(title)));
        } else if let Some(item) = item {
            flush(&mut para, &mut out);
            if !in_list {
                out.push_str("<ul>\n");
                in_list = true;
            }
            out.push_str(&format!("<li>{}</li>\n", escape(item)));
        } else {
            para.push(t);
        }
    }
    flush(&mut para, &mut out);
    if in_list {
        out.push_str("</ul>\n");
    }
    out
}

pub fn parse_plain_text(raw: &str, meta: DocMeta) -> Result<Document, IngestError> {
    parse_document(&plain_text_to_html(raw), meta)
}

/// Populate `doc.spans`: one title span per section header, and sentence or
/// clause spans for every paragraph.
pub fn segment_spans(mut doc: Document) -> Document {
    struct Pending {
        start: usize,
        end: usize,
        tag: SpanTag,
        parent: String,
        sentence_id: usize,
        anchor: HtmlAnchor,
        connective: Option<String>,
        section: Option<usize>,
    }
    let mut pending: Vec<Pending> = Vec::new();
    let mut sentence_id = 0usize;

    for (si, sec) in doc.sections.iter().enumerate() {
        if let (Some((a, b)), Some(anchor)) = (sec.title_range, sec.title_anchor.clone()) {
            pending.push(Pending {
                start: a,
                end: b,
                tag: SpanTag::Title,
                parent: sec.sec_id.clone(),
                sentence_id: 0,
                anchor,
                connective: None,
                section: Some(si),
            });
        }
    }
    for p in &doc.paragraphs {
        let ptext = char_slice(&doc.text, p.start, p.end);
        let pchars: Vec<char> = ptext.chars().collect();
        for (s0, s1) in split_sentences(ptext) {
            let sentence: String = pchars[s0..s1].iter().collect();
            let clauses = split_clauses(&sentence);
            let tag = match (clauses.len() > 1, p.kind) {
                (true, _) => SpanTag::Clause,
                (false, ParagraphKind::ListItem) => SpanTag::ListItem,
                (false, ParagraphKind::Prose) => SpanTag::Sentence,
            };
            for c in clauses {
                let local_start = s0 + c.start;
                let local_end = s0 + c.end;
                pending.push(Pending {
                    start: p.start + local_start,
                    end: p.start + local_end,
                    tag,
                    parent: p.p_id.clone(),
                    sentence_id: 0,
                    anchor: HtmlAnchor {
                        path: p.html_anchor.path.clone(),
                        segment: p.html_anchor.segment,
                        start: p.html_anchor.start + local_start,
                        end: p.html_anchor.start + local_end,
                    },
                    connective: c.connective,
                    section: None,
                });
            }
            // sentence ids are assigned below, after ordering
            if let Some(last) = pending.last_mut() {
                last.sentence_id = usize::MAX;
            }
        }
    }
    pending.sort_by_key(|p| p.start);

    // Consecutive clause spans of one sentence share an id; the marker on the
    // last clause of each sentence closes it.
    let mut spans = Vec::with_capacity(pending.len());
    for (i, p) in pending.into_iter().enumerate() {
        let id = (i + 1).to_string();
        if let Some(si) = p.section {
            doc.sections[si].title_span = Some(id.clone());
        }
        let closes = p.sentence_id == usize::MAX || p.tag == SpanTag::Title;
        spans.push(Span {
            id_sp: id,
            start: p.start,
            end: p.end,
            tag: p.tag,
            parent_p: p.parent,
            sentence_id,
            html_anchor: p.anchor,
            connective: p.connective,
        });
        if closes {
            sentence_id += 1;
        }
    }
    doc.spans = spans;
    doc
}

/// Parse and segment in one go.
pub fn ingest_html(raw_html: &str, meta: DocMeta) -> Result<Document, IngestError> {
    parse_document(raw_html, meta).map(segment_spans)
}

/// Resolve an anchor against raw markup, returning the string it denotes.
pub fn resolve_anchor(raw_html: &str, anchor: &HtmlAnchor) -> Option<String> {
    let ex = html::extract_blocks(raw_html);
    let block = ex
        .blocks
        .iter()
        .find(|b| b.path == anchor.path && b.segment == anchor.segment)?;
    Some(char_slice(&block.text, anchor.start, anchor.end).to_string())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocStats {
    pub tk: usize,
    pub sp: usize,
    pub p: usize,
    pub sec: usize,
}

/// Content-element counts: whitespace tokens, spans, paragraphs, sections.
pub fn doc_stats(doc: &Document) -> DocStats {
    DocStats {
        tk: doc.text.split_whitespace().count(),
        sp: doc.spans.len(),
        p: doc.paragraphs.len(),
        sec: doc.sections.len(),
    }
}
