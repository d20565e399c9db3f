//! A small, tolerant HTML reader.
//!
//! Only the structural subset matters here: `h1`-`h6`, `p`, `ul`/`ol`/`li`
//! and `title`. Every other element is transparent, apart from a handful of
//! container tags that end an implicit (untagged) paragraph. Text is decoded,
//! whitespace-normalized and grouped into [`Block`]s, each identified by the
//! element path it came from plus a segment number, so that a span can be
//! located again in the markup.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Token {
    Start { name: String, self_closing: bool },
    End { name: String },
    Text(String),
}

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

const SKIPPED_ELEMENTS: &[&str] = &["script", "style", "noscript", "template", "head"];

/// Containers that terminate an implicit paragraph without adding structure.
const BOUNDARY_ELEMENTS: &[&str] = &[
    "div", "section", "article", "main", "header", "footer", "nav", "aside", "table", "tr", "td",
    "th", "thead", "tbody", "blockquote", "form", "dl", "dt", "dd", "figure", "figcaption", "body",
    "html", "pre", "address", "fieldset",
];

fn is_heading(name: &str) -> Option<u8> {
    match name {
        "h1" => Some(1),
        "h2" => Some(2),
        "h3" => Some(3),
        "h4" => Some(4),
        "h5" => Some(5),
        "h6" => Some(6),
        _ => None,
    }
}

fn is_list(name: &str) -> bool {
    name == "ul" || name == "ol"
}

pub(crate) fn tokenize(raw: &str) -> Vec<Token> {
    let bytes = raw.as_bytes();
    let mut tokens = Vec::new();
    let mut text_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &raw[i..];
        let next = bytes.get(i + 1).copied().unwrap_or(b' ');
        let is_markup = next.is_ascii_alphabetic() || next == b'/' || next == b'!' || next == b'?';
        if !is_markup {
            i += 1;
            continue;
        }
        if text_start < i {
            tokens.push(Token::Text(decode_entities(&raw[text_start..i])));
        }
        if let Some(body) = rest.strip_prefix("<!--") {
            i = match body.find("-->") {
                Some(off) => i + 4 + off + 3,
                None => bytes.len(),
            };
            text_start = i;
            continue;
        }
        if next == b'!' || next == b'?' {
            i = match rest.find('>') {
                Some(off) => i + off + 1,
                None => bytes.len(),
            };
            text_start = i;
            continue;
        }
        let tag_end = find_tag_end(bytes, i + 1);
        let inner = &raw[i + 1..tag_end.min(bytes.len())];
        i = (tag_end + 1).min(bytes.len());
        text_start = i;

        let (closing, body) = match inner.strip_prefix('/') {
            Some(b) => (true, b),
            None => (false, inner),
        };
        let name: String = body
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        if name.is_empty() {
            continue;
        }
        if closing {
            tokens.push(Token::End { name });
            continue;
        }
        let self_closing = body.trim_end().ends_with('/');
        let skip = SKIPPED_ELEMENTS.contains(&name.as_str()) && name != "head";
        tokens.push(Token::Start { name: name.clone(), self_closing });
        if skip && !self_closing {
            // raw-text element: swallow everything up to the matching close tag
            let close = format!("</{name}");
            let lower = raw[i..].to_ascii_lowercase();
            let end = lower.find(&close).map(|off| i + off).unwrap_or(bytes.len());
            i = end;
            text_start = i;
        }
    }
    if text_start < bytes.len() {
        tokens.push(Token::Text(decode_entities(&raw[text_start..])));
    }
    tokens
}

/// Position of the `>` closing a tag that starts at `from`, honoring quotes.
fn find_tag_end(bytes: &[u8], from: usize) -> usize {
    let mut quote: Option<u8> = None;
    let mut j = from;
    while j < bytes.len() {
        let b = bytes[j];
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'>' => return j,
            None => {}
        }
        j += 1;
    }
    bytes.len()
}

pub(crate) fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let semi = rest[1..].find(';').map(|p| p + 1).filter(|&p| p <= 10);
        let decoded = semi.and_then(|p| {
            let entity = &rest[1..p];
            let c = match entity {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                "rsquo" | "lsquo" => Some('\''),
                "ldquo" | "rdquo" => Some('"'),
                "ndash" => Some('-'),
                "mdash" => Some('-'),
                "hellip" => Some('…'),
                "copy" => Some('©'),
                _ => {
                    let num = entity.strip_prefix('#')?;
                    let code = match num.strip_prefix(['x', 'X']) {
                        Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                        None => num.parse().ok()?,
                    };
                    char::from_u32(code)
                }
            }?;
            Some((c, p + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Collapse every whitespace run into one ASCII space and trim.
pub(crate) fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum BlockKind {
    Heading(u8),
    Prose,
    ListItem,
}

#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub kind: BlockKind,
    pub path: String,
    pub segment: usize,
    pub text: String,
    /// Identifier of the enclosing `ul`/`ol`, for list items.
    pub list_id: Option<usize>,
    /// Index (into the block list) of the block that introduces the list.
    pub list_intro: Option<usize>,
}

#[derive(Debug, Default)]
pub(crate) struct Extraction {
    pub blocks: Vec<Block>,
    pub title: Option<String>,
    pub warnings: Vec<String>,
}

struct OpenElement {
    name: String,
    path: String,
    child_counts: HashMap<String, usize>,
}

struct OpenList {
    id: usize,
    intro: Option<usize>,
}

struct Extractor {
    stack: Vec<OpenElement>,
    root_counts: HashMap<String, usize>,
    segments: HashMap<String, usize>,
    buffer: String,
    lists: Vec<OpenList>,
    next_list_id: usize,
    in_title: bool,
    title: String,
    out: Extraction,
}

impl Extractor {
    fn new() -> Self {
        Extractor {
            stack: Vec::new(),
            root_counts: HashMap::new(),
            segments: HashMap::new(),
            buffer: String::new(),
            lists: Vec::new(),
            next_list_id: 0,
            in_title: false,
            title: String::new(),
            out: Extraction::default(),
        }
    }

    fn open(&mut self, name: &str) {
        let counts = match self.stack.last_mut() {
            Some(parent) => &mut parent.child_counts,
            None => &mut self.root_counts,
        };
        let n = counts.entry(name.to_string()).or_insert(0);
        *n += 1;
        let index = *n;
        let parent_path = self.stack.last().map(|e| e.path.as_str()).unwrap_or("");
        let path = format!("{parent_path}/{name}[{index}]");
        self.stack.push(OpenElement { name: name.to_string(), path, child_counts: HashMap::new() });
    }

    /// Innermost open structural block, if any.
    fn current_block(&self) -> Option<(usize, BlockKind)> {
        for (idx, el) in self.stack.iter().enumerate().rev() {
            if let Some(level) = is_heading(&el.name) {
                return Some((idx, BlockKind::Heading(level)));
            }
            match el.name.as_str() {
                "p" => {
                    let in_li = self.stack[..idx].iter().any(|e| e.name == "li");
                    let kind = if in_li { BlockKind::ListItem } else { BlockKind::Prose };
                    return Some((idx, kind));
                }
                "li" => return Some((idx, BlockKind::ListItem)),
                _ => {}
            }
        }
        None
    }

    fn flush(&mut self) {
        let text = normalize_whitespace(&self.buffer);
        self.buffer.clear();
        if text.is_empty() {
            return;
        }
        let (path, kind) = match self.current_block() {
            Some((idx, kind)) => (self.stack[idx].path.clone(), kind),
            None => {
                let path = self.stack.last().map(|e| e.path.clone()).unwrap_or_else(|| "/".into());
                (path, BlockKind::Prose)
            }
        };
        let segment = {
            let n = self.segments.entry(path.clone()).or_insert(0);
            let s = *n;
            *n += 1;
            s
        };
        let (list_id, list_intro) = if kind == BlockKind::ListItem {
            match self.lists.last() {
                Some(l) => (Some(l.id), l.intro),
                None => (None, None),
            }
        } else {
            (None, None)
        };
        self.out.blocks.push(Block { kind, path, segment, text, list_id, list_intro });
    }

    fn close_to(&mut self, idx: usize, implicit: bool) {
        while self.stack.len() > idx {
            let el = self.stack.pop().expect("stack non-empty");
            let closable = matches!(el.name.as_str(), "p" | "li" | "html" | "body")
                || is_heading(&el.name).is_some();
            if !implicit && self.stack.len() > idx && !closable {
                self.out.warnings.push(format!("unclosed <{}> at {}", el.name, el.path));
            }
            self.on_closed(&el.name);
        }
    }

    fn on_closed(&mut self, name: &str) {
        if is_list(name) {
            self.lists.pop();
        }
    }

    fn start(&mut self, name: &str, self_closing: bool) {
        if name == "title" {
            if !self_closing {
                self.in_title = true;
            }
            return;
        }
        if name == "br" {
            self.buffer.push(' ');
            return;
        }
        let heading = is_heading(name).is_some();
        let structural = heading || name == "p" || name == "li" || is_list(name);
        if structural || BOUNDARY_ELEMENTS.contains(&name) {
            self.flush();
        }
        // implicit end tags
        if heading || name == "p" || name == "li" || is_list(name) {
            if let Some(idx) = self.stack.iter().rposition(|e| e.name == "p") {
                if !self.stack[idx..].iter().any(|e| e.name == "li" || is_list(&e.name)) {
                    self.close_to(idx, true);
                }
            }
        }
        if heading {
            if let Some(idx) = self.stack.iter().rposition(|e| is_heading(&e.name).is_some()) {
                self.close_to(idx, true);
            }
        }
        if name == "li" {
            let li = self.stack.iter().rposition(|e| e.name == "li");
            let list = self.stack.iter().rposition(|e| is_list(&e.name));
            if let Some(li_idx) = li {
                if list.is_none_or(|l| l < li_idx) {
                    self.close_to(li_idx, true);
                }
            }
        }
        if is_list(name) {
            let intro = self.list_intro_candidate();
            self.lists.push(OpenList { id: self.next_list_id, intro });
            self.next_list_id += 1;
        }
        if VOID_ELEMENTS.contains(&name) || self_closing {
            return;
        }
        self.open(name);
    }

    /// The block right before a list introduces it when it is prose, or when
    /// it is the text of the list item that contains a nested list.
    fn list_intro_candidate(&self) -> Option<usize> {
        let last = self.out.blocks.len().checked_sub(1)?;
        let block = &self.out.blocks[last];
        match block.kind {
            BlockKind::Prose => Some(last),
            BlockKind::ListItem => {
                let li = self.stack.iter().rposition(|e| e.name == "li")?;
                (self.stack[li].path == block.path).then_some(last)
            }
            BlockKind::Heading(_) => None,
        }
    }

    fn end(&mut self, name: &str) {
        if name == "title" {
            self.in_title = false;
            return;
        }
        if VOID_ELEMENTS.contains(&name) {
            return;
        }
        let heading = is_heading(name).is_some();
        let structural = heading || name == "p" || name == "li" || is_list(name);
        if structural || BOUNDARY_ELEMENTS.contains(&name) {
            self.flush();
        }
        match self.stack.iter().rposition(|e| e.name == name) {
            Some(idx) => self.close_to(idx, false),
            None => self.out.warnings.push(format!("stray </{name}>")),
        }
    }

    fn text(&mut self, s: &str) {
        if self.in_title {
            self.title.push_str(s);
        } else if !self.stack.iter().any(|e| SKIPPED_ELEMENTS.contains(&e.name.as_str())) {
            self.buffer.push_str(s);
        }
    }

    fn finish(mut self) -> Extraction {
        self.flush();
        for el in self.stack.iter().rev() {
            let closable = matches!(el.name.as_str(), "p" | "li" | "html" | "body")
                || is_heading(&el.name).is_some();
            if !closable {
                self.out.warnings.push(format!("unclosed <{}> at {}", el.name, el.path));
            }
        }
        let title = normalize_whitespace(&self.title);
        if !title.is_empty() {
            self.out.title = Some(title);
        }
        self.out
    }
}

/// Walk the markup and collect its text blocks in document order.
pub(crate) fn extract_blocks(raw: &str) -> Extraction {
    let mut ex = Extractor::new();
    for token in tokenize(raw) {
        match token {
            Token::Start { name, self_closing } => ex.start(&name, self_closing),
            Token::End { name } => ex.end(&name),
            Token::Text(t) => ex.text(&t),
        }
    }
    ex.finish()
}
