//! Line-oriented N-Triples reader and writer.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, Write};

use super::{Node, NodeId, NodeKind, RelationId, Triple, TripleGraph};

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: input is not valid UTF-8")]
    Encoding { line: usize },
    #[error("read error: {0}")]
    Io(#[from] io::Error),
}

impl ParseError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Encoding { line } => Some(*line),
            ParseError::Io(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Literals with the same term text share one node.
    pub merge_literals: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            merge_literals: true,
        }
    }
}

pub fn parse_ntriples_str(text: &str) -> Result<TripleGraph, ParseError> {
    parse_ntriples(text.as_bytes(), ParseOptions::default())
}

/// Reads an N-Triples stream into a [`TripleGraph`].
///
/// Node and relation vocabularies are assigned in order of first
/// occurrence. Exact duplicate statements are kept once.
pub fn parse_ntriples<R: BufRead>(
    mut reader: R,
    options: ParseOptions,
) -> Result<TripleGraph, ParseError> {
    let mut builder = Builder::new(options);
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&buf).map_err(|_| ParseError::Encoding { line: line_no })?;
        let line = line.trim_end_matches(['\n', '\r']);
        let statement = parse_line(line).map_err(|message| ParseError::Syntax {
            line: line_no,
            message,
        })?;
        if let Some((s, p, o)) = statement {
            builder.push(s, p, o);
        }
    }
    Ok(builder.finish())
}

/// Writes every edge as one statement, terms emitted exactly as parsed.
pub fn write_ntriples<W: Write>(graph: &TripleGraph, mut out: W) -> io::Result<()> {
    for e in graph.edges() {
        writeln!(
            out,
            "{} <{}> {} .",
            graph.node(e.source).label,
            graph.relations()[e.predicate],
            graph.node(e.target).label
        )?;
    }
    out.flush()
}

struct Builder {
    options: ParseOptions,
    nodes: Vec<Node>,
    node_index: HashMap<String, NodeId>,
    relations: Vec<String>,
    relation_index: HashMap<String, RelationId>,
    edges: Vec<Triple>,
    seen: HashSet<Triple>,
}

impl Builder {
    fn new(options: ParseOptions) -> Self {
        Builder {
            options,
            nodes: Vec::new(),
            node_index: HashMap::new(),
            relations: Vec::new(),
            relation_index: HashMap::new(),
            edges: Vec::new(),
            seen: HashSet::new(),
        }
    }

    fn node(&mut self, term: Term<'_>) -> NodeId {
        let (text, kind) = match term {
            Term::Iri(t) | Term::Blank(t) => (t, NodeKind::Resource),
            Term::Literal(t) => (t, NodeKind::Literal),
        };
        if kind == NodeKind::Literal && !self.options.merge_literals {
            self.nodes.push(Node {
                label: text.to_string(),
                kind,
            });
            return self.nodes.len() - 1;
        }
        if let Some(&id) = self.node_index.get(text) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            label: text.to_string(),
            kind,
        });
        self.node_index.insert(text.to_string(), id);
        id
    }

    fn push(&mut self, s: Term<'_>, p: &str, o: Term<'_>) {
        let source = self.node(s);
        let predicate = match self.relation_index.get(p) {
            Some(&id) => id,
            None => {
                let id = self.relations.len();
                self.relations.push(p.to_string());
                self.relation_index.insert(p.to_string(), id);
                id
            }
        };
        let target = self.node(o);
        let triple = Triple::new(source, predicate, target);
        if self.seen.insert(triple) {
            self.edges.push(triple);
        }
    }

    fn finish(self) -> TripleGraph {
        TripleGraph::from_parts_unchecked(self.nodes, self.relations, self.edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Term<'a> {
    /// Full `<...>` text.
    Iri(&'a str),
    Blank(&'a str),
    /// Full literal text including quotes and suffix.
    Literal(&'a str),
}

type Statement<'a> = (Term<'a>, &'a str, Term<'a>);

fn parse_line(line: &str) -> Result<Option<Statement<'_>>, String> {
    let mut cur = Cursor { s: line, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some(b'#') {
        return Ok(None);
    }
    let subject = match cur.peek() {
        Some(b'<') => Term::Iri(cur.iri()?),
        Some(b'_') => Term::Blank(cur.blank()?),
        _ => {
            return Err(format!(
                "expected subject IRI or blank node at column {}",
                cur.pos + 1
            ))
        }
    };
    cur.require_ws("subject")?;
    let predicate = match cur.peek() {
        Some(b'<') => cur.iri()?,
        _ => return Err(format!("expected predicate IRI at column {}", cur.pos + 1)),
    };
    cur.require_ws("predicate")?;
    let object = match cur.peek() {
        Some(b'<') => Term::Iri(cur.iri()?),
        Some(b'_') => Term::Blank(cur.blank()?),
        Some(b'"') => Term::Literal(cur.literal()?),
        _ => return Err(format!("expected object term at column {}", cur.pos + 1)),
    };
    cur.skip_ws();
    if cur.peek() != Some(b'.') {
        return Err(format!("expected '.' at column {}", cur.pos + 1));
    }
    cur.pos += 1;
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some(b'#') {
        return Err(format!("trailing content at column {}", cur.pos + 1));
    }
    // the relation vocabulary stores the bare IRI
    Ok(Some((subject, &predicate[1..predicate.len() - 1], object)))
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn bytes(&self) -> &'a [u8] {
        self.s.as_bytes()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
    }

    fn require_ws(&mut self, after: &str) -> Result<(), String> {
        let start = self.pos;
        self.skip_ws();
        if self.pos == start {
            return Err(format!(
                "expected whitespace after {after} at column {}",
                self.pos + 1
            ));
        }
        Ok(())
    }

    fn hex_escape(&mut self, digits: usize) -> Result<(), String> {
        let b = self.bytes();
        if self.pos + digits > b.len() {
            return Err("truncated unicode escape".into());
        }
        let hex = &self.s[self.pos..self.pos + digits];
        let code =
            u32::from_str_radix(hex, 16).map_err(|_| format!("bad unicode escape \\{hex}"))?;
        if !hex.bytes().all(|c| c.is_ascii_hexdigit()) || char::from_u32(code).is_none() {
            return Err(format!("bad unicode escape \\{hex}"));
        }
        self.pos += digits;
        Ok(())
    }

    fn iri(&mut self) -> Result<&'a str, String> {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek() {
                None => return Err("unterminated IRI".into()),
                Some(b'>') => {
                    self.pos += 1;
                    return Ok(&self.s[start..self.pos]);
                }
                Some(b'\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(b'u') => {
                            self.pos += 1;
                            self.hex_escape(4)?
                        }
                        Some(b'U') => {
                            self.pos += 1;
                            self.hex_escape(8)?
                        }
                        _ => return Err("invalid escape in IRI".into()),
                    }
                }
                Some(c)
                    if c <= b' ' || matches!(c, b'<' | b'"' | b'{' | b'}' | b'|' | b'^' | b'`') =>
                {
                    return Err(format!(
                        "invalid character in IRI at column {}",
                        self.pos + 1
                    ));
                }
                Some(_) => self.advance_char(),
            }
        }
    }

    fn blank(&mut self) -> Result<&'a str, String> {
        let start = self.pos;
        if !self.s[self.pos..].starts_with("_:") {
            return Err(format!("expected blank node at column {}", self.pos + 1));
        }
        self.pos += 2;
        let label_start = self.pos;
        while let Some(c) = self.s[self.pos..].chars().next() {
            if c.is_alphanumeric() || c == '_' || c == '-' || c == '.' || c == ':' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        // a label may not end with '.', which belongs to the statement terminator
        while self.pos > label_start && self.bytes()[self.pos - 1] == b'.' {
            self.pos -= 1;
        }
        if self.pos == label_start {
            return Err("empty blank node label".into());
        }
        Ok(&self.s[start..self.pos])
    }

    fn literal(&mut self) -> Result<&'a str, String> {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek() {
                None => return Err("unterminated literal".into()),
                Some(b'"') => {
                    self.pos += 1;
                    break;
                }
                Some(b'\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(b't' | b'b' | b'n' | b'r' | b'f' | b'"' | b'\'' | b'\\') => {
                            self.pos += 1
                        }
                        Some(b'u') => {
                            self.pos += 1;
                            self.hex_escape(4)?
                        }
                        Some(b'U') => {
                            self.pos += 1;
                            self.hex_escape(8)?
                        }
                        _ => return Err("invalid escape in literal".into()),
                    }
                }
                Some(_) => self.advance_char(),
            }
        }
        match self.peek() {
            Some(b'@') => {
                self.pos += 1;
                let tag_start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'-') {
                    self.pos += 1;
                }
                let tag = &self.s[tag_start..self.pos];
                let valid = !tag.is_empty()
                    && tag.split('-').all(|part| !part.is_empty())
                    && tag
                        .split('-')
                        .next()
                        .is_some_and(|p| p.bytes().all(|c| c.is_ascii_alphabetic()));
                if !valid {
                    return Err("invalid language tag".into());
                }
            }
            Some(b'^') => {
                if !self.s[self.pos..].starts_with("^^<") {
                    return Err("expected ^^<datatype> after literal".into());
                }
                self.pos += 2;
                self.iri()?;
            }
            _ => {}
        }
        Ok(&self.s[start..self.pos])
    }

    fn advance_char(&mut self) {
        let c = self.s[self.pos..].chars().next().expect("not at end");
        self.pos += c.len_utf8();
    }
}
