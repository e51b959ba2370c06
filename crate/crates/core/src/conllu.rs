//! CoNLL-U reading and writing.
//!
//! Only the seven columns the toolkit uses are mapped (ID, FORM, LEMMA, UPOS,
//! XPOS, HEAD, DEPREL). FEATS, DEPS and MISC are ignored on input and written
//! as `_`. Multi-word token ranges (`3-4`) and empty nodes (`5.1`) are skipped.

use std::fmt::Write as _;

use thiserror::Error;

use crate::depgraph::{DepGraph, GraphError, Token};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConlluError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("sentence {sentence}: {source}")]
    Structure {
        sentence: String,
        #[source]
        source: GraphError,
    },
}

impl ConlluError {
    fn malformed(line: usize, message: impl Into<String>) -> Self {
        ConlluError::Malformed {
            line,
            message: message.into(),
        }
    }
}

/// A sentence block: its lines and the 1-based line number where it starts.
#[derive(Debug, Clone, Copy)]
struct Block<'a> {
    first_line: usize,
    lines: &'a [&'a str],
}

/// Iterates over the sentence blocks of a document, yielding one result per
/// sentence. A malformed block produces an error and iteration continues with
/// the next block.
pub struct Sentences<'a> {
    lines: Vec<&'a str>,
    pos: usize,
    ordinal: usize,
}

impl<'a> Sentences<'a> {
    pub fn new(text: &'a str) -> Self {
        Sentences {
            lines: text
                .split('\n')
                .map(|l| l.strip_suffix('\r').unwrap_or(l))
                .collect(),
            pos: 0,
            ordinal: 0,
        }
    }
}

impl<'a> Iterator for Sentences<'a> {
    type Item = Result<DepGraph, ConlluError>;

    fn next(&mut self) -> Option<Self::Item> {
        while self.pos < self.lines.len() && self.lines[self.pos].trim().is_empty() {
            self.pos += 1;
        }
        if self.pos >= self.lines.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.lines.len() && !self.lines[self.pos].trim().is_empty() {
            self.pos += 1;
        }
        self.ordinal += 1;
        let block = Block {
            first_line: start + 1,
            lines: &self.lines[start..self.pos],
        };
        Some(parse_block(block, self.ordinal))
    }
}

fn parse_block(block: Block<'_>, ordinal: usize) -> Result<DepGraph, ConlluError> {
    let mut text = None;
    let mut id = None;
    let mut tokens = Vec::new();

    for (offset, line) in block.lines.iter().enumerate() {
        let lineno = block.first_line + offset;
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "text" => text = Some(value.trim().to_string()),
                    "sent_id" => id = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::malformed(
                lineno,
                format!("expected 10 tab-separated columns, found {}", cols.len()),
            ));
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0]
            .parse()
            .map_err(|_| ConlluError::malformed(lineno, format!("invalid ID {:?}", cols[0])))?;
        let head: usize = cols[6]
            .parse()
            .map_err(|_| ConlluError::malformed(lineno, format!("invalid HEAD {:?}", cols[6])))?;
        if cols[1].is_empty() {
            return Err(ConlluError::malformed(lineno, "empty FORM"));
        }
        tokens.push(Token::new(
            index, cols[1], cols[2], cols[3], cols[4], head, cols[7],
        ));
    }

    let label = id.clone().unwrap_or_else(|| format!("#{ordinal}"));
    DepGraph::new(tokens, text, id).map_err(|source| ConlluError::Structure {
        sentence: label,
        source,
    })
}

/// Parses a whole document, failing on the first bad sentence.
pub fn parse_conllu(text: &str) -> Result<Vec<DepGraph>, ConlluError> {
    Sentences::new(text).collect()
}

/// Writes graphs as CoNLL-U. The output ends with a blank line after every
/// sentence; an empty input yields an empty string.
pub fn serialize_conllu<'a, I>(graphs: I) -> String
where
    I: IntoIterator<Item = &'a DepGraph>,
{
    let mut out = String::new();
    for g in graphs {
        write_graph(&mut out, g);
    }
    out
}

fn write_graph(out: &mut String, g: &DepGraph) {
    if let Some(id) = g.id() {
        let _ = writeln!(out, "# sent_id = {id}");
    }
    if let Some(text) = g.text() {
        let _ = writeln!(out, "# text = {text}");
    }
    for t in g.tokens() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t_\t{}\t{}\t_\t_",
            t.index,
            t.form,
            or_underscore(&t.lemma),
            or_underscore(&t.upos),
            or_underscore(&t.xpos),
            t.head,
            or_underscore(&t.deprel),
        );
    }
    out.push('\n');
}

fn or_underscore(s: &str) -> &str {
    if s.is_empty() {
        "_"
    } else {
        s
    }
}
