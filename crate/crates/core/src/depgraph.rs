//! Dependency-parsed sentences.
//!
//! A [`DepGraph`] is a rooted, labeled dependency tree over the tokens of one
//! sentence. Graphs are validated once at construction and never mutated
//! afterwards, so they can be shared freely between threads.

use std::fmt;

use thiserror::Error;

/// One token line of a parsed sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    /// Index of the governor, `0` for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    pub fn new(
        index: usize,
        form: impl Into<String>,
        lemma: impl Into<String>,
        upos: impl Into<String>,
        xpos: impl Into<String>,
        head: usize,
        deprel: impl Into<String>,
    ) -> Self {
        Token {
            index,
            form: form.into(),
            lemma: lemma.into(),
            upos: upos.into(),
            xpos: xpos.into(),
            head,
            deprel: deprel.into(),
        }
    }

    pub fn is_punct(&self) -> bool {
        self.upos == "PUNCT"
    }

    pub fn is_root(&self) -> bool {
        self.head == 0
    }
}

/// Structural problems that prevent a token sequence from forming a tree.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("sentence has no tokens")]
    Empty,
    #[error("token {position} has index {found}, expected {position}")]
    NonSequentialIndex { position: usize, found: usize },
    #[error("token {index} has an empty form")]
    EmptyForm { index: usize },
    #[error("token {index} has head {head}, outside 0..={len}")]
    HeadOutOfRange {
        index: usize,
        head: usize,
        len: usize,
    },
    #[error("token {index} is its own head")]
    SelfLoop { index: usize },
    #[error("expected exactly one root, found {found}")]
    RootCount { found: usize },
    #[error("head relation has a cycle through token {index}")]
    Cycle { index: usize },
    #[error("node {node} is not a token index (sentence has {len} tokens)")]
    NodeOutOfRange { node: usize, len: usize },
}

/// One parsed sentence.
#[derive(Debug, Clone)]
pub struct DepGraph {
    tokens: Vec<Token>,
    text: Option<String>,
    id: Option<String>,
    root: usize,
    // dependents of each node in surface order; slot 0 holds the root
    dependents: Vec<Vec<usize>>,
}

impl PartialEq for DepGraph {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.text == other.text && self.id == other.id
    }
}

impl Eq for DepGraph {}

impl DepGraph {
    /// Builds a graph, checking that the tokens form a single rooted tree
    /// with indices `1..=n` in order.
    pub fn new(
        tokens: Vec<Token>,
        text: Option<String>,
        id: Option<String>,
    ) -> Result<Self, GraphError> {
        if tokens.is_empty() {
            return Err(GraphError::Empty);
        }
        let len = tokens.len();
        let mut roots = Vec::new();
        for (pos, tok) in tokens.iter().enumerate() {
            if tok.index != pos + 1 {
                return Err(GraphError::NonSequentialIndex {
                    position: pos + 1,
                    found: tok.index,
                });
            }
            if tok.form.is_empty() {
                return Err(GraphError::EmptyForm { index: tok.index });
            }
            if tok.head > len {
                return Err(GraphError::HeadOutOfRange {
                    index: tok.index,
                    head: tok.head,
                    len,
                });
            }
            if tok.head == tok.index {
                return Err(GraphError::SelfLoop { index: tok.index });
            }
            if tok.head == 0 {
                roots.push(tok.index);
            }
        }
        if roots.len() != 1 {
            return Err(GraphError::RootCount { found: roots.len() });
        }

        // Walk up from every token; a path longer than len means a cycle.
        for tok in &tokens {
            let mut cur = tok.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > len {
                    return Err(GraphError::Cycle { index: tok.index });
                }
                cur = tokens[cur - 1].head;
            }
        }

        let mut dependents = vec![Vec::new(); len + 1];
        for tok in &tokens {
            dependents[tok.head].push(tok.index);
        }

        Ok(DepGraph {
            root: roots[0],
            tokens,
            text,
            id,
            dependents,
        })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> Option<&str> {
        self.text.as_deref()
    }

    pub fn id(&self) -> Option<&str> {
        self.id.as_deref()
    }

    /// Index of the root token.
    pub fn root(&self) -> usize {
        self.root
    }

    /// The token at a 1-based index.
    pub fn token(&self, index: usize) -> Option<&Token> {
        index.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    /// Dependents of `node` in surface order, without bounds checking beyond
    /// returning an empty slice.
    pub fn dependents(&self, node: usize) -> &[usize] {
        self.dependents.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Dependents of `node` in surface order, keeping only those whose label
    /// is in `labels`. An empty `labels` slice means no filtering.
    pub fn children<S: AsRef<str>>(
        &self,
        node: usize,
        labels: &[S],
    ) -> Result<Vec<&Token>, GraphError> {
        if node == 0 || node > self.len() {
            return Err(GraphError::NodeOutOfRange {
                node,
                len: self.len(),
            });
        }
        Ok(self.dependents[node]
            .iter()
            .map(|&i| &self.tokens[i - 1])
            .filter(|t| labels.is_empty() || labels.iter().any(|l| l.as_ref() == t.deprel))
            .collect())
    }

    /// The sentence text: the `# text` comment when present, otherwise the
    /// forms joined by single spaces.
    pub fn surface(&self) -> String {
        match &self.text {
            Some(t) => t.clone(),
            None => self.joined_forms(),
        }
    }

    fn joined_forms(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.form.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Character (Unicode scalar) spans `[start, end)` of every token within
    /// [`DepGraph::surface`].
    ///
    /// Forms are located left to right in the raw text. If any form cannot be
    /// found there, spans are computed against the space-joined forms instead.
    pub fn char_spans(&self) -> Vec<(usize, usize)> {
        if let Some(text) = &self.text {
            if let Some(spans) = align_forms(text, &self.tokens) {
                return spans;
            }
        }
        let mut spans = Vec::with_capacity(self.len());
        let mut start = 0;
        for t in &self.tokens {
            let n = t.form.chars().count();
            spans.push((start, start + n));
            start += n + 1;
        }
        spans
    }
}

fn align_forms(text: &str, tokens: &[Token]) -> Option<Vec<(usize, usize)>> {
    let mut spans = Vec::with_capacity(tokens.len());
    let mut byte_cursor = 0;
    let mut char_cursor = 0;
    for t in tokens {
        let rel = text[byte_cursor..].find(t.form.as_str())?;
        let start = char_cursor + text[byte_cursor..byte_cursor + rel].chars().count();
        let end = start + t.form.chars().count();
        spans.push((start, end));
        byte_cursor += rel + t.form.len();
        char_cursor = end;
    }
    Some(spans)
}

impl fmt::Display for DepGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface())
    }
}
