use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("catalog line {line}: {message}")]
pub struct CatalogError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    PosMismatch,
    DeprelMismatch,
    SubtreeMismatch,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::PosMismatch => "pos-mismatch",
            Family::DeprelMismatch => "deprel-mismatch",
            Family::SubtreeMismatch => "subtree-mismatch",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "pos-mismatch" => Some(Family::PosMismatch),
            "deprel-mismatch" => Some(Family::DeprelMismatch),
            "subtree-mismatch" => Some(Family::SubtreeMismatch),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const VERB_CLASS: [&str; 2] = ["AUX", "VERB"];
pub const NONVERB_CLASS: [&str; 4] = ["ADJ", "NOUN", "NUM", "PROPN"];

/// UPOS constraint on a pattern variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "class", content = "tags")]
pub enum NodeClass {
    /// VERB or AUX.
    Verb,
    /// NOUN, PROPN, ADJ or NUM.
    NonVerb,
    Any,
    Tags(BTreeSet<String>),
}

impl NodeClass {
    /// The admitted UPOS tags, or `None` for [`NodeClass::Any`].
    pub fn tags(&self) -> Option<BTreeSet<String>> {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        match self {
            NodeClass::Verb => Some(owned(&VERB_CLASS)),
            NodeClass::NonVerb => Some(owned(&NONVERB_CLASS)),
            NodeClass::Any => None,
            NodeClass::Tags(t) => Some(t.clone()),
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "verb" => Some(NodeClass::Verb),
            "nonverb" => Some(NodeClass::NonVerb),
            "any" => Some(NodeClass::Any),
            _ => {
                let tags: BTreeSet<String> = s.split('|').map(str::to_string).collect();
                let valid = tags
                    .iter()
                    .all(|t| !t.is_empty() && t.chars().all(|c| c.is_ascii_uppercase()));
                valid.then_some(NodeClass::Tags(tags))
            }
        }
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeClass::Verb => f.write_str("verb"),
            NodeClass::NonVerb => f.write_str("nonverb"),
            NodeClass::Any => f.write_str("any"),
            NodeClass::Tags(t) => f.write_str(&t.iter().cloned().collect::<Vec<_>>().join("|")),
        }
    }
}

/// Deprel constraint on an edge. Labels starting with `@` name a role set of
/// the active label profile and are expanded at compile time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "labels")]
pub enum EdgeLabels {
    Any,
    OneOf(Vec<String>),
}

impl fmt::Display for EdgeLabels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabels::Any => f.write_str("any"),
            EdgeLabels::OneOf(ls) => f.write_str(&ls.join("|")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub var: String,
    pub class: NodeClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub head: String,
    pub dependent: String,
    pub labels: EdgeLabels,
}

/// A declarative pattern: typed variables, labeled head→dependent edges and
/// strict precedence constraints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub id: String,
    pub family: Family,
    pub nodes: Vec<NodeSpec>,
    pub edges: Vec<EdgeSpec>,
    /// Pairs `(before, after)`.
    pub order: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<String>,
}

/// Parses a catalog document.
///
/// ```text
/// pattern P01
/// family pos-mismatch
/// node verb verb
/// node nonverb nonverb
/// edge verb -> nonverb conj
/// order verb < nonverb
/// example 32% had brown and 21% black.
/// end
/// ```
///
/// `#` starts a comment line. `order a < b < c` expands to `a<b` and `b<c`.
/// Structural checks (unknown variables, cycles) happen at compile time.
pub fn parse_catalog(text: &str) -> Result<Vec<PatternSpec>, CatalogError> {
    let mut out = Vec::new();
    let mut cur: Option<(usize, PatternSpec, bool)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| CatalogError { line, message };
        let (keyword, rest) = trimmed
            .split_once(char::is_whitespace)
            .map(|(k, r)| (k, r.trim()))
            .unwrap_or((trimmed, ""));

        if keyword == "pattern" {
            if cur.is_some() {
                return Err(err("`pattern` inside an unterminated record".into()));
            }
            if rest.is_empty() || rest.contains(char::is_whitespace) {
                return Err(err(format!("invalid pattern id {rest:?}")));
            }
            cur = Some((
                line,
                PatternSpec {
                    id: rest.to_string(),
                    family: Family::SubtreeMismatch,
                    nodes: Vec::new(),
                    edges: Vec::new(),
                    order: Vec::new(),
                    example: None,
                },
                false,
            ));
            continue;
        }

        let Some((_, spec, has_family)) = cur.as_mut() else {
            return Err(err(format!("`{keyword}` outside a pattern record")));
        };
        match keyword {
            "family" => {
                spec.family =
                    Family::parse(rest).ok_or_else(|| err(format!("unknown family {rest:?}")))?;
                *has_family = true;
            }
            "node" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [var, class] = parts[..] else {
                    return Err(err("expected `node <var> <class>`".into()));
                };
                let class = NodeClass::parse(class)
                    .ok_or_else(|| err(format!("invalid node class {class:?}")))?;
                spec.nodes.push(NodeSpec {
                    var: var.to_string(),
                    class,
                });
            }
            "edge" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [head, "->", dependent, labels] = parts[..] else {
                    return Err(err("expected `edge <head> -> <dependent> <labels>`".into()));
                };
                let labels = if labels == "any" {
                    EdgeLabels::Any
                } else {
                    let ls: Vec<String> = labels.split('|').map(str::to_string).collect();
                    if ls.iter().any(|l| l.is_empty() || l == "@") {
                        return Err(err(format!("invalid label list {labels:?}")));
                    }
                    EdgeLabels::OneOf(ls)
                };
                spec.edges.push(EdgeSpec {
                    head: head.to_string(),
                    dependent: dependent.to_string(),
                    labels,
                });
            }
            "order" => {
                let vars: Vec<&str> = rest.split('<').map(str::trim).collect();
                if vars.len() < 2 || vars.iter().any(|v| v.is_empty()) {
                    return Err(err("expected `order <a> < <b> [< ...]`".into()));
                }
                for w in vars.windows(2) {
                    spec.order.push((w[0].to_string(), w[1].to_string()));
                }
            }
            "example" => spec.example = Some(rest.to_string()),
            "end" => {
                let (start, spec, has_family) = cur.take().expect("record is open");
                if !has_family {
                    return Err(CatalogError {
                        line: start,
                        message: format!("pattern {} has no family", spec.id),
                    });
                }
                out.push(spec);
            }
            other => return Err(err(format!("unknown keyword {other:?}"))),
        }
    }
    if let Some((start, spec, _)) = cur {
        return Err(CatalogError {
            line: start,
            message: format!("pattern {} is missing `end`", spec.id),
        });
    }
    Ok(out)
}

/// Writes specs back in catalog syntax; `parse_catalog` of the result yields
/// the same specs.
pub fn dump_catalog(specs: &[PatternSpec]) -> String {
    let mut out = String::new();
    for (i, s) in specs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "pattern {}", s.id);
        let _ = writeln!(out, "family {}", s.family);
        for n in &s.nodes {
            let _ = writeln!(out, "node {} {}", n.var, n.class);
        }
        for e in &s.edges {
            let _ = writeln!(out, "edge {} -> {} {}", e.head, e.dependent, e.labels);
        }
        for (a, b) in &s.order {
            let _ = writeln!(out, "order {a} < {b}");
        }
        if let Some(ex) = &s.example {
            let _ = writeln!(out, "example {ex}");
        }
        out.push_str("end\n");
    }
    out
}

const BUILTIN: &str = include_str!("builtin.patterns");

/// The 21 builtin patterns.
pub fn builtin_specs() -> Vec<PatternSpec> {
    parse_catalog(BUILTIN).expect("builtin catalog parses")
}
