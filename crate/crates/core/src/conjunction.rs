use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::depgraph::DepGraph;

/// The three coordinators an instance can be marked with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coordinator {
    And,
    Or,
    But,
}

impl Coordinator {
    pub const ALL: [Coordinator; 3] = [Coordinator::And, Coordinator::Or, Coordinator::But];

    /// Case-insensitive match of a surface form.
    pub fn from_form(form: &str) -> Option<Self> {
        match form.to_lowercase().as_str() {
            "and" => Some(Coordinator::And),
            "or" => Some(Coordinator::Or),
            "but" => Some(Coordinator::But),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Coordinator::And => "and",
            Coordinator::Or => "or",
            Coordinator::But => "but",
        }
    }
}

impl fmt::Display for Coordinator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Coordinator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Coordinator::from_form(s).ok_or_else(|| format!("unknown conjunction {s:?}"))
    }
}

/// A marked conjunction inside a sentence: coordinator, 1-based token index
/// and character span `[start, end)` in the sentence text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConjunctionRef {
    pub form: Coordinator,
    pub index: usize,
    pub char_span: (usize, usize),
}

impl ConjunctionRef {
    /// Builds a reference to the token at `index` when it is a coordinator.
    pub fn at(graph: &DepGraph, index: usize) -> Option<Self> {
        let form = Coordinator::from_form(&graph.token(index)?.form)?;
        let char_span = graph.char_spans()[index - 1];
        Some(ConjunctionRef {
            form,
            index,
            char_span,
        })
    }
}

/// Indices of all coordinator tokens in surface order.
pub fn coordinator_indices(graph: &DepGraph) -> Vec<usize> {
    graph
        .tokens()
        .iter()
        .filter(|t| Coordinator::from_form(&t.form).is_some())
        .map(|t| t.index)
        .collect()
}
