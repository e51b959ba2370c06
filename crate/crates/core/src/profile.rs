//! Label profiles: which dependency labels fill which argument role.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::Token;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("label {label:?} appears in both {first} and {second}")]
    Overlap {
        label: String,
        first: &'static str,
        second: &'static str,
    },
    #[error("unknown profile {0:?} (expected \"default\", \"ud\", or a JSON file)")]
    Unknown(String),
}

/// Argument-role label sets plus the verb test used for nucleus extraction
/// and pattern matching.
///
/// `objects` and `prep_modifiers` may share labels (`pobj` in the default
/// profile): the first applies to dependents of a verb, the second to
/// dependents of a preposition. All other role sets must be disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelProfile {
    pub name: String,
    pub subjects: BTreeSet<String>,
    pub objects: BTreeSet<String>,
    pub prepositions: BTreeSet<String>,
    pub prep_modifiers: BTreeSet<String>,
    pub negation: BTreeSet<String>,
    pub verb_xpos: BTreeSet<String>,
    pub verb_upos: BTreeSet<String>,
    #[serde(default)]
    pub experimental: bool,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for LabelProfile {
    fn default() -> Self {
        LabelProfile {
            name: "default".into(),
            subjects: set(&["nsubj", "nsubjpass", "expl"]),
            objects: set(&["dobj", "obj", "pobj", "iobj", "attr", "oprd"]),
            prepositions: set(&["prep", "agent"]),
            prep_modifiers: set(&["pobj", "pcomp"]),
            negation: set(&["neg"]),
            verb_xpos: set(&["VB", "VBD", "VBG", "VBN", "VBP", "VBZ"]),
            verb_upos: set(&["VERB", "AUX"]),
            experimental: false,
        }
    }
}

impl LabelProfile {
    /// Rough Universal Dependencies counterpart of the default profile.
    /// Prepositional modifiers become `obl`/`nmod` dependents carrying a
    /// `case` marker, so triplets differ in shape from the default profile.
    pub fn universal_dependencies() -> Self {
        LabelProfile {
            name: "ud".into(),
            subjects: set(&["nsubj", "nsubj:pass", "expl"]),
            objects: set(&["obj", "iobj"]),
            prepositions: set(&["obl", "nmod"]),
            prep_modifiers: set(&["case"]),
            negation: BTreeSet::new(),
            verb_xpos: set(&["VB", "VBD", "VBG", "VBN", "VBP", "VBZ"]),
            verb_upos: set(&["VERB", "AUX"]),
            experimental: true,
        }
    }

    /// Resolves a builtin profile by name.
    pub fn by_name(name: &str) -> Result<Self, ProfileError> {
        match name {
            "default" => Ok(Self::default()),
            "ud" => Ok(Self::universal_dependencies()),
            other => Err(ProfileError::Unknown(other.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        let roles: [(&'static str, &BTreeSet<String>); 5] = [
            ("subjects", &self.subjects),
            ("objects", &self.objects),
            ("prepositions", &self.prepositions),
            ("prep_modifiers", &self.prep_modifiers),
            ("negation", &self.negation),
        ];
        for (i, (first, a)) in roles.iter().enumerate() {
            for (second, b) in &roles[i + 1..] {
                if (*first, *second) == ("objects", "prep_modifiers") {
                    continue;
                }
                if let Some(label) = a.intersection(b).next() {
                    return Err(ProfileError::Overlap {
                        label: label.clone(),
                        first,
                        second,
                    });
                }
            }
        }
        Ok(())
    }

    /// Verb test: fine tag in `verb_xpos`, or coarse tag in `verb_upos` when
    /// the fine tag is absent.
    pub fn is_verb(&self, token: &Token) -> bool {
        if token.xpos.is_empty() || token.xpos == "_" {
            self.verb_upos.contains(&token.upos)
        } else {
            self.verb_xpos.contains(&token.xpos)
        }
    }

    /// Looks up a role set by the name used in pattern catalogs.
    pub fn role(&self, name: &str) -> Option<&BTreeSet<String>> {
        match name {
            "subjects" | "subj" => Some(&self.subjects),
            "objects" | "obj" => Some(&self.objects),
            "prepositions" | "prep" => Some(&self.prepositions),
            "prep_modifiers" => Some(&self.prep_modifiers),
            "negation" | "neg" => Some(&self.negation),
            _ => None,
        }
    }

    /// Every label that may appear in a triplet.
    pub fn argument_labels(&self) -> BTreeSet<&str> {
        self.subjects
            .iter()
            .chain(&self.objects)
            .chain(&self.prepositions)
            .chain(&self.prep_modifiers)
            .chain(&self.negation)
            .map(String::as_str)
            .collect()
    }
}
