//! Verb nuclei: a verb together with its subject, object, lexicalized
//! prepositional modifiers and negation, represented as a bag of
//! `(governor, label, dependent)` triplets over case-folded surface words.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::{DepGraph, Token};
use crate::profile::LabelProfile;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NucleusError {
    #[error("token {index} is not a verb ({form:?}, {xpos}/{upos})")]
    NotAVerb {
        index: usize,
        form: String,
        xpos: String,
        upos: String,
    },
    #[error("token {0} does not exist")]
    NoSuchToken(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triplet {
    pub w1: String,
    pub dep: String,
    pub w2: String,
}

impl Triplet {
    fn new(governor: &Token, dep: &str, dependent: &Token) -> Self {
        Triplet {
            w1: governor.form.to_lowercase(),
            dep: dep.to_string(),
            w2: dependent.form.to_lowercase(),
        }
    }

    fn canonical_key(&self) -> (&str, &str, &str) {
        (&self.dep, &self.w2, &self.w1)
    }
}

/// A verb and its argument triplets.
///
/// Equality, ordering and hashing look only at the triplet bag: two nuclei
/// extracted from different sentences are the same nucleus when their bags
/// coincide, and all empty nuclei are equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerbNucleus {
    pub verb: String,
    triplets: Vec<Triplet>,
}

impl VerbNucleus {
    pub fn new(verb: impl Into<String>, mut triplets: Vec<Triplet>) -> Self {
        triplets.sort_by(|a, b| a.canonical_key().cmp(&b.canonical_key()));
        VerbNucleus {
            verb: verb.into(),
            triplets,
        }
    }

    /// Triplets sorted by `(dep, w2)`, ties broken by `w1`.
    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

impl PartialEq for VerbNucleus {
    fn eq(&self, other: &Self) -> bool {
        self.triplets == other.triplets
    }
}

impl Eq for VerbNucleus {}

impl PartialOrd for VerbNucleus {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for VerbNucleus {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.triplets.iter().map(Triplet::canonical_key);
        let b = other.triplets.iter().map(Triplet::canonical_key);
        a.cmp(b)
    }
}

impl Hash for VerbNucleus {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.triplets.hash(state);
    }
}

/// A multiset of nuclei.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NucleusBag {
    counts: BTreeMap<VerbNucleus, usize>,
}

impl NucleusBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, nucleus: VerbNucleus) {
        *self.counts.entry(nucleus).or_insert(0) += 1;
    }

    pub fn count(&self, nucleus: &VerbNucleus) -> usize {
        self.counts.get(nucleus).copied().unwrap_or(0)
    }

    /// Total multiplicity.
    pub fn len(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Distinct nuclei with their multiplicities.
    pub fn iter(&self) -> impl Iterator<Item = (&VerbNucleus, usize)> {
        self.counts.iter().map(|(n, &c)| (n, c))
    }

    /// `(A ⊎ B)(x) = A(x) + B(x)`
    pub fn sum(&self, other: &NucleusBag) -> NucleusBag {
        let mut out = self.clone();
        for (n, c) in other.iter() {
            *out.counts.entry(n.clone()).or_insert(0) += c;
        }
        out
    }

    /// `(A ∖ B)(x) = max(0, A(x) − B(x))`
    pub fn difference(&self, other: &NucleusBag) -> NucleusBag {
        let counts = self
            .iter()
            .filter_map(|(n, c)| {
                let left = c.saturating_sub(other.count(n));
                (left > 0).then(|| (n.clone(), left))
            })
            .collect();
        NucleusBag { counts }
    }

    /// `(A ∩ B)(x) = min(A(x), B(x))`
    pub fn intersection(&self, other: &NucleusBag) -> NucleusBag {
        let counts = self
            .iter()
            .filter_map(|(n, c)| {
                let both = c.min(other.count(n));
                (both > 0).then(|| (n.clone(), both))
            })
            .collect();
        NucleusBag { counts }
    }

    /// `A ⊆ B` in the multiset sense.
    pub fn is_subbag_of(&self, other: &NucleusBag) -> bool {
        self.iter().all(|(n, c)| c <= other.count(n))
    }
}

impl FromIterator<VerbNucleus> for NucleusBag {
    fn from_iter<I: IntoIterator<Item = VerbNucleus>>(iter: I) -> Self {
        let mut bag = NucleusBag::new();
        for n in iter {
            bag.insert(n);
        }
        bag
    }
}

/// Extracts the nucleus rooted at the verb token `verb`.
pub fn nucleus_of_verb(
    graph: &DepGraph,
    verb: usize,
    profile: &LabelProfile,
) -> Result<VerbNucleus, NucleusError> {
    let tok = graph.token(verb).ok_or(NucleusError::NoSuchToken(verb))?;
    if !profile.is_verb(tok) {
        return Err(NucleusError::NotAVerb {
            index: verb,
            form: tok.form.clone(),
            xpos: tok.xpos.clone(),
            upos: tok.upos.clone(),
        });
    }
    Ok(collect_nucleus(graph, tok, profile))
}

fn collect_nucleus(graph: &DepGraph, verb: &Token, profile: &LabelProfile) -> VerbNucleus {
    let mut triplets = Vec::new();
    for dep in arguments(graph, verb.index) {
        let label = dep.deprel.as_str();
        if profile.subjects.contains(label) || profile.negation.contains(label) {
            triplets.push(Triplet::new(verb, label, dep));
        } else if profile.objects.contains(label) {
            triplets.push(Triplet::new(verb, label, dep));
            // prepositional modifiers of the object absorb pp-attachment errors
            for prep in arguments(graph, dep.index) {
                if profile.prepositions.contains(&prep.deprel) {
                    triplets.push(Triplet::new(dep, &prep.deprel, prep));
                    push_prep_modifiers(graph, prep, profile, &mut triplets);
                }
            }
        } else if profile.prepositions.contains(label) {
            triplets.push(Triplet::new(verb, label, dep));
            push_prep_modifiers(graph, dep, profile, &mut triplets);
        }
    }
    VerbNucleus::new(verb.form.to_lowercase(), triplets)
}

fn push_prep_modifiers(
    graph: &DepGraph,
    prep: &Token,
    profile: &LabelProfile,
    out: &mut Vec<Triplet>,
) {
    for m in arguments(graph, prep.index) {
        if profile.prep_modifiers.contains(&m.deprel) {
            out.push(Triplet::new(prep, &m.deprel, m));
        }
    }
}

fn arguments(graph: &DepGraph, node: usize) -> impl Iterator<Item = &Token> {
    graph
        .dependents(node)
        .iter()
        .filter_map(move |&i| graph.token(i))
        .filter(|t| !t.is_punct())
}

/// Nuclei of every verb of one sentence, in surface order.
pub fn sentence_nuclei(graph: &DepGraph, profile: &LabelProfile) -> Vec<VerbNucleus> {
    graph
        .tokens()
        .iter()
        .filter(|t| !t.is_punct() && profile.is_verb(t))
        .map(|t| collect_nucleus(graph, t, profile))
        .collect()
}

/// Bag-sum of the nuclei of every verb in every graph.
pub fn extract_nuclei<'a, I>(graphs: I, profile: &LabelProfile) -> NucleusBag
where
    I: IntoIterator<Item = &'a DepGraph>,
{
    graphs
        .into_iter()
        .flat_map(|g| sentence_nuclei(g, profile))
        .collect()
}

/// Number of omitted arguments of each gold nucleus that is not already in
/// the input.
///
/// A gold nucleus absent from the input bag counts its triplets whose
/// `(dep, w2)` pair does not occur under the same verb form in any input
/// nucleus.
pub fn omitted_arguments(
    input: &DepGraph,
    gold: &[DepGraph],
    profile: &LabelProfile,
) -> Vec<usize> {
    let input_nuclei = sentence_nuclei(input, profile);
    let input_bag: NucleusBag = input_nuclei.iter().cloned().collect();
    let gold_nuclei: Vec<VerbNucleus> = gold
        .iter()
        .flat_map(|g| sentence_nuclei(g, profile))
        .collect();
    let gold_bag: NucleusBag = gold_nuclei.iter().cloned().collect();
    let mut remaining = gold_bag.difference(&input_bag);

    let mut counts = Vec::new();
    for n in &gold_nuclei {
        let Some(c) = remaining.counts.get_mut(n) else {
            continue;
        };
        if *c == 0 {
            continue;
        }
        *c -= 1;
        let omitted = n
            .triplets()
            .iter()
            .filter(|t| {
                !input_nuclei
                    .iter()
                    .filter(|i| i.verb == n.verb)
                    .flat_map(|i| i.triplets())
                    .any(|it| it.dep == t.dep && it.w2 == t.w2)
            })
            .count();
        counts.push(omitted);
    }
    counts
}
