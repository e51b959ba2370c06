//! Rewrite submissions: validity checks, consolidation across annotators,
//! annotator ranking and inter-annotator agreement.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conjunction::Coordinator;
use crate::depgraph::DepGraph;
use crate::text::{jaccard, normalize_sentence, stem, word_runs};

pub const MAX_REWRITES: usize = 10;

/// UPOS tags whose lemmas may not be introduced by a rewrite.
pub const CONTENT_UPOS: [&str; 7] = ["NOUN", "PROPN", "VERB", "AUX", "ADJ", "ADV", "NUM"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnnotationError {
    #[error("no submissions to consolidate")]
    NoSubmissions,
    #[error("submissions belong to different instances ({0} and {1})")]
    MixedInstances(String, String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    #[serde(default)]
    pub uncertain: bool,
    #[serde(default)]
    pub long_list: bool,
}

/// One annotator's answer for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewriteSet {
    pub instance_id: String,
    pub annotator: String,
    pub rewritable: bool,
    #[serde(default)]
    pub sentences: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub not_rewritable_reason: Option<String>,
    #[serde(default)]
    pub flags: Flags,
}

impl RewriteSet {
    /// Sentence count, counting an unchanged sentence as one.
    pub fn sentence_count(&self) -> usize {
        if self.rewritable {
            self.sentences.len()
        } else {
            1
        }
    }

    /// Normalized form used for aligned exact-match comparison. All
    /// non-rewritable answers share one key.
    pub fn agreement_key(&self) -> Option<Vec<String>> {
        self.rewritable.then(|| {
            self.sentences
                .iter()
                .map(|s| normalize_sentence(s))
                .collect()
        })
    }

    /// Aligned exact match between two answers.
    pub fn agrees_with(&self, other: &RewriteSet) -> bool {
        self.agreement_key() == other.agreement_key()
    }

    /// Punctuation-stripped, case-folded word runs of all rewrites.
    pub fn token_set(&self) -> BTreeSet<String> {
        self.sentences.iter().flat_map(|s| word_runs(s)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    DuplicateSentence,
    ConjunctionPresent,
    NewContentWord,
    TooManyRewrites,
    EmptySet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub detail: String,
    /// 1-based sentence number, when the finding is tied to one sentence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        let verdict = if violations.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        ValidationReport {
            verdict,
            violations,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }
}

/// Function words that the stemmer fallback lets a rewrite add freely.
/// Forms of be/have/do are deliberately absent: they are mapped to their
/// lemma and only allowed when the input already has that lemma.
const FUNCTION_WORDS: &[&str] = &[
    "a",
    "an",
    "the",
    "this",
    "that",
    "these",
    "those",
    "some",
    "any",
    "each",
    "every",
    "all",
    "both",
    "either",
    "neither",
    "no",
    "another",
    "such",
    "what",
    "which",
    "whose",
    "who",
    "whom",
    "i",
    "me",
    "my",
    "mine",
    "myself",
    "we",
    "us",
    "our",
    "ours",
    "ourselves",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
    "he",
    "him",
    "his",
    "himself",
    "she",
    "her",
    "hers",
    "herself",
    "it",
    "its",
    "itself",
    "they",
    "them",
    "their",
    "theirs",
    "themselves",
    "one",
    "ones",
    "there",
    "here",
    "of",
    "in",
    "on",
    "at",
    "by",
    "for",
    "with",
    "from",
    "to",
    "into",
    "onto",
    "about",
    "as",
    "than",
    "over",
    "under",
    "after",
    "before",
    "during",
    "between",
    "through",
    "against",
    "without",
    "within",
    "upon",
    "off",
    "out",
    "up",
    "down",
    "and",
    "or",
    "but",
    "nor",
    "so",
    "if",
    "because",
    "while",
    "when",
    "where",
    "whether",
    "not",
    "n",
    "t",
    "s",
    "ll",
    "d",
    "ve",
    "re",
    "m",
    "will",
    "would",
    "shall",
    "should",
    "can",
    "could",
    "may",
    "might",
    "must",
    "also",
    "too",
];

fn irregular_lemma(word: &str) -> &str {
    match word {
        "am" | "is" | "are" | "was" | "were" | "been" | "being" => "be",
        "has" | "had" | "having" => "have",
        "does" | "did" | "done" | "doing" => "do",
        other => other,
    }
}

fn lemma_key(word: &str) -> String {
    stem(irregular_lemma(word))
}

/// Comparison keys of a token: stemmed word runs of its lemma and form.
fn token_keys(lemma: &str, form: &str) -> BTreeSet<String> {
    word_runs(lemma)
        .into_iter()
        .chain(word_runs(form))
        .map(|w| lemma_key(&w))
        .collect()
}

fn is_content(upos: &str) -> bool {
    CONTENT_UPOS.contains(&upos)
}

/// Checks a submission against the instance it answers.
///
/// `rewrite_parses`, when given, must align with the submitted sentences;
/// their lemmas and tags then decide which words are content words.
/// Without parses, every word run of a rewrite that is not a function word
/// must match, after stemming, some word of the input.
pub fn validate(
    input: &DepGraph,
    conjunction: Coordinator,
    submission: &RewriteSet,
    rewrite_parses: Option<&[DepGraph]>,
) -> ValidationReport {
    let mut v = Vec::new();
    if !submission.rewritable {
        return ValidationReport::from_violations(v);
    }
    let sentences = &submission.sentences;
    if sentences.is_empty() {
        v.push(Violation {
            code: ViolationCode::EmptySet,
            detail: "a rewritable answer needs at least one sentence".into(),
            sentence: None,
        });
    }
    if sentences.len() > MAX_REWRITES {
        v.push(Violation {
            code: ViolationCode::TooManyRewrites,
            detail: format!(
                "{} sentences; at most {MAX_REWRITES} allowed",
                sentences.len()
            ),
            sentence: None,
        });
    }

    let normalized: Vec<String> = sentences.iter().map(|s| normalize_sentence(s)).collect();
    for (j, s) in normalized.iter().enumerate() {
        if let Some(i) = normalized[..j].iter().position(|t| t == s) {
            v.push(Violation {
                code: ViolationCode::DuplicateSentence,
                detail: format!("sentence {} repeats sentence {}", j + 1, i + 1),
                sentence: Some(j + 1),
            });
        }
    }

    let parses = rewrite_parses.filter(|p| p.len() == sentences.len());
    let conj = conjunction.as_str();
    for (j, s) in sentences.iter().enumerate() {
        let present = match parses {
            Some(p) => p[j].tokens().iter().any(|t| t.form.to_lowercase() == conj),
            None => word_runs(s).iter().any(|w| w == conj),
        };
        if present {
            v.push(Violation {
                code: ViolationCode::ConjunctionPresent,
                detail: format!("sentence {} contains {conj:?}", j + 1),
                sentence: Some(j + 1),
            });
        }
    }

    match parses {
        Some(p) => {
            let known: BTreeSet<String> = input
                .tokens()
                .iter()
                .filter(|t| is_content(&t.upos))
                .flat_map(|t| token_keys(&t.lemma, &t.form))
                .collect();
            for (j, g) in p.iter().enumerate() {
                for t in g.tokens().iter().filter(|t| is_content(&t.upos)) {
                    if !token_keys(&t.lemma, &t.form)
                        .iter()
                        .all(|k| known.contains(k))
                    {
                        v.push(new_word(j, &t.form));
                    }
                }
            }
        }
        None => {
            let known: BTreeSet<String> = input
                .tokens()
                .iter()
                .flat_map(|t| token_keys(&t.lemma, &t.form))
                .collect();
            for (j, s) in sentences.iter().enumerate() {
                for w in word_runs(s) {
                    if !FUNCTION_WORDS.contains(&w.as_str()) && !known.contains(&lemma_key(&w)) {
                        v.push(new_word(j, &w));
                    }
                }
            }
        }
    }
    ValidationReport::from_violations(v)
}

fn new_word(sentence: usize, word: &str) -> Violation {
    Violation {
        code: ViolationCode::NewContentWord,
        detail: format!("{word:?} does not occur in the input"),
        sentence: Some(sentence + 1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Majority,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Consolidation {
    pub instance_id: String,
    pub method: Method,
    pub gold: RewriteSet,
    /// Size of the class the gold answer belongs to.
    pub support: usize,
    pub submissions: usize,
}

/// Picks the gold answer for one instance.
///
/// Submissions are grouped by aligned exact match (which implies equal
/// sentence counts; all non-rewritable answers form one group). Among two
/// or more submissions, a group holding a strict majority wins and is
/// represented by its member with the lowest annotator id. Otherwise the answer of the best-ranked
/// annotator is taken, ties going to the lowest annotator id. Annotators
/// missing from `ranking` score 0.
pub fn consolidate(
    submissions: &[RewriteSet],
    ranking: &BTreeMap<String, f64>,
) -> Result<Consolidation, AnnotationError> {
    let first = submissions.first().ok_or(AnnotationError::NoSubmissions)?;
    if let Some(other) = submissions
        .iter()
        .find(|s| s.instance_id != first.instance_id)
    {
        return Err(AnnotationError::MixedInstances(
            first.instance_id.clone(),
            other.instance_id.clone(),
        ));
    }
    let mut classes: BTreeMap<Option<Vec<String>>, Vec<&RewriteSet>> = BTreeMap::new();
    for s in submissions {
        classes.entry(s.agreement_key()).or_default().push(s);
    }

    let n = submissions.len();
    // a lone answer has nobody to agree with
    let majority = classes.values().find(|m| n > 1 && 2 * m.len() > n);
    if let Some(members) = majority {
        let gold = members
            .iter()
            .min_by_key(|s| &s.annotator)
            .expect("class is non-empty");
        return Ok(Consolidation {
            instance_id: first.instance_id.clone(),
            method: Method::Majority,
            gold: (*gold).clone(),
            support: members.len(),
            submissions: n,
        });
    }

    let score = |s: &RewriteSet| ranking.get(&s.annotator).copied().unwrap_or(0.0);
    let best = submissions
        .iter()
        .min_by(|a, b| {
            score(b)
                .total_cmp(&score(a))
                .then_with(|| a.annotator.cmp(&b.annotator))
        })
        .expect("non-empty");
    Ok(Consolidation {
        instance_id: first.instance_id.clone(),
        method: Method::Fallback,
        gold: best.clone(),
        support: classes[&best.agreement_key()].len(),
        submissions: n,
    })
}

/// Each annotator's rate of exact agreement with consolidated gold answers.
pub fn rank_annotators<'a, I>(history: I) -> BTreeMap<String, f64>
where
    I: IntoIterator<Item = (&'a [RewriteSet], &'a RewriteSet)>,
{
    let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (subs, gold) in history {
        for s in subs {
            let e = tally.entry(s.annotator.clone()).or_insert((0, 0));
            e.0 += usize::from(s.agrees_with(gold));
            e.1 += 1;
        }
    }
    tally
        .into_iter()
        .map(|(a, (hit, total))| (a, hit as f64 / total as f64))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IaaReport {
    pub rewrite_agreement: f64,
    pub exact_match: f64,
    pub avg_jaccard: f64,
    pub instances: usize,
    /// Groups with fewer than two submissions.
    pub excluded: usize,
}

/// Agreement over groups of submissions, one group per instance.
pub fn iaa<G: AsRef<[RewriteSet]>>(groups: &[G]) -> IaaReport {
    let mut report = IaaReport::default();
    let (mut count_agree, mut exact, mut jacc) = (0usize, 0usize, 0.0);
    for g in groups {
        let g = g.as_ref();
        if g.len() < 2 {
            report.excluded += 1;
            continue;
        }
        report.instances += 1;
        count_agree += usize::from(
            g.iter()
                .all(|s| s.sentence_count() == g[0].sentence_count()),
        );
        exact += usize::from(g.iter().all(|s| s.agrees_with(&g[0])));
        let sets: Vec<BTreeSet<String>> = g.iter().map(RewriteSet::token_set).collect();
        let mut sum = 0.0;
        let mut pairs = 0;
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                sum += jaccard(&sets[i], &sets[j]);
                pairs += 1;
            }
        }
        jacc += sum / pairs as f64;
    }
    if report.instances > 0 {
        let n = report.instances as f64;
        report.rewrite_agreement = count_agree as f64 / n;
        report.exact_match = exact as f64 / n;
        report.avg_jaccard = jacc / n;
    }
    report
}
