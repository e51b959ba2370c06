//! Dataset records, JSON-lines persistence, splits and corpus statistics.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conjunction::{ConjunctionRef, Coordinator};
use crate::conllu::{parse_conllu, ConlluError};
use crate::depgraph::DepGraph;
use crate::profile::LabelProfile;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("{0}")]
    Usage(String),
}

/// Why an instance's parses could not be used.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseFailure {
    #[error("{0}")]
    Conllu(#[from] ConlluError),
    #[error("expected exactly one sentence, found {0}")]
    SentenceCount(usize),
    #[error("rewrite {0} has no parse")]
    MissingRewriteParse(usize),
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub const ALL: [Split; 4] = [
        Split::Train,
        Split::Validation,
        Split::Test,
        Split::Unassigned,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rewrite {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conllu: Option<String>,
}

/// One sentence with a marked conjunction and its gold rewrites.
///
/// Field order is the canonical key order of the JSON-lines format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    pub id: String,
    pub source: String,
    pub text: String,
    pub conjunction: ConjunctionRef,
    pub conllu: String,
    pub rewritable: bool,
    #[serde(default)]
    pub rewrites: Vec<Rewrite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub not_rewritable_reason: Option<String>,
    #[serde(default)]
    pub split: Split,
}

fn single_sentence(doc: &str) -> Result<DepGraph, ParseFailure> {
    let mut gs = parse_conllu(doc)?;
    if gs.len() != 1 {
        return Err(ParseFailure::SentenceCount(gs.len()));
    }
    Ok(gs.remove(0))
}

impl Instance {
    /// Checks the record-level invariants that serde cannot express.
    pub fn check(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.rewritable && self.rewrites.len() < 2 {
            return Err(format!(
                "rewritable instance {} has {} rewrite(s); at least 2 required",
                self.id,
                self.rewrites.len()
            ));
        }
        if !self.rewritable && !self.rewrites.is_empty() {
            return Err(format!(
                "non-rewritable instance {} carries rewrites",
                self.id
            ));
        }
        if self.conjunction.index == 0 {
            return Err("conjunction index must be 1-based".into());
        }
        Ok(())
    }

    pub fn input_graph(&self) -> Result<DepGraph, ParseFailure> {
        single_sentence(&self.conllu)
    }

    /// Gold sentence texts; the input itself when not rewritable.
    pub fn gold_texts(&self) -> Vec<String> {
        if self.rewritable {
            self.rewrites.iter().map(|r| r.text.clone()).collect()
        } else {
            vec![self.text.clone()]
        }
    }

    /// Gold parses; the input parse when not rewritable.
    pub fn gold_graphs(&self) -> Result<Vec<DepGraph>, ParseFailure> {
        if !self.rewritable {
            return Ok(vec![self.input_graph()?]);
        }
        self.rewrites
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let doc = r
                    .conllu
                    .as_deref()
                    .ok_or(ParseFailure::MissingRewriteParse(i + 1))?;
                single_sentence(doc)
            })
            .collect()
    }
}

/// Result of reading a JSON-lines dataset.
#[derive(Debug, Default)]
pub struct Loaded {
    pub instances: Vec<Instance>,
    /// Lines dropped in lenient mode, with their errors.
    pub rejected: Vec<(usize, String)>,
}

/// Reads instances, one JSON object per line; blank lines are ignored.
///
/// Strict mode fails on the first bad line. Lenient mode skips it.
pub fn read_instances<R: BufRead>(reader: R, lenient: bool) -> Result<Loaded, DatasetError> {
    let mut loaded = Loaded::default();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| DatasetError::Io {
            path: "<input>".into(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Instance>(&line)
            .map_err(|e| e.to_string())
            .and_then(|inst| inst.check().map(|()| inst));
        match parsed {
            Ok(inst) => loaded.instances.push(inst),
            Err(message) if lenient => loaded.rejected.push((line_no, message)),
            Err(message) => {
                return Err(DatasetError::Schema {
                    line: line_no,
                    message,
                })
            }
        }
    }
    Ok(loaded)
}

pub fn load(path: impl AsRef<Path>, lenient: bool) -> Result<Loaded, DatasetError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_instances(BufReader::new(file), lenient)
}

/// Canonical JSON-lines encoding: one record per line, fields in declaration
/// order, LF endings.
pub fn to_jsonl(instances: &[Instance]) -> String {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(inst).expect("instances serialize"));
        out.push('\n');
    }
    out
}

pub fn save(path: impl AsRef<Path>, instances: &[Instance]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let io_err = |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    file.write_all(to_jsonl(instances).as_bytes())
        .map_err(io_err)?;
    file.flush().map_err(io_err)
}

/// How to size the train/validation/test partitions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSizes {
    /// Fractions summing to 1. Validation and test get the floor of their
    /// share; train takes the remainder.
    Ratios([f64; 3]),
    /// Exact partition sizes summing to the instance count.
    Exact([usize; 3]),
}

impl Default for SplitSizes {
    fn default() -> Self {
        SplitSizes::Ratios([0.8, 0.1, 0.1])
    }
}

impl SplitSizes {
    pub fn resolve(&self, n: usize) -> Result<[usize; 3], DatasetError> {
        match *self {
            SplitSizes::Ratios(r) => {
                if r.iter().any(|x| !(0.0..=1.0).contains(x))
                    || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9
                {
                    return Err(DatasetError::Usage(format!(
                        "split ratios must be in [0, 1] and sum to 1, got {r:?}"
                    )));
                }
                // the epsilon keeps 10 * 0.1 from flooring to 0.999...
                let part = |x: f64| ((n as f64) * x + 1e-9).floor() as usize;
                let (val, test) = (part(r[1]), part(r[2]));
                Ok([n - val - test, val, test])
            }
            SplitSizes::Exact(s) => {
                if s.iter().sum::<usize>() != n {
                    return Err(DatasetError::Usage(format!(
                        "split sizes {s:?} do not sum to {n} instances"
                    )));
                }
                Ok(s)
            }
        }
    }
}

/// Shuffles with a seeded ChaCha generator and assigns train, validation and
/// test in that order. Returns the partition sizes.
pub fn split(
    instances: &mut [Instance],
    sizes: SplitSizes,
    seed: u64,
) -> Result<[usize; 3], DatasetError> {
    let counts = sizes.resolve(instances.len())?;
    let mut order: Vec<usize> = (0..instances.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let labels = [Split::Train, Split::Validation, Split::Test];
    let mut pos = 0;
    for (label, &count) in labels.iter().zip(&counts) {
        for &i in &order[pos..pos + count] {
            instances[i].split = *label;
        }
        pos += count;
    }
    Ok(counts)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerbCounts {
    pub explicit: usize,
    pub omitted: usize,
    pub total: usize,
    pub omitted_share: f64,
    /// Instances whose rewrites had fewer verbs than the input.
    pub negative_instances: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub instances: usize,
    pub conjunctions: BTreeMap<Coordinator, usize>,
    /// `None` when some instance lacks usable parses.
    pub verbs: Option<VerbCounts>,
    pub verbs_unavailable: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RewriteDistribution {
    pub two: usize,
    pub three: usize,
    pub four_or_more: usize,
    pub non_rewritable: usize,
    pub share_two: f64,
    pub share_three: f64,
    pub share_four_or_more: f64,
    pub share_non_rewritable: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub overall: GroupStats,
    /// Only splits that occur in the data, in train/validation/test/unassigned order.
    pub splits: BTreeMap<Split, GroupStats>,
    pub rewrite_counts: RewriteDistribution,
}

/// Verb tokens of one instance: `(explicit, total)`.
pub fn verb_counts(
    inst: &Instance,
    profile: &LabelProfile,
) -> Result<(usize, usize), ParseFailure> {
    let count = |g: &DepGraph| {
        g.tokens()
            .iter()
            .filter(|t| !t.is_punct() && profile.is_verb(t))
            .count()
    };
    let explicit = count(&inst.input_graph()?);
    let total = if inst.rewritable {
        inst.gold_graphs()?.iter().map(count).sum()
    } else {
        explicit
    };
    Ok((explicit, total))
}

#[derive(Default)]
struct Accumulator {
    instances: usize,
    conjunctions: BTreeMap<Coordinator, usize>,
    explicit: usize,
    omitted: usize,
    negative: usize,
    unavailable: usize,
}

impl Accumulator {
    fn add(&mut self, inst: &Instance, verbs: Option<(usize, usize)>) {
        self.instances += 1;
        *self.conjunctions.entry(inst.conjunction.form).or_insert(0) += 1;
        match verbs {
            Some((explicit, total)) => {
                self.explicit += explicit;
                self.omitted += total.saturating_sub(explicit);
                self.negative += usize::from(total < explicit);
            }
            None => self.unavailable += 1,
        }
    }

    fn finish(self) -> GroupStats {
        let mut conjunctions = self.conjunctions;
        for c in Coordinator::ALL {
            conjunctions.entry(c).or_insert(0);
        }
        let verbs = (self.unavailable == 0).then(|| {
            let total = self.explicit + self.omitted;
            VerbCounts {
                explicit: self.explicit,
                omitted: self.omitted,
                total,
                omitted_share: if total == 0 {
                    0.0
                } else {
                    self.omitted as f64 / total as f64
                },
                negative_instances: self.negative,
            }
        });
        GroupStats {
            instances: self.instances,
            conjunctions,
            verbs,
            verbs_unavailable: self.unavailable,
        }
    }
}

/// Conjunction, verb and rewrite-count tallies, overall and per split.
///
/// Explicit verbs are the verb tokens of the input parse; the total is the
/// verb count over the gold rewrite parses (the input's count when not
/// rewritable); omitted is their difference, floored at 0 per instance.
pub fn stats(instances: &[Instance], profile: &LabelProfile) -> DatasetStats {
    let mut overall = Accumulator::default();
    let mut per_split: BTreeMap<Split, Accumulator> = BTreeMap::new();
    let mut dist = RewriteDistribution::default();
    for inst in instances {
        let verbs = verb_counts(inst, profile).ok();
        overall.add(inst, verbs);
        per_split.entry(inst.split).or_default().add(inst, verbs);
        match (inst.rewritable, inst.rewrites.len()) {
            (false, _) => dist.non_rewritable += 1,
            (true, n) if n <= 2 => dist.two += 1,
            (true, 3) => dist.three += 1,
            (true, _) => dist.four_or_more += 1,
        }
    }
    let n = instances.len();
    if n > 0 {
        let share = |c: usize| c as f64 / n as f64;
        dist.share_two = share(dist.two);
        dist.share_three = share(dist.three);
        dist.share_four_or_more = share(dist.four_or_more);
        dist.share_non_rewritable = share(dist.non_rewritable);
    }
    DatasetStats {
        overall: overall.finish(),
        splits: per_split
            .into_iter()
            .map(|(k, v)| (k, v.finish()))
            .collect(),
        rewrite_counts: dist,
    }
}
