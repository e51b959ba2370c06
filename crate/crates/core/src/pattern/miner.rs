use std::collections::BTreeMap;
use std::io::{self, BufRead};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::compile::CompiledPattern;
use super::matcher::detect;
use crate::conjunction::ConjunctionRef;
use crate::conllu::{serialize_conllu, ConlluError, Sentences};
use crate::depgraph::DepGraph;

/// A sentence with suspected omissions around one marked conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: String,
    pub text: String,
    pub conllu: String,
    pub conjunction: ConjunctionRef,
    pub matched_patterns: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MineConfig {
    /// Probability that a record is also sent to the audit channel.
    pub audit_rate: f64,
    pub seed: u64,
    /// Sentences parsed and matched per parallel batch.
    pub batch_size: usize,
}

impl Default for MineConfig {
    fn default() -> Self {
        MineConfig {
            audit_rate: 0.0,
            seed: 0,
            batch_size: 1024,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineCounters {
    pub sentences: usize,
    pub skipped: usize,
    pub matched_sentences: usize,
    pub records: usize,
    pub audited: usize,
    /// Parse errors of skipped sentences, in input order.
    pub errors: Vec<String>,
}

/// Candidate records of one sentence, one per distinct conjunction index.
///
/// Record ids are `<sentence id>-c<conjunction index>`.
pub fn candidates(
    graph: &DepGraph,
    sentence_id: &str,
    patterns: &[CompiledPattern],
) -> Vec<CandidateRecord> {
    let mut by_conj: BTreeMap<usize, (ConjunctionRef, Vec<String>)> = BTreeMap::new();
    for m in detect(graph, patterns) {
        let Some(c) = m.conjunction else { continue };
        let entry = by_conj.entry(c.index).or_insert_with(|| (c, Vec::new()));
        if !entry.1.contains(&m.pattern) {
            entry.1.push(m.pattern);
        }
    }
    if by_conj.is_empty() {
        return Vec::new();
    }
    let conllu = serialize_conllu([graph]);
    let text = graph
        .text()
        .map(str::to_string)
        .unwrap_or_else(|| graph.surface());
    by_conj
        .into_values()
        .map(|(conjunction, mut ids)| {
            ids.sort();
            CandidateRecord {
                id: format!("{sentence_id}-c{}", conjunction.index),
                text: text.clone(),
                conllu: conllu.clone(),
                conjunction,
                matched_patterns: ids,
            }
        })
        .collect()
}

/// Streams a CoNLL-U corpus through the patterns.
///
/// `emit` receives records in input order together with their audit flag.
/// Malformed sentences are counted and skipped. Sentences without a
/// `sent_id` are named `s<ordinal>`.
pub fn mine_corpus<R, F>(
    reader: R,
    patterns: &[CompiledPattern],
    config: &MineConfig,
    mut emit: F,
) -> io::Result<MineCounters>
where
    R: BufRead,
    F: FnMut(&CandidateRecord, bool) -> io::Result<()>,
{
    let mut counters = MineCounters::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut batch: Vec<(usize, usize, String)> = Vec::new();
    let mut block = String::new();
    let mut block_start = 0;
    let mut ordinal = 0;
    let batch_size = config.batch_size.max(1);

    let mut flush = |batch: &mut Vec<(usize, usize, String)>,
                     counters: &mut MineCounters,
                     rng: &mut ChaCha8Rng|
     -> io::Result<()> {
        let results: Vec<_> = batch
            .par_iter()
            .map(|(ordinal, first_line, text)| process_block(*ordinal, *first_line, text, patterns))
            .collect();
        batch.clear();
        for r in results {
            counters.sentences += 1;
            match r {
                Err(e) => {
                    counters.skipped += 1;
                    counters.errors.push(e.to_string());
                }
                Ok(records) => {
                    if !records.is_empty() {
                        counters.matched_sentences += 1;
                    }
                    for rec in &records {
                        let audit = config.audit_rate > 0.0 && rng.gen::<f64>() < config.audit_rate;
                        counters.records += 1;
                        counters.audited += usize::from(audit);
                        emit(rec, audit)?;
                    }
                }
            }
        }
        Ok(())
    };

    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            if !block.is_empty() {
                ordinal += 1;
                batch.push((ordinal, block_start, std::mem::take(&mut block)));
                if batch.len() >= batch_size {
                    flush(&mut batch, &mut counters, &mut rng)?;
                }
            }
            continue;
        }
        if block.is_empty() {
            block_start = i + 1;
        }
        block.push_str(&line);
        block.push('\n');
    }
    if !block.is_empty() {
        ordinal += 1;
        batch.push((ordinal, block_start, block));
    }
    flush(&mut batch, &mut counters, &mut rng)?;
    Ok(counters)
}

fn process_block(
    ordinal: usize,
    first_line: usize,
    text: &str,
    patterns: &[CompiledPattern],
) -> Result<Vec<CandidateRecord>, ConlluError> {
    let graph = match Sentences::new(text).next() {
        Some(Ok(g)) => g,
        Some(Err(ConlluError::Malformed { line, message })) => {
            return Err(ConlluError::Malformed {
                line: line + first_line - 1,
                message,
            })
        }
        Some(Err(ConlluError::Structure { sentence, source })) => {
            let sentence = if sentence.starts_with('#') {
                format!("s{ordinal}")
            } else {
                sentence
            };
            return Err(ConlluError::Structure { sentence, source });
        }
        None => return Ok(Vec::new()),
    };
    let id = graph
        .id()
        .map(str::to_string)
        .unwrap_or_else(|| format!("s{ordinal}"));
    Ok(candidates(&graph, &id, patterns))
}
