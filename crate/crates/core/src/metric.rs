//! Verb-nucleus precision and recall for sentence-splitting rewrites.
//!
//! Nuclei already present in the input are subtracted from both sides, so
//! only material a rewrite makes explicit is scored. When gold and
//! hypothesis are both a single sentence the subtraction is skipped, which
//! lets a correct "leave it as is" answer score perfectly.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conjunction::Coordinator;
use crate::conllu::parse_conllu;
use crate::dataset::Instance;
use crate::depgraph::DepGraph;
use crate::nucleus::{extract_nuclei, NucleusBag};
use crate::profile::LabelProfile;
use crate::text::normalize_sentence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("gold set is empty")]
    EmptyGold,
    #[error("hypothesis set is empty")]
    EmptyHypothesis,
    #[error("no prediction for instance(s): {}", .0.join(", "))]
    MissingPredictions(Vec<String>),
    #[error("calibration mode k needs the gold rewrite count")]
    UnknownK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub precision: f64,
    pub recall: f64,
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
    pub skip_rule_applied: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjunction: Option<Coordinator>,
}

/// `matched / denominator`, with 1 when both sides are empty and 0 when
/// only this side is.
fn ratio(matched: usize, denominator: usize, other: usize) -> f64 {
    match (denominator, other) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        (d, _) => matched as f64 / d as f64,
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Scores one hypothesis set against the gold set of an instance.
pub fn score_instance(
    input: &DepGraph,
    gold: &[DepGraph],
    hyp: &[DepGraph],
    profile: &LabelProfile,
) -> Result<InstanceScore, MetricError> {
    if gold.is_empty() {
        return Err(MetricError::EmptyGold);
    }
    if hyp.is_empty() {
        return Err(MetricError::EmptyHypothesis);
    }
    let ng = extract_nuclei(gold, profile);
    let nh = extract_nuclei(hyp, profile);
    let skip = gold.len() == 1 && hyp.len() == 1;
    let (g, h): (NucleusBag, NucleusBag) = if skip {
        (ng, nh)
    } else {
        let ni = extract_nuclei([input], profile);
        (ng.difference(&ni), nh.difference(&ni))
    };
    let matched = h.intersection(&g).len();
    let (predicted, gold_n) = (h.len(), g.len());
    Ok(InstanceScore {
        precision: ratio(matched, predicted, gold_n),
        recall: ratio(matched, gold_n, predicted),
        matched,
        predicted,
        gold: gold_n,
        skip_rule_applied: skip,
        conjunction: None,
    })
}

/// Aligned comparison of punctuation-stripped, case-folded sentences.
pub fn exact_match<G: AsRef<str>, H: AsRef<str>>(gold: &[G], hyp: &[H]) -> bool {
    gold.len() == hyp.len()
        && gold
            .iter()
            .zip(hyp)
            .all(|(g, h)| normalize_sentence(g.as_ref()) == normalize_sentence(h.as_ref()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    /// Echo the input once.
    One,
    /// Echo the input as many times as there are gold sentences.
    K,
}

/// The trivial echo hypothesis. `gold_count` is required for mode `k`.
pub fn calibration(
    input: &str,
    mode: CalibrationMode,
    gold_count: Option<usize>,
) -> Result<Vec<String>, MetricError> {
    let k = match mode {
        CalibrationMode::One => 1,
        CalibrationMode::K => gold_count.ok_or(MetricError::UnknownK)?.max(1),
    };
    Ok(vec![input.to_string(); k])
}

/// A system's rewrite of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub sentences: Vec<String>,
    /// One CoNLL-U block per sentence.
    pub conllu: Vec<String>,
}

impl Prediction {
    pub fn graphs(&self) -> Result<Vec<DepGraph>, String> {
        if self.conllu.len() != self.sentences.len() {
            return Err(format!(
                "{} sentences but {} parses",
                self.sentences.len(),
                self.conllu.len()
            ));
        }
        self.conllu
            .iter()
            .map(|doc| {
                let mut gs = parse_conllu(doc).map_err(|e| e.to_string())?;
                match gs.len() {
                    1 => Ok(gs.remove(0)),
                    n => Err(format!("expected one parsed sentence, found {n}")),
                }
            })
            .collect()
    }
}

/// Calibration predictions for a whole dataset, reusing the input parses.
pub fn calibration_predictions(instances: &[Instance], mode: CalibrationMode) -> Vec<Prediction> {
    instances
        .iter()
        .map(|inst| {
            let k = inst.gold_texts().len();
            let sentences = calibration(&inst.text, mode, Some(k)).expect("k is known");
            Prediction {
                id: inst.id.clone(),
                conllu: vec![inst.conllu.clone(); sentences.len()],
                sentences,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Macro,
    Micro,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn new(precision: f64, recall: f64) -> Self {
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }

    /// Mean of per-instance precision and recall, then F1 of the means.
    pub fn macro_average(scores: &[&InstanceScore]) -> Self {
        if scores.is_empty() {
            return Prf::default();
        }
        let n = scores.len() as f64;
        let p = scores.iter().map(|s| s.precision).sum::<f64>() / n;
        let r = scores.iter().map(|s| s.recall).sum::<f64>() / n;
        Prf::new(p, r)
    }

    /// Precision and recall of the pooled counts.
    pub fn micro_average(scores: &[&InstanceScore]) -> Self {
        if scores.is_empty() {
            return Prf::default();
        }
        let matched = scores.iter().map(|s| s.matched).sum();
        let predicted = scores.iter().map(|s| s.predicted).sum();
        let gold = scores.iter().map(|s| s.gold).sum();
        Prf::new(
            ratio(matched, predicted, gold),
            ratio(matched, gold, predicted),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjunctionRow {
    pub conjunction: Coordinator,
    pub instances: usize,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    pub micro: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub id: String,
    pub exact_match: bool,
    #[serde(flatten)]
    pub score: InstanceScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: Aggregation,
    /// Equal to `macro` or `micro` according to `mode`.
    pub overall: Prf,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    pub micro: Prf,
    pub per_conjunction: Vec<ConjunctionRow>,
    pub exact_match: f64,
    pub instances: usize,
    pub skipped: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_instance: Option<Vec<ScoredInstance>>,
}

/// Scores every instance against its prediction.
///
/// Instances whose input, gold or hypothesis parses cannot be used are
/// skipped and counted. Every instance must have a prediction.
pub fn evaluate_corpus(
    instances: &[Instance],
    predictions: &[Prediction],
    profile: &LabelProfile,
    mode: Aggregation,
    keep_per_instance: bool,
) -> Result<EvalReport, MetricError> {
    let by_id: HashMap<&str, &Prediction> =
        predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let missing: Vec<String> = instances
        .iter()
        .filter(|i| !by_id.contains_key(i.id.as_str()))
        .map(|i| i.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(MetricError::MissingPredictions(missing));
    }

    let results: Vec<Result<ScoredInstance, String>> = instances
        .par_iter()
        .map(|inst| {
            let pred = by_id[inst.id.as_str()];
            let input = inst.input_graph().map_err(|e| e.to_string())?;
            let gold = inst.gold_graphs().map_err(|e| e.to_string())?;
            let hyp = pred.graphs()?;
            let mut score =
                score_instance(&input, &gold, &hyp, profile).map_err(|e| e.to_string())?;
            score.conjunction = Some(inst.conjunction.form);
            Ok(ScoredInstance {
                id: inst.id.clone(),
                exact_match: exact_match(&inst.gold_texts(), &pred.sentences),
                score,
            })
        })
        .collect();

    let mut scored = Vec::new();
    let mut skipped_ids = Vec::new();
    for (inst, r) in instances.iter().zip(results) {
        match r {
            Ok(s) => scored.push(s),
            Err(_) => skipped_ids.push(inst.id.clone()),
        }
    }

    let all: Vec<&InstanceScore> = scored.iter().map(|s| &s.score).collect();
    let macro_avg = Prf::macro_average(&all);
    let micro = Prf::micro_average(&all);
    let mut groups: BTreeMap<Coordinator, Vec<&InstanceScore>> = BTreeMap::new();
    for s in &all {
        groups
            .entry(s.conjunction.expect("set above"))
            .or_default()
            .push(s);
    }
    let per_conjunction = groups
        .into_iter()
        .map(|(conjunction, ss)| ConjunctionRow {
            conjunction,
            instances: ss.len(),
            macro_avg: Prf::macro_average(&ss),
            micro: Prf::micro_average(&ss),
        })
        .collect();
    let exact = if scored.is_empty() {
        0.0
    } else {
        scored.iter().filter(|s| s.exact_match).count() as f64 / scored.len() as f64
    };

    Ok(EvalReport {
        mode,
        overall: match mode {
            Aggregation::Macro => macro_avg,
            Aggregation::Micro => micro,
        },
        macro_avg,
        micro,
        per_conjunction,
        exact_match: exact,
        instances: scored.len(),
        skipped: skipped_ids.len(),
        skipped_ids,
        per_instance: keep_per_instance.then_some(scored),
    })
}

/// Plain-text table: overall recall/precision/F1 plus per-conjunction F1
/// and exact match, values in percent.
pub fn render_table(report: &EvalReport, system: &str) -> String {
    let pct = |x: f64| format!("{:.1}", 100.0 * x);
    let mut header = vec!["System", "R", "P", "F1"];
    let conj: Vec<&ConjunctionRow> = report.per_conjunction.iter().collect();
    let names: Vec<String> = conj
        .iter()
        .map(|r| format!("F1[{}]", r.conjunction))
        .collect();
    header.extend(names.iter().map(String::as_str));
    header.push("EM");
    let chosen = |row: &ConjunctionRow| match report.mode {
        Aggregation::Macro => row.macro_avg.f1,
        Aggregation::Micro => row.micro.f1,
    };
    let mut values = vec![
        system.to_string(),
        pct(report.overall.recall),
        pct(report.overall.precision),
        pct(report.overall.f1),
    ];
    values.extend(conj.iter().map(|r| pct(chosen(r))));
    values.push(pct(report.exact_match));

    let widths: Vec<usize> = header
        .iter()
        .zip(&values)
        .map(|(h, v)| h.len().max(v.len()))
        .collect();
    let mut out = String::new();
    for row in [
        header.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
        values,
    ] {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    }
    out
}
