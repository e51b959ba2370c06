//! External parser subprocess and the upstream dataset converter.

use std::io::Write;
use std::process::{Command, Stdio};

use anyhow::{anyhow, bail, Context, Result};
use conjr_core::dataset::Rewrite;
use conjr_core::{
    parse_conllu, serialize_conllu, ConjunctionRef, Coordinator, DepGraph, Instance, Split,
};
use serde::Deserialize;

/// Runs `cmd` through `sh -c`, feeding one sentence per line on stdin, and
/// returns one CoNLL-U block per input sentence.
pub fn parse_sentences(cmd: &str, sentences: &[String]) -> Result<Vec<String>> {
    if sentences.is_empty() {
        return Ok(Vec::new());
    }
    let mut input = String::new();
    for s in sentences {
        // the contract is line-oriented
        input.push_str(&s.replace(['\n', '\r'], " "));
        input.push('\n');
    }
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .with_context(|| format!("cannot start parser command {cmd:?}"))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    // write from a thread so a parser that streams output cannot deadlock us
    let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
    let out = child.wait_with_output().context("parser command failed")?;
    let write_result = writer.join().expect("stdin writer");
    if !out.status.success() {
        bail!(
            "parser command exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        );
    }
    // a parser may legitimately stop reading early; only complain if it
    // also succeeded without consuming its input
    if let Err(e) = write_result {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            return Err(e).context("writing to parser command");
        }
    }
    let text = String::from_utf8(out.stdout).context("parser output is not UTF-8")?;
    let graphs = parse_conllu(&text).context("parser output is not valid CoNLL-U")?;
    if graphs.len() != sentences.len() {
        bail!(
            "parser returned {} sentences for {} inputs",
            graphs.len(),
            sentences.len()
        );
    }
    // keep the raw sentence as the text comment so character spans refer to it
    graphs
        .into_iter()
        .zip(sentences)
        .map(|(g, s)| {
            let text = g.text().map(str::to_string).or_else(|| Some(s.clone()));
            let id = g.id().map(str::to_string);
            let g = DepGraph::new(g.tokens().to_vec(), text, id)?;
            Ok(serialize_conllu([&g]))
        })
        .collect()
}

/// One record of the upstream release. Field names vary between dumps, so
/// the common spellings are accepted.
#[derive(Debug, Deserialize)]
struct UpstreamRecord {
    #[serde(default)]
    id: Option<serde_json::Value>,
    #[serde(alias = "text", alias = "input")]
    sentence: String,
    #[serde(alias = "conj", alias = "coordinator")]
    conjunction: String,
    /// Character offset of the marked conjunction, when several occur.
    #[serde(default, alias = "conjunction_start", alias = "conj_start")]
    conjunction_char_start: Option<usize>,
    #[serde(default, alias = "resolved", alias = "output", alias = "answers")]
    rewrites: Option<Rewrites>,
    #[serde(default)]
    split: Option<String>,
    #[serde(default)]
    source: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Rewrites {
    List(Vec<String>),
    Joined(String),
}

impl Rewrites {
    fn into_vec(self) -> Vec<String> {
        match self {
            Rewrites::List(v) => v,
            Rewrites::Joined(s) => s.lines().map(str::to_string).collect(),
        }
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
    }
}

fn parse_split(raw: Option<&str>) -> Result<Split> {
    Ok(match raw.map(str::to_ascii_lowercase).as_deref() {
        None | Some("") => Split::Unassigned,
        Some("train") => Split::Train,
        Some("validation" | "valid" | "dev" | "val") => Split::Validation,
        Some("test") => Split::Test,
        Some(other) => bail!("unknown split {other:?}"),
    })
}

/// Converts upstream JSON-lines into instances, parsing the input and every
/// rewrite with `parser`. A record with fewer than two rewrites is
/// non-rewritable.
pub fn convert<P>(text: &str, mut parser: P) -> Result<Vec<Instance>>
where
    P: FnMut(&[String]) -> Result<Vec<String>>,
{
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: UpstreamRecord =
            serde_json::from_str(line).with_context(|| format!("line {}", i + 1))?;
        records.push((i + 1, rec));
    }

    let mut to_parse = Vec::new();
    let mut plans = Vec::new();
    for (line, mut rec) in records {
        let rewrites = rec
            .rewrites
            .take()
            .map(Rewrites::into_vec)
            .unwrap_or_default();
        let rewrites = if rewrites.len() >= 2 {
            rewrites
        } else {
            Vec::new()
        };
        let first = to_parse.len();
        to_parse.push(rec.sentence.clone());
        to_parse.extend(rewrites.iter().cloned());
        plans.push((line, rec, rewrites, first));
    }
    let parses = parser(&to_parse)?;

    let mut out = Vec::with_capacity(plans.len());
    for (line, rec, rewrites, first) in plans {
        let ctx = || format!("line {line}");
        let form = Coordinator::from_form(&rec.conjunction)
            .ok_or_else(|| anyhow!("unknown conjunction {:?}", rec.conjunction))
            .with_context(ctx)?;
        let conllu = parses[first].clone();
        let graph = parse_conllu(&conllu)
            .with_context(ctx)?
            .pop()
            .ok_or_else(|| anyhow!("empty parse"))
            .with_context(ctx)?;
        let spans = graph.char_spans();
        let index = (1..=graph.len())
            .filter(|&i| {
                graph.tokens()[i - 1]
                    .form
                    .eq_ignore_ascii_case(form.as_str())
                    && rec
                        .conjunction_char_start
                        .is_none_or(|c| spans[i - 1].0 == c)
            })
            .min()
            .ok_or_else(|| anyhow!("no {form:?} token in the parse"))
            .with_context(ctx)?;
        let conjunction = ConjunctionRef::at(&graph, index).expect("coordinator token");
        let id = match rec.id {
            Some(serde_json::Value::String(s)) => s,
            Some(v) => v.to_string(),
            None => format!("r{line:06}"),
        };
        let rewritable = !rewrites.is_empty();
        let rewrites = rewrites
            .into_iter()
            .enumerate()
            .map(|(k, text)| Rewrite {
                text,
                conllu: Some(parses[first + 1 + k].clone()),
            })
            .collect();
        let inst = Instance {
            id,
            source: rec.source.unwrap_or_else(|| "upstream".into()),
            text: rec.sentence,
            conjunction,
            conllu,
            rewritable,
            rewrites,
            not_rewritable_reason: None,
            split: parse_split(rec.split.as_deref()).with_context(ctx)?,
        };
        inst.check().map_err(|e| anyhow!(e)).with_context(ctx)?;
        out.push(inst);
    }
    Ok(out)
}
