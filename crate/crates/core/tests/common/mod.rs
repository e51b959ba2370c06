//! Shared test helpers: fixture loading, random trees and two independent
//! oracles (a naive nucleus extractor and a brute-force pattern enumerator).
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use conjr_core::dataset::read_instances;
use conjr_core::pattern::{EdgeLabels, NodeClass, PatternSpec};
use conjr_core::{parse_conllu, DepGraph, Instance, LabelProfile, Token};
use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Core's fixture directory, also when this module is included from another
/// crate's tests.
pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(rel)).unwrap()
}

pub fn graph(rel: &str) -> DepGraph {
    parse_conllu(&read_fixture(rel)).unwrap().remove(0)
}

/// Every single-sentence CoNLL-U fixture shipped with the crate.
pub fn all_fixture_graphs() -> Vec<(String, DepGraph)> {
    let mut out = Vec::new();
    for sub in ["conllu", "patterns"] {
        let mut paths: Vec<_> = std::fs::read_dir(fixture_dir().join(sub))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        paths.sort();
        for p in paths {
            let text = std::fs::read_to_string(&p).unwrap();
            for g in parse_conllu(&text).unwrap() {
                out.push((p.file_name().unwrap().to_string_lossy().into_owned(), g));
            }
        }
    }
    out
}

/// Vocabulary a random tree draws from.
pub struct Vocab<'a> {
    pub upos: &'a [&'a str],
    pub deprels: &'a [&'a str],
    pub forms: &'a [&'a str],
}

pub const UPOS: &[&str] = &[
    "VERB", "VERB", "AUX", "NOUN", "NOUN", "PROPN", "ADJ", "NUM", "ADP", "ADP", "ADV", "PART",
    "CCONJ", "PRON", "DET", "PUNCT",
];

pub const DEPRELS: &[&str] = &[
    "nsubj",
    "nsubjpass",
    "expl",
    "dobj",
    "obj",
    "pobj",
    "iobj",
    "attr",
    "oprd",
    "prep",
    "agent",
    "pcomp",
    "neg",
    "conj",
    "cc",
    "compound",
    "xcomp",
    "ccomp",
    "aux",
    "advmod",
    "punct",
    "det",
    "amod",
];

pub const FORMS: &[&str] = &[
    "Josh", "likes", "wine", "and", "or", "but", "water", "in", "not", "Jane",
];

pub const DEFAULT_VOCAB: Vocab<'static> = Vocab {
    upos: UPOS,
    deprels: DEPRELS,
    forms: FORMS,
};

fn xpos_for<R: Rng>(rng: &mut R, upos: &str) -> String {
    if rng.gen_bool(0.2) {
        return "_".into();
    }
    let choices: &[&str] = match upos {
        "VERB" | "AUX" => &["VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "MD"],
        "NOUN" => &["NN", "NNS", "VBG"],
        "PROPN" => &["NNP"],
        "ADJ" => &["JJ", "VBN"],
        "NUM" => &["CD"],
        "ADP" => &["IN"],
        "PUNCT" => &["."],
        _ => &["RB", "DT", "PRP", "CC", "TO"],
    };
    choices.choose(rng).unwrap().to_string()
}

/// A uniformly shaped random tree: every token attaches to a token placed
/// earlier in a random insertion order.
pub fn random_graph<R: Rng>(rng: &mut R, max_tokens: usize, vocab: &Vocab) -> DepGraph {
    let n = rng.gen_range(1..=max_tokens);
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0usize; n + 1];
    for k in 1..n {
        heads[order[k]] = order[rng.gen_range(0..k)];
    }
    let tokens = (1..=n)
        .map(|i| {
            let upos = *vocab.upos.choose(rng).unwrap();
            let form = if upos == "PUNCT" {
                ".".to_string()
            } else if rng.gen_bool(0.5) {
                vocab.forms.choose(rng).unwrap().to_string()
            } else {
                format!("w{}", rng.gen_range(0..4))
            };
            let deprel = if heads[i] == 0 {
                "root".to_string()
            } else {
                vocab.deprels.choose(rng).unwrap().to_string()
            };
            let lemma = form.to_lowercase();
            let xpos = xpos_for(rng, upos);
            Token::new(i, form, lemma, upos, xpos, heads[i], deprel)
        })
        .collect();
    DepGraph::new(tokens, None, None).unwrap()
}

pub type Triple = (String, String, String);

fn naive_is_verb(t: &Token) -> bool {
    const XPOS: [&str; 6] = ["VB", "VBD", "VBG", "VBN", "VBP", "VBZ"];
    if t.xpos == "_" || t.xpos.is_empty() {
        t.upos == "VERB" || t.upos == "AUX"
    } else {
        XPOS.contains(&t.xpos.as_str())
    }
}

/// Rule-by-rule nucleus extraction straight from the label lists, scanning
/// the token list for dependents rather than using any graph index.
pub fn naive_nuclei(g: &DepGraph) -> Vec<Vec<Triple>> {
    const SUBJ: [&str; 3] = ["nsubj", "nsubjpass", "expl"];
    const OBJ: [&str; 6] = ["dobj", "obj", "pobj", "iobj", "attr", "oprd"];
    const PREP: [&str; 2] = ["prep", "agent"];
    const PMOD: [&str; 2] = ["pobj", "pcomp"];
    const NEG: [&str; 1] = ["neg"];

    let toks = g.tokens();
    let kids = |h: usize| {
        toks.iter()
            .filter(move |t| t.head == h && t.upos != "PUNCT")
    };
    let lc = |t: &Token| t.form.to_lowercase();
    let mut bag = Vec::new();
    for v in toks
        .iter()
        .filter(|t| t.upos != "PUNCT" && naive_is_verb(t))
    {
        let mut trips = Vec::new();
        for d in kids(v.index) {
            let l = d.deprel.as_str();
            if SUBJ.contains(&l) || NEG.contains(&l) {
                trips.push((lc(v), l.to_string(), lc(d)));
            }
            if OBJ.contains(&l) {
                trips.push((lc(v), l.to_string(), lc(d)));
                for p in kids(d.index).filter(|p| PREP.contains(&p.deprel.as_str())) {
                    trips.push((lc(d), p.deprel.clone(), lc(p)));
                    for q in kids(p.index).filter(|q| PMOD.contains(&q.deprel.as_str())) {
                        trips.push((lc(p), q.deprel.clone(), lc(q)));
                    }
                }
            }
            if PREP.contains(&l) {
                trips.push((lc(v), l.to_string(), lc(d)));
                for q in kids(d.index).filter(|q| PMOD.contains(&q.deprel.as_str())) {
                    trips.push((lc(d), q.deprel.clone(), lc(q)));
                }
            }
        }
        trips.sort();
        bag.push(trips);
    }
    bag.sort();
    bag
}

/// The engine's bag in the same shape as [`naive_nuclei`].
pub fn engine_nuclei(g: &DepGraph, profile: &LabelProfile) -> Vec<Vec<Triple>> {
    let bag = conjr_core::extract_nuclei([g], profile);
    let mut out = Vec::new();
    for (n, count) in bag.iter() {
        let mut trips: Vec<Triple> = n
            .triplets()
            .iter()
            .map(|t| (t.w1.clone(), t.dep.clone(), t.w2.clone()))
            .collect();
        trips.sort();
        for _ in 0..count {
            out.push(trips.clone());
        }
    }
    out.sort();
    out
}

fn class_tags(c: &NodeClass) -> Option<Vec<&str>> {
    match c {
        NodeClass::Verb => Some(vec!["VERB", "AUX"]),
        NodeClass::NonVerb => Some(vec!["NOUN", "PROPN", "ADJ", "NUM"]),
        NodeClass::Any => None,
        NodeClass::Tags(t) => Some(t.iter().map(String::as_str).collect()),
    }
}

fn edge_labels(e: &EdgeLabels, profile: &LabelProfile) -> Option<BTreeSet<String>> {
    match e {
        EdgeLabels::Any => None,
        EdgeLabels::OneOf(ls) => Some(
            ls.iter()
                .flat_map(|l| match l.strip_prefix('@') {
                    Some(role) => profile.role(role).unwrap().iter().cloned().collect(),
                    None => vec![l.clone()],
                })
                .collect(),
        ),
    }
}

/// A spec with variable names resolved to positions, so that checking an
/// assignment does no lookups.
struct Resolved {
    classes: Vec<Option<Vec<String>>>,
    edges: Vec<(usize, usize, Option<BTreeSet<String>>)>,
    order: Vec<(usize, usize)>,
}

fn resolve(spec: &PatternSpec, profile: &LabelProfile) -> Resolved {
    let var = |name: &str| spec.nodes.iter().position(|n| n.var == name).unwrap();
    Resolved {
        classes: spec
            .nodes
            .iter()
            .map(|n| class_tags(&n.class).map(|t| t.into_iter().map(String::from).collect()))
            .collect(),
        edges: spec
            .edges
            .iter()
            .map(|e| {
                (
                    var(&e.head),
                    var(&e.dependent),
                    edge_labels(&e.labels, profile),
                )
            })
            .collect(),
        order: spec.order.iter().map(|(x, y)| (var(x), var(y))).collect(),
    }
}

fn check(r: &Resolved, g: &DepGraph, a: &[usize]) -> bool {
    let tok = |i: usize| &g.tokens()[i - 1];
    for (class, &i) in r.classes.iter().zip(a) {
        let t = tok(i);
        if t.upos == "PUNCT" {
            return false;
        }
        if let Some(tags) = class {
            if !tags.contains(&t.upos) {
                return false;
            }
        }
    }
    for i in 0..a.len() {
        if a[..i].contains(&a[i]) {
            return false;
        }
    }
    for (h, d, labels) in &r.edges {
        let dep = tok(a[*d]);
        if dep.head != a[*h] {
            return false;
        }
        if let Some(ls) = labels {
            if !ls.contains(&dep.deprel) {
                return false;
            }
        }
    }
    r.order.iter().all(|&(x, y)| a[x] < a[y])
}

/// Checks one full assignment (token index per declared variable) against
/// every constraint of the pattern.
pub fn satisfies(spec: &PatternSpec, profile: &LabelProfile, g: &DepGraph, a: &[usize]) -> bool {
    check(&resolve(spec, profile), g, a)
}

/// Every satisfying assignment, by exhaustive enumeration of all tuples in
/// lexicographic order.
pub fn brute_force(spec: &PatternSpec, profile: &LabelProfile, g: &DepGraph) -> Vec<Vec<usize>> {
    let r = resolve(spec, profile);
    let k = spec.nodes.len();
    let n = g.len();
    let mut out = Vec::new();
    let mut cur = vec![1usize; k];
    if k == 0 {
        return out;
    }
    loop {
        if check(&r, g, &cur) {
            out.push(cur.clone());
        }
        // odometer increment, last position fastest
        let mut pos = k;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if cur[pos] < n {
                cur[pos] += 1;
                for c in cur.iter_mut().skip(pos + 1) {
                    *c = 1;
                }
                break;
            }
        }
    }
}

/// Positions for the pattern variables that respect its order constraints:
/// a sorted sample of distinct slots handed out in topological order.
pub fn ordered_slots(spec: &PatternSpec, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let k = spec.nodes.len();
    let var = |name: &str| spec.nodes.iter().position(|v| v.var == name).unwrap();
    let pairs: Vec<(usize, usize)> = spec.order.iter().map(|(a, b)| (var(a), var(b))).collect();
    let mut topo = Vec::with_capacity(k);
    let mut placed = vec![false; k];
    while topo.len() < k {
        let next = (0..k)
            .find(|&v| !placed[v] && pairs.iter().all(|&(a, b)| b != v || placed[a]))
            .unwrap();
        placed[next] = true;
        topo.push(next);
    }
    let mut sample = rand::seq::index::sample(rng, n, k).into_vec();
    sample.sort_unstable();
    let mut slots = vec![0; k];
    for (v, i) in topo.into_iter().zip(sample) {
        slots[v] = i + 1;
    }
    slots
}

/// A random tree with one instance of `spec` planted into it, followed by a
/// few random label and tag mutations that often turn it into a near miss.
///
/// The planted edges are fixed first; every other token then hangs off a
/// random token that already reaches the root, which keeps the result a tree.
pub fn planted_graph(
    spec: &PatternSpec,
    profile: &LabelProfile,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> DepGraph {
    let base = loop {
        let g = random_graph(rng, n, &DEFAULT_VOCAB);
        if g.len() >= spec.nodes.len() {
            break g;
        }
    };
    let n = base.len();
    let slots = ordered_slots(spec, n, rng);
    let var = |name: &str| spec.nodes.iter().position(|v| v.var == name).unwrap();
    let mut tokens = base.tokens().to_vec();
    for (node, &i) in spec.nodes.iter().zip(&slots) {
        let t = &mut tokens[i - 1];
        match node.class.tags() {
            Some(tags) => t.upos = tags.iter().choose(rng).unwrap().clone(),
            None if t.upos == "PUNCT" => t.upos = "NOUN".into(),
            None => {}
        }
    }
    let mut head: Vec<Option<usize>> = vec![None; n + 1];
    for e in &spec.edges {
        let (h, d) = (slots[var(&e.head)], slots[var(&e.dependent)]);
        head[d] = Some(h);
        tokens[d - 1].deprel = match &e.labels {
            EdgeLabels::Any => DEPRELS.choose(rng).unwrap().to_string(),
            EdgeLabels::OneOf(ls) => {
                let l = ls.choose(rng).unwrap();
                match l.strip_prefix('@') {
                    Some(role) => profile
                        .role(role)
                        .unwrap()
                        .iter()
                        .choose(rng)
                        .unwrap()
                        .clone(),
                    None => l.clone(),
                }
            }
        };
    }
    // a token reaches the root once its head chain ends at a connected token
    let free: Vec<usize> = (1..=n).filter(|&i| head[i].is_none()).collect();
    let root = *free.choose(rng).unwrap();
    let mut connected = vec![false; n + 1];
    connected[root] = true;
    let mut pending: Vec<usize> = free.into_iter().filter(|&i| i != root).collect();
    pending.shuffle(rng);
    let settle = |connected: &mut Vec<bool>, head: &[Option<usize>]| loop {
        let mut changed = false;
        for i in 1..=n {
            if !connected[i] && head[i].is_some_and(|h| connected[h]) {
                connected[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    };
    settle(&mut connected, &head);
    for i in pending {
        let targets: Vec<usize> = (1..=n).filter(|&j| connected[j]).collect();
        head[i] = Some(*targets.choose(rng).unwrap());
        settle(&mut connected, &head);
    }
    for (t, h) in tokens.iter_mut().zip(&head[1..]) {
        t.head = h.unwrap_or(0);
        if t.head == 0 {
            t.deprel = "root".into();
        } else if t.deprel == "root" {
            t.deprel = DEPRELS.choose(rng).unwrap().to_string();
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        let t = tokens.choose_mut(rng).unwrap();
        if rng.gen_bool(0.5) {
            t.upos = UPOS.choose(rng).unwrap().to_string();
        } else if t.head != 0 {
            t.deprel = DEPRELS.choose(rng).unwrap().to_string();
        }
    }
    DepGraph::new(tokens, None, None).expect("planted tree is valid")
}

pub fn max_tokens(vars: usize) -> usize {
    match vars {
        0..=4 => 12,
        5 => 10,
        6 => 8,
        _ => 7,
    }
}

pub fn mini() -> Vec<Instance> {
    read_instances(read_fixture("dataset/mini.jsonl").as_bytes(), false)
        .unwrap()
        .instances
}

/// Whether the gold rewrites carry a nucleus the input lacks, by the naive
/// extractor. Clause-level coordination does not: each rewrite keeps one of
/// the input's verbs with its full argument set.
pub fn gold_adds_nuclei(inst: &Instance) -> bool {
    let mut input = naive_nuclei(&inst.input_graph().unwrap());
    inst.gold_graphs()
        .unwrap()
        .iter()
        .flat_map(naive_nuclei)
        .any(|n| match input.iter().position(|m| *m == n) {
            Some(pos) => {
                input.remove(pos);
                false
            }
            None => true,
        })
}

/// `n` instances drawn from the mini dataset with exactly `round(q * n)`
/// non-rewritable ones, shuffled. Rewritable instances are drawn from those
/// whose gold adds nuclei.
pub fn synthetic_corpus(q: f64, n: usize, seed: u64) -> (Vec<Instance>, usize) {
    let pool = mini();
    let (neg, pos): (Vec<_>, Vec<_>) = pool.into_iter().partition(|i| !i.rewritable);
    let pos: Vec<_> = pos.into_iter().filter(gold_adds_nuclei).collect();
    assert_eq!(pos.len(), 17);
    assert!(!neg.is_empty() && !pos.is_empty());
    let n_neg = (q * n as f64).round() as usize;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let src = if k < n_neg {
            &neg[k % neg.len()]
        } else {
            &pos[k % pos.len()]
        };
        let mut inst = src.clone();
        inst.id = format!("syn-{k}");
        out.push(inst);
    }
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (out, n_neg)
}
