//! Inputs for the benchmarks, built from the core crate's frozen fixtures.

use conjr_core::dataset::read_instances;
use conjr_core::{parse_conllu, DepGraph, Instance};

const MINI: &str = include_str!("../../core/fixtures/dataset/mini.jsonl");

const PATTERN_FIXTURES: [&str; 21] = [
    include_str!("../../core/fixtures/patterns/p01.conllu"),
    include_str!("../../core/fixtures/patterns/p02.conllu"),
    include_str!("../../core/fixtures/patterns/p03.conllu"),
    include_str!("../../core/fixtures/patterns/p04.conllu"),
    include_str!("../../core/fixtures/patterns/p05.conllu"),
    include_str!("../../core/fixtures/patterns/p06.conllu"),
    include_str!("../../core/fixtures/patterns/p07.conllu"),
    include_str!("../../core/fixtures/patterns/p08.conllu"),
    include_str!("../../core/fixtures/patterns/p09.conllu"),
    include_str!("../../core/fixtures/patterns/p10.conllu"),
    include_str!("../../core/fixtures/patterns/p11.conllu"),
    include_str!("../../core/fixtures/patterns/p12.conllu"),
    include_str!("../../core/fixtures/patterns/p13.conllu"),
    include_str!("../../core/fixtures/patterns/p14.conllu"),
    include_str!("../../core/fixtures/patterns/p15.conllu"),
    include_str!("../../core/fixtures/patterns/p16.conllu"),
    include_str!("../../core/fixtures/patterns/p17.conllu"),
    include_str!("../../core/fixtures/patterns/p18.conllu"),
    include_str!("../../core/fixtures/patterns/p19.conllu"),
    include_str!("../../core/fixtures/patterns/p20.conllu"),
    include_str!("../../core/fixtures/patterns/p21.conllu"),
];

/// The fixture mini-dataset repeated until it holds `n` instances, with
/// unique ids.
pub fn dataset(n: usize) -> Vec<Instance> {
    let base = read_instances(MINI.as_bytes(), false)
        .expect("fixture dataset loads")
        .instances;
    (0..n)
        .map(|i| {
            let mut inst = base[i % base.len()].clone();
            inst.id = format!("{}-{i}", inst.id);
            inst
        })
        .collect()
}

/// A CoNLL-U document of `n` sentences cycling through the pattern fixtures
/// and the mini-dataset inputs.
pub fn corpus(n: usize) -> String {
    let inputs: Vec<String> = dataset(20).into_iter().map(|i| i.conllu).collect();
    let pool: Vec<&str> = PATTERN_FIXTURES
        .iter()
        .copied()
        .chain(inputs.iter().map(String::as_str))
        .collect();
    let mut out = String::new();
    for i in 0..n {
        out.push_str(pool[i % pool.len()].trim_end());
        out.push_str("\n\n");
    }
    out
}

pub fn graphs(n: usize) -> Vec<DepGraph> {
    parse_conllu(&corpus(n)).expect("fixture corpus parses")
}
