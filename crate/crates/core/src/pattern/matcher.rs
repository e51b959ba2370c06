use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::compile::CompiledPattern;
use crate::conjunction::{coordinator_indices, ConjunctionRef, Coordinator};
use crate::depgraph::DepGraph;

/// One binding of a pattern's variables to token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternMatch {
    pub pattern: String,
    /// Variable → 1-based token index, in declaration order.
    pub bindings: IndexMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjunction: Option<ConjunctionRef>,
}

impl PatternMatch {
    /// Bound indices in declaration order.
    pub fn indices(&self) -> Vec<usize> {
        self.bindings.values().copied().collect()
    }
}

/// All bindings of `pattern` in `graph`, sorted lexicographically by bound
/// indices in declaration order. Punctuation never binds, and distinct
/// variables bind distinct tokens.
pub fn match_pattern(pattern: &CompiledPattern, graph: &DepGraph) -> Vec<PatternMatch> {
    let mut found = Vec::new();
    let mut search = Search {
        pattern,
        graph,
        assignment: vec![0; pattern.vars.len()],
        used: vec![false; graph.len() + 1],
        found: &mut found,
    };
    search.extend(0);
    found.sort();
    found
        .into_iter()
        .map(|indices| {
            let conjunction = attribute_conjunction(pattern, graph, &indices);
            PatternMatch {
                pattern: pattern.id.clone(),
                bindings: pattern.vars.iter().cloned().zip(indices).collect(),
                conjunction,
            }
        })
        .collect()
}

struct Search<'a> {
    pattern: &'a CompiledPattern,
    graph: &'a DepGraph,
    /// Token index per variable; 0 while unbound.
    assignment: Vec<usize>,
    used: Vec<bool>,
    found: &'a mut Vec<Vec<usize>>,
}

impl Search<'_> {
    fn extend(&mut self, depth: usize) {
        let p = self.pattern;
        if depth == p.plan.len() {
            self.found.push(self.assignment.clone());
            return;
        }
        let var = p.plan[depth];
        for cand in self.candidates(var) {
            if self.used[cand] || !self.admits(var, cand) {
                continue;
            }
            self.assignment[var] = cand;
            if self.consistent(var) {
                self.used[cand] = true;
                self.extend(depth + 1);
                self.used[cand] = false;
            }
            self.assignment[var] = 0;
        }
    }

    fn candidates(&self, var: usize) -> Vec<usize> {
        for e in &self.pattern.edges {
            if e.dependent == var && self.assignment[e.head] != 0 {
                return self.graph.dependents(self.assignment[e.head]).to_vec();
            }
            if e.head == var && self.assignment[e.dependent] != 0 {
                let head = self.graph.tokens()[self.assignment[e.dependent] - 1].head;
                return if head == 0 { vec![] } else { vec![head] };
            }
        }
        (1..=self.graph.len()).collect()
    }

    fn admits(&self, var: usize, index: usize) -> bool {
        let tok = &self.graph.tokens()[index - 1];
        if tok.is_punct() {
            return false;
        }
        match &self.pattern.classes[var] {
            None => true,
            Some(tags) => tags.contains(&tok.upos),
        }
    }

    /// Checks every constraint between `var` and already bound variables.
    fn consistent(&self, var: usize) -> bool {
        let a = &self.assignment;
        let edges_ok = self
            .pattern
            .edges
            .iter()
            .filter(|e| {
                (e.head == var || e.dependent == var) && a[e.head] != 0 && a[e.dependent] != 0
            })
            .all(|e| {
                let dep = &self.graph.tokens()[a[e.dependent] - 1];
                dep.head == a[e.head] && e.labels.as_ref().is_none_or(|ls| ls.contains(&dep.deprel))
            });
        edges_ok
            && self
                .pattern
                .order
                .iter()
                .filter(|&&(x, y)| (x == var || y == var) && a[x] != 0 && a[y] != 0)
                .all(|&(x, y)| a[x] < a[y])
    }
}

/// Locates the coordinator a match is about.
///
/// Takes the matched `conj` edge (an edge whose label set names `conj`
/// first, then any bound edge whose dependent is attached as `conj`) and
/// returns the `cc` dependent of its head nearest before the conjunct.
/// Otherwise falls back to the nearest coordinator before the conjunct, or
/// before the rightmost bound token when no conj edge was matched, and
/// finally to the nearest coordinator anywhere.
fn attribute_conjunction(
    pattern: &CompiledPattern,
    graph: &DepGraph,
    indices: &[usize],
) -> Option<ConjunctionRef> {
    let coordinators = coordinator_indices(graph);
    if coordinators.is_empty() {
        return None;
    }
    let tok = |i: usize| &graph.tokens()[i - 1];
    let declared = pattern
        .edges
        .iter()
        .filter(|e| e.labels.as_ref().is_some_and(|ls| ls.contains("conj")));
    let bound_conj = pattern
        .edges
        .iter()
        .filter(|e| tok(indices[e.dependent]).deprel == "conj");
    let conj_edge = declared
        .chain(bound_conj)
        .map(|e| (indices[e.head], indices[e.dependent]))
        .find(|&(_, d)| tok(d).deprel == "conj");

    if let Some((head, dep)) = conj_edge {
        let cc = graph
            .dependents(head)
            .iter()
            .copied()
            .filter(|&i| i < dep && tok(i).deprel == "cc")
            .filter(|&i| Coordinator::from_form(&tok(i).form).is_some())
            .max();
        if let Some(i) = cc {
            return ConjunctionRef::at(graph, i);
        }
    }

    let anchor = conj_edge
        .map(|(_, d)| d)
        .or_else(|| indices.iter().copied().max())
        .unwrap_or(0);
    let chosen = coordinators
        .iter()
        .copied()
        .filter(|&i| i < anchor)
        .max()
        .or_else(|| {
            coordinators
                .iter()
                .copied()
                .min_by_key(|&i| (i.abs_diff(anchor), i))
        })?;
    ConjunctionRef::at(graph, chosen)
}

/// Matches of every pattern in a graph that contains at least one `and`,
/// `or` or `but` token.
///
/// Matches are deduplicated by (pattern id, bindings) and returned sorted
/// by pattern id and then by bound indices, so the result does not depend
/// on the order of `patterns`.
pub fn detect(graph: &DepGraph, patterns: &[CompiledPattern]) -> Vec<PatternMatch> {
    if coordinator_indices(graph).is_empty() {
        return Vec::new();
    }
    let mut unique: BTreeMap<(String, Vec<usize>), PatternMatch> = BTreeMap::new();
    for p in patterns {
        for m in match_pattern(p, graph) {
            unique.entry((m.pattern.clone(), m.indices())).or_insert(m);
        }
    }
    unique.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::parse_conllu;
    use crate::pattern::{builtin_patterns, compile_pattern, parse_catalog};
    use crate::profile::LabelProfile;

    const F4: &str = include_str!("../../fixtures/conllu/f4.conllu");
    const F1: &str = include_str!("../../fixtures/conllu/f1.conllu");

    fn builtin(id: &str) -> CompiledPattern {
        builtin_patterns(&LabelProfile::default())
            .into_iter()
            .find(|p| p.id() == id)
            .unwrap()
    }

    #[test]
    fn p01_on_f4() {
        let g = &parse_conllu(F4).unwrap()[0];
        let ms = match_pattern(&builtin("P01"), g);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].bindings["verb"], 2);
        assert_eq!(ms[0].bindings["nonverb"], 6);
        let c = ms[0].conjunction.unwrap();
        assert_eq!((c.form, c.index), (Coordinator::And, 4));
    }

    #[test]
    fn p06_on_f4() {
        let g = &parse_conllu(F4).unwrap()[0];
        let ms = match_pattern(&builtin("P06"), g);
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].bindings["head"], 6);
        assert_eq!(ms[0].bindings["subj"], 5);
        assert_eq!(ms[0].conjunction.unwrap().index, 4);
    }

    #[test]
    fn no_conj_edge_no_match() {
        let g = &parse_conllu(F1).unwrap()[0];
        assert!(match_pattern(&builtin("P01"), g).is_empty());
        assert!(detect(g, &builtin_patterns(&LabelProfile::default())).is_empty());
    }

    #[test]
    fn detect_on_f4_finds_p01_and_p06() {
        let g = &parse_conllu(F4).unwrap()[0];
        let ms = detect(g, &builtin_patterns(&LabelProfile::default()));
        let ids: Vec<_> = ms.iter().map(|m| m.pattern.as_str()).collect();
        assert!(ids.contains(&"P01") && ids.contains(&"P06"), "{ids:?}");
        assert!(ms.iter().all(|m| m.conjunction.unwrap().index == 4));
    }

    #[test]
    fn bindings_serialize_in_declaration_order() {
        let g = &parse_conllu(F4).unwrap()[0];
        let m = &match_pattern(&builtin("P06"), g)[0];
        let json = serde_json::to_string(&m.bindings).unwrap();
        assert_eq!(json, r#"{"head":6,"subj":5}"#);
    }

    #[test]
    fn unconnected_variables_enumerate_lexicographically() {
        let spec = &parse_catalog("pattern X\nfamily pos-mismatch\nnode a any\nnode b any\nend\n")
            .unwrap()[0];
        let p = compile_pattern(spec, &LabelProfile::default()).unwrap();
        let g = &parse_conllu(F1).unwrap()[0];
        let got: Vec<_> = match_pattern(&p, g).iter().map(|m| m.indices()).collect();
        assert_eq!(
            got,
            [[1, 2], [1, 3], [2, 1], [2, 3], [3, 1], [3, 2]].map(|x| x.to_vec())
        );
    }

    #[test]
    fn punctuation_never_binds() {
        let spec = &parse_catalog("pattern X\nfamily pos-mismatch\nnode a any\nend\n").unwrap()[0];
        let p = compile_pattern(spec, &LabelProfile::default()).unwrap();
        let g = &parse_conllu(F4).unwrap()[0];
        assert_eq!(match_pattern(&p, g).len(), 6);
    }
}
