use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use super::spec::{EdgeLabels, Family, PatternSpec};
use crate::profile::LabelProfile;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("pattern {pattern}: no variables declared")]
    NoVariables { pattern: String },
    #[error("pattern {pattern}: variable {var:?} declared twice")]
    DuplicateVariable { pattern: String, var: String },
    #[error("pattern {pattern}: unknown variable {var:?}")]
    UnknownVariable { pattern: String, var: String },
    #[error("pattern {pattern}: edge from {var:?} to itself")]
    SelfEdge { pattern: String, var: String },
    #[error("pattern {pattern}: unknown role {role:?}")]
    UnknownRole { pattern: String, role: String },
    #[error("pattern {pattern}: order constraints are cyclic")]
    CyclicOrder { pattern: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CompiledEdge {
    pub head: usize,
    pub dependent: usize,
    /// `None` admits any label.
    pub labels: Option<BTreeSet<String>>,
}

/// A validated pattern with role references expanded and variables replaced
/// by their declaration index. Immutable and cheap to share.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledPattern {
    pub(crate) id: String,
    pub(crate) family: Family,
    pub(crate) vars: Vec<String>,
    /// `None` admits any UPOS.
    pub(crate) classes: Vec<Option<BTreeSet<String>>>,
    pub(crate) edges: Vec<CompiledEdge>,
    pub(crate) order: Vec<(usize, usize)>,
    /// Variable binding order used by the matcher.
    pub(crate) plan: Vec<usize>,
}

impl CompiledPattern {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

pub fn compile_pattern(
    spec: &PatternSpec,
    profile: &LabelProfile,
) -> Result<CompiledPattern, CompileError> {
    let pattern = spec.id.clone();
    if spec.nodes.is_empty() {
        return Err(CompileError::NoVariables { pattern });
    }
    let mut index = HashMap::new();
    for (i, n) in spec.nodes.iter().enumerate() {
        if index.insert(n.var.as_str(), i).is_some() {
            return Err(CompileError::DuplicateVariable {
                pattern,
                var: n.var.clone(),
            });
        }
    }
    let lookup = |var: &str| {
        index
            .get(var)
            .copied()
            .ok_or_else(|| CompileError::UnknownVariable {
                pattern: pattern.clone(),
                var: var.to_string(),
            })
    };

    let mut edges = Vec::with_capacity(spec.edges.len());
    for e in &spec.edges {
        let head = lookup(&e.head)?;
        let dependent = lookup(&e.dependent)?;
        if head == dependent {
            return Err(CompileError::SelfEdge {
                pattern,
                var: e.head.clone(),
            });
        }
        let labels = match &e.labels {
            EdgeLabels::Any => None,
            EdgeLabels::OneOf(ls) => {
                let mut set = BTreeSet::new();
                for l in ls {
                    if let Some(role) = l.strip_prefix('@') {
                        let members =
                            profile
                                .role(role)
                                .ok_or_else(|| CompileError::UnknownRole {
                                    pattern: pattern.clone(),
                                    role: role.to_string(),
                                })?;
                        set.extend(members.iter().cloned());
                    } else {
                        set.insert(l.clone());
                    }
                }
                Some(set)
            }
        };
        edges.push(CompiledEdge {
            head,
            dependent,
            labels,
        });
    }

    let mut order = Vec::with_capacity(spec.order.len());
    for (a, b) in &spec.order {
        order.push((lookup(a)?, lookup(b)?));
    }
    if has_cycle(spec.nodes.len(), &order) {
        return Err(CompileError::CyclicOrder { pattern });
    }

    let plan = binding_plan(spec.nodes.len(), &edges);
    Ok(CompiledPattern {
        id: spec.id.clone(),
        family: spec.family,
        vars: spec.nodes.iter().map(|n| n.var.clone()).collect(),
        classes: spec.nodes.iter().map(|n| n.class.tags()).collect(),
        edges,
        order,
        plan,
    })
}

/// Compiles every spec, failing on the first error.
pub fn compile_all(
    specs: &[PatternSpec],
    profile: &LabelProfile,
) -> Result<Vec<CompiledPattern>, CompileError> {
    specs.iter().map(|s| compile_pattern(s, profile)).collect()
}

fn has_cycle(n: usize, order: &[(usize, usize)]) -> bool {
    let mut indegree = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in order {
        succ[a].push(b);
        indegree[b] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for &w in &succ[v] {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                ready.push(w);
            }
        }
    }
    seen < n
}

/// Orders variables so that, whenever possible, each one is connected by an
/// edge to one bound earlier. Candidates then come from the tree structure
/// instead of a scan over all tokens.
fn binding_plan(n: usize, edges: &[CompiledEdge]) -> Vec<usize> {
    let mut plan = Vec::with_capacity(n);
    let mut bound = vec![false; n];
    while plan.len() < n {
        let next = (0..n)
            .filter(|&v| !bound[v])
            .find(|&v| {
                edges.iter().any(|e| {
                    (e.head == v && bound[e.dependent]) || (e.dependent == v && bound[e.head])
                })
            })
            .or_else(|| (0..n).find(|&v| !bound[v]))
            .expect("an unbound variable remains");
        bound[next] = true;
        plan.push(next);
    }
    plan
}
