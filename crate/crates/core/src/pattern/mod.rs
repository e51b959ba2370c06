//! Dependency-graph patterns for suspicious coordination structures.

mod compile;
mod matcher;
mod miner;
mod spec;

pub use compile::{compile_all, compile_pattern, CompileError, CompiledPattern};
pub use matcher::{detect, match_pattern, PatternMatch};
pub use miner::{candidates, mine_corpus, CandidateRecord, MineConfig, MineCounters};
pub use spec::{
    builtin_specs, dump_catalog, parse_catalog, CatalogError, EdgeLabels, EdgeSpec, Family,
    NodeClass, NodeSpec, PatternSpec, NONVERB_CLASS, VERB_CLASS,
};

use crate::profile::LabelProfile;

/// The builtin catalog compiled against `profile`.
pub fn builtin_patterns(profile: &LabelProfile) -> Vec<CompiledPattern> {
    compile_all(&builtin_specs(), profile).expect("builtin catalog compiles")
}
