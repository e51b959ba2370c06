//! Conjunct resolution toolkit.
//!
//! Mines coordination structures with suspected verbal omissions from
//! dependency-parsed text, validates and consolidates human rewrites, and
//! scores system rewrites with a verb-nucleus precision/recall metric.

pub mod annotation;
pub mod conjunction;
pub mod conllu;
pub mod dataset;
pub mod depgraph;
pub mod metric;
pub mod nucleus;
pub mod pattern;
pub mod profile;
pub mod text;

pub use annotation::{
    consolidate, iaa, rank_annotators, validate, Consolidation, IaaReport, RewriteSet,
    ValidationReport, Violation, ViolationCode,
};
pub use conjunction::{ConjunctionRef, Coordinator};
pub use conllu::{parse_conllu, serialize_conllu, ConlluError};
pub use dataset::{DatasetStats, Instance, Split, SplitSizes};
pub use depgraph::{DepGraph, GraphError, Token};
pub use metric::{
    evaluate_corpus, exact_match, score_instance, Aggregation, CalibrationMode, EvalReport,
    InstanceScore, Prediction,
};
pub use nucleus::{
    extract_nuclei, nucleus_of_verb, NucleusBag, NucleusError, Triplet, VerbNucleus,
};
pub use pattern::{
    builtin_patterns, compile_pattern, detect, match_pattern, CompiledPattern, PatternMatch,
    PatternSpec,
};
pub use profile::{LabelProfile, ProfileError};
