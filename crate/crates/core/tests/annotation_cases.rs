mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use conjr_core::annotation::{AnnotationError, Flags, Method};
use conjr_core::dataset::read_instances;
use conjr_core::text::jaccard;
use conjr_core::{
    consolidate, iaa, parse_conllu, rank_annotators, validate, Coordinator, DepGraph, RewriteSet,
    ViolationCode,
};
use proptest::prelude::*;

fn sub(annotator: &str, sentences: &[&str]) -> RewriteSet {
    RewriteSet {
        instance_id: "i1".into(),
        annotator: annotator.into(),
        rewritable: true,
        sentences: sentences.iter().map(|s| s.to_string()).collect(),
        not_rewritable_reason: None,
        flags: Flags::default(),
    }
}

fn unchanged(annotator: &str) -> RewriteSet {
    RewriteSet {
        rewritable: false,
        sentences: vec![],
        not_rewritable_reason: Some("already simple".into()),
        ..sub(annotator, &[])
    }
}

fn f3() -> DepGraph {
    graph("conllu/f3.conllu")
}

fn codes(sentences: &[&str]) -> Vec<ViolationCode> {
    validate(&f3(), Coordinator::And, &sub("a", sentences), None).codes()
}

#[test]
fn correct_rewrite_passes() {
    let r = validate(
        &f3(),
        Coordinator::And,
        &sub("a", &["Josh likes wine.", "Jane likes water."]),
        None,
    );
    assert!(r.passed(), "{r:?}");
    let parses = [graph("conllu/f1.conllu"), graph("conllu/f2.conllu")];
    let r = validate(
        &f3(),
        Coordinator::And,
        &sub("a", &["Josh likes wine", "Jane likes water"]),
        Some(&parses),
    );
    assert!(r.passed(), "{r:?}");
}

#[test]
fn each_code_fires_alone() {
    assert_eq!(
        codes(&["Josh likes wine.", "josh likes WINE"]),
        [ViolationCode::DuplicateSentence]
    );
    assert_eq!(
        codes(&["Josh likes wine.", "Jane likes water and wine."]),
        [ViolationCode::ConjunctionPresent]
    );
    assert_eq!(
        codes(&["Josh likes wine.", "Jane likes delicious water."]),
        [ViolationCode::NewContentWord]
    );
    let eleven: Vec<String> = ["Josh", "Jane", "wine", "water"]
        .iter()
        .flat_map(|a| ["Josh", "Jane", "wine", "water"].map(move |b| (a, b)))
        .filter(|(a, b)| a != &b)
        .take(11)
        .map(|(a, b)| format!("{a} likes {b}."))
        .collect();
    let eleven: Vec<&str> = eleven.iter().map(String::as_str).collect();
    assert_eq!(codes(&eleven), [ViolationCode::TooManyRewrites]);
    assert!(codes(&eleven[..10]).is_empty());
    assert_eq!(codes(&[]), [ViolationCode::EmptySet]);
}

#[test]
fn violations_carry_sentence_locations() {
    let r = validate(
        &f3(),
        Coordinator::And,
        &sub("a", &["Josh likes wine.", "Jane likes water and wine."]),
        None,
    );
    assert_eq!(r.violations[0].sentence, Some(2));
    let r = validate(
        &f3(),
        Coordinator::And,
        &sub("a", &["Josh likes wine.", "Jane likes delicious water."]),
        None,
    );
    assert_eq!(r.violations[0].sentence, Some(2));
    assert!(r.violations[0].detail.contains("delicious"));
}

#[test]
fn conjunction_check_uses_the_marked_form_only() {
    // "or" is marked, so a rewrite keeping "and" is not flagged for it
    let r = validate(
        &f3(),
        Coordinator::Or,
        &sub("a", &["Josh likes wine and water.", "Jane likes water."]),
        None,
    );
    assert!(!r.codes().contains(&ViolationCode::ConjunctionPresent));
    // a substring is not a standalone token
    assert!(codes(&[
        "Josh likes wine.",
        "Jane likes water.",
        "Jane likes wine, Josh water"
    ])
    .iter()
    .all(|c| *c != ViolationCode::ConjunctionPresent));
}

#[test]
fn inflection_variants_pass() {
    assert!(codes(&["Josh like wine.", "Jane like water."]).is_empty());
    let parses = parse_conllu(
        "1\tJosh\tJosh\tPROPN\tNNP\t_\t2\tnsubj\t_\t_\n2\tlike\tlike\tVERB\tVBP\t_\t0\troot\t_\t_\n3\twine\twine\tNOUN\tNN\t_\t2\tdobj\t_\t_\n\n\
         1\tJane\tJane\tPROPN\tNNP\t_\t2\tnsubj\t_\t_\n2\tlike\tlike\tVERB\tVBP\t_\t0\troot\t_\t_\n3\twater\twater\tNOUN\tNN\t_\t2\tdobj\t_\t_\n",
    )
    .unwrap();
    let r = validate(
        &f3(),
        Coordinator::And,
        &sub("a", &["Josh like wine", "Jane like water"]),
        Some(&parses),
    );
    assert!(r.passed(), "{r:?}");
}

#[test]
fn non_rewritable_passes_vacuously() {
    assert!(validate(&f3(), Coordinator::And, &unchanged("a"), None).passed());
}

#[test]
fn validation_is_idempotent() {
    let s = sub("a", &["Josh likes wine.", "Jane likes delicious water."]);
    assert_eq!(
        validate(&f3(), Coordinator::And, &s, None),
        validate(&f3(), Coordinator::And, &s, None)
    );
}

#[test]
fn every_mini_gold_rewrite_passes() {
    let data = read_instances(read_fixture("dataset/mini.jsonl").as_bytes(), false).unwrap();
    assert_eq!(data.instances.len(), 20);
    for inst in &data.instances {
        let input = inst.input_graph().unwrap();
        let s = RewriteSet {
            instance_id: inst.id.clone(),
            annotator: "gold".into(),
            rewritable: inst.rewritable,
            sentences: if inst.rewritable {
                inst.gold_texts()
            } else {
                vec![]
            },
            not_rewritable_reason: inst.not_rewritable_reason.clone(),
            flags: Flags::default(),
        };
        let fallback = validate(&input, inst.conjunction.form, &s, None);
        assert!(
            fallback.passed(),
            "{} without parses: {fallback:?}",
            inst.id
        );
        if inst.rewritable {
            let parses = inst.gold_graphs().unwrap();
            let parsed = validate(&input, inst.conjunction.form, &s, Some(&parses));
            assert!(parsed.passed(), "{} with parses: {parsed:?}", inst.id);
        }
    }
}

fn ranking(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(a, s)| (a.to_string(), *s)).collect()
}

#[test]
fn majority_wins() {
    let subs = [
        sub("c", &["Josh likes wine.", "Jane likes water."]),
        sub("b", &["josh likes wine", "Jane likes water!"]),
        sub("a", &["Josh likes wine.", "Jane drinks water."]),
    ];
    let c = consolidate(&subs, &ranking(&[("a", 1.0), ("b", 0.5), ("c", 0.2)])).unwrap();
    assert_eq!(c.method, Method::Majority);
    assert_eq!(c.gold.annotator, "b");
    assert_eq!((c.support, c.submissions), (2, 3));
}

#[test]
fn fallback_to_best_ranked() {
    let subs = [
        sub("a", &["Josh likes wine.", "Jane likes water."]),
        sub("b", &["Josh likes wine.", "Jane water."]),
        sub("c", &["Josh wine.", "Jane likes water."]),
    ];
    let c = consolidate(&subs, &ranking(&[("a", 0.9), ("b", 0.5), ("c", 0.1)])).unwrap();
    assert_eq!(
        (c.method, c.gold.annotator.as_str()),
        (Method::Fallback, "a")
    );
    let c = consolidate(&subs, &ranking(&[("a", 0.1), ("b", 0.5), ("c", 0.9)])).unwrap();
    assert_eq!(
        (c.method, c.gold.annotator.as_str()),
        (Method::Fallback, "c")
    );
    // ties go to the lowest id, and unranked annotators score 0
    let c = consolidate(&subs, &ranking(&[("b", 0.5), ("c", 0.5)])).unwrap();
    assert_eq!(c.gold.annotator, "b");
}

#[test]
fn single_submission_is_fallback() {
    let s = sub("z", &["Josh likes wine.", "Jane likes water."]);
    let c = consolidate(std::slice::from_ref(&s), &BTreeMap::new()).unwrap();
    assert_eq!((c.method, c.gold), (Method::Fallback, s));
}

#[test]
fn non_rewritable_answers_form_one_class() {
    let subs = [unchanged("a"), unchanged("b"), sub("c", &["x.", "y."])];
    let c = consolidate(&subs, &BTreeMap::new()).unwrap();
    assert_eq!(c.method, Method::Majority);
    assert!(!c.gold.rewritable);
}

#[test]
fn consolidation_errors() {
    assert_eq!(
        consolidate(&[], &BTreeMap::new()),
        Err(AnnotationError::NoSubmissions)
    );
    let mut other = sub("b", &["x."]);
    other.instance_id = "i2".into();
    assert!(matches!(
        consolidate(&[sub("a", &["x."]), other], &BTreeMap::new()),
        Err(AnnotationError::MixedInstances(..))
    ));
}

#[test]
fn ranking_is_agreement_rate() {
    let subs = [
        sub("a", &["x.", "y."]),
        sub("b", &["x.", "y."]),
        sub("c", &["x y."]),
    ];
    let gold = subs[0].clone();
    let subs2 = [sub("a", &["p."]), sub("c", &["q."])];
    let gold2 = subs2[1].clone();
    let r = rank_annotators([(&subs[..], &gold), (&subs2[..], &gold2)]);
    assert_eq!(r["a"], 0.5);
    assert_eq!(r["b"], 1.0);
    assert_eq!(r["c"], 0.5);
}

#[test]
fn iaa_examples() {
    let same = vec![sub("a", &["x y."]), sub("b", &["X y"])];
    let r = iaa(&[same]);
    assert_eq!(
        (r.rewrite_agreement, r.exact_match, r.avg_jaccard),
        (1.0, 1.0, 1.0)
    );

    let overlap = vec![sub("a", &["a b c."]), sub("b", &["b c d."])];
    assert_eq!(iaa(&[overlap]).avg_jaccard, 0.5);

    let counts = vec![sub("a", &["a b.", "c."]), sub("b", &["a.", "b.", "c."])];
    let r = iaa(&[counts]);
    assert_eq!(
        (r.rewrite_agreement, r.exact_match, r.avg_jaccard),
        (0.0, 0.0, 1.0)
    );

    let r = iaa(&[vec![sub("a", &["x."])]]);
    assert_eq!((r.instances, r.excluded), (0, 1));
}

fn arb_sub() -> impl Strategy<Value = RewriteSet> {
    let sentence = prop::sample::select(vec![
        "Josh likes wine.",
        "Jane likes water.",
        "josh likes wine",
        "Jane drinks.",
    ]);
    (any::<bool>(), prop::collection::vec(sentence, 1..3)).prop_map(|(unch, ss)| {
        if unch {
            unchanged("_")
        } else {
            sub("_", &ss)
        }
    })
}

proptest! {
    #[test]
    fn consolidation_ignores_submission_order(
        mut subs in prop::collection::vec(arb_sub(), 1..7),
        scores in prop::collection::vec(0u8..4, 7),
        perm in any::<prop::sample::Index>(),
    ) {
        for (i, s) in subs.iter_mut().enumerate() {
            s.annotator = format!("ann{i}");
        }
        let rank: BTreeMap<String, f64> = (0..subs.len())
            .map(|i| (format!("ann{i}"), f64::from(scores[i])))
            .collect();
        let a = consolidate(&subs, &rank).unwrap();
        let k = perm.index(subs.len());
        subs.rotate_left(k);
        subs.reverse();
        let b = consolidate(&subs, &rank).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn jaccard_laws(
        a in prop::collection::btree_set("[a-d]", 0..4),
        b in prop::collection::btree_set("[a-d]", 0..4),
    ) {
        prop_assert_eq!(jaccard(&a, &a), 1.0);
        prop_assert_eq!(jaccard(&a, &b), jaccard(&b, &a));
        let j = jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&j));
        if !a.is_empty() {
            prop_assert_eq!(jaccard(&a, &BTreeSet::new()), 0.0);
        }
    }

    #[test]
    fn iaa_values_are_fractions(groups in prop::collection::vec(prop::collection::vec(arb_sub(), 0..4), 0..6)) {
        let r = iaa(&groups);
        for x in [r.rewrite_agreement, r.exact_match, r.avg_jaccard] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert_eq!(r.instances + r.excluded, groups.len());
    }
}
