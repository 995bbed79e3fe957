use std::collections::BTreeSet;

use ner_corpus::filter::{compute_stats, run_filter, DropProbs, FilterConfig, FilterTally};
use ner_corpus::io::conll::load_conll;
use ner_corpus::tagger::{SentenceKey, TaggedSentence};
use ner_corpus::Label;

const TWENTY: &str = include_str!("fixtures/twenty.conll");

fn corpus() -> Vec<TaggedSentence> {
    let (corpus, repairs) = load_conll(TWENTY.as_bytes()).unwrap();
    assert_eq!(repairs, 0);
    corpus
}

#[test]
fn stats_match_hand_tally() {
    let s = compute_stats(&corpus());
    assert_eq!((s.total_sentences, s.total_tokens, s.total_entities), (20, 82, 42));
    assert_eq!(s.category_count(), 7);
    let counts: Vec<(&str, u64)> = s.counts.iter().map(|(c, n)| (c.as_str(), *n)).collect();
    assert_eq!(
        counts,
        [("ENTITY", 24), ("band", 1), ("city", 8), ("company", 2), ("country", 5), ("river", 1), ("vein", 1)]
    );
}

#[test]
fn filter_tallies_match_hand_counts() {
    let config = FilterConfig {
        scarce_threshold: 2,
        top_k: 3,
        drop_probs: DropProbs { three: 0.0, four: 1.0, more: 1.0 },
        ..FilterConfig::default()
    };
    let out = run_filter(corpus(), &config);
    assert_eq!(
        out.tally,
        FilterTally { scarce_discard: 3, scarce_relabeled: 0, no_entity: 5, probabilistic: 3 }
    );
    assert_eq!(out.scarce, BTreeSet::from(["band".into(), "river".into(), "vein".into()]));
    assert_eq!(out.top, BTreeSet::from(["ENTITY".into(), "city".into(), "country".into()]));
    let kept: Vec<u32> = out.kept.iter().map(|s| s.source().sentence_index + 1).collect();
    assert_eq!(kept, [1, 2, 3, 13, 14, 15, 16, 17, 20]);
}

#[test]
fn all_outside_corpus_is_dropped_by_no_entity() {
    let corpus: Vec<TaggedSentence> = (0..5)
        .map(|i| TaggedSentence::new(vec!["a".into(), "b".into()], vec![Label::O; 2], SentenceKey::new(i, 0)).unwrap())
        .collect();
    let out = run_filter(corpus, &FilterConfig::default());
    assert!(out.kept.is_empty());
    assert_eq!(out.tally.no_entity, 5);
}

#[test]
fn zero_drop_probs_drop_nothing_probabilistically() {
    let config = FilterConfig {
        scarce_threshold: 1,
        drop_probs: DropProbs { three: 0.0, four: 0.0, more: 0.0 },
        ..FilterConfig::default()
    };
    let out = run_filter(corpus(), &config);
    assert_eq!(out.tally.probabilistic, 0);
    assert_eq!(out.tally.scarce_discard, 0);
    assert_eq!(out.kept.len(), 15);
}
