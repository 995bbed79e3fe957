//! Corpus filtering: scarce-category discard, no-entity removal and the
//! probabilistic filter for sentences dominated by frequent categories and
//! `ENTITY` mentions.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{keyed_rng, sentence_stream, Purpose};
use crate::tagger::TaggedSentence;
use crate::vocab::ENTITY;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterConfigError {
    #[error("drop probability `{name}` = {value} is outside [0, 1]")]
    Probability { name: &'static str, value: f64 },
    #[error("scarce_threshold must be at least 1")]
    Threshold,
    #[error("top_k must be at least 1")]
    TopK,
}

/// Drop probabilities keyed by the number of `ENTITY` spans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropProbs {
    #[serde(rename = "3")]
    pub three: f64,
    #[serde(rename = "4")]
    pub four: f64,
    #[serde(rename = "gt4")]
    pub more: f64,
}

impl Default for DropProbs {
    fn default() -> Self {
        Self { three: 0.3, four: 0.5, more: 0.7 }
    }
}

impl DropProbs {
    pub fn for_entity_count(&self, num: usize) -> f64 {
        match num {
            0..=2 => 0.0,
            3 => self.three,
            4 => self.four,
            _ => self.more,
        }
    }
}

/// What to do with spans of scarce categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScarceMode {
    /// Drop the whole sentence.
    #[default]
    Drop,
    /// Keep the sentence, relabel the span as `ENTITY`.
    Relabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub scarce_threshold: u64,
    pub top_k: usize,
    pub drop_probs: DropProbs,
    pub scarce_mode: ScarceMode,
    /// Set from the pipeline seed, not read from config files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { scarce_threshold: 10, top_k: 20, drop_probs: DropProbs::default(), scarce_mode: ScarceMode::Drop, seed: 0 }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterConfigError> {
        let p = self.drop_probs;
        for (name, value) in [("3", p.three), ("4", p.four), ("gt4", p.more)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(FilterConfigError::Probability { name, value });
            }
        }
        if self.scarce_threshold < 1 {
            return Err(FilterConfigError::Threshold);
        }
        if self.top_k < 1 {
            return Err(FilterConfigError::TopK);
        }
        Ok(())
    }
}

/// Per-category entity counts plus corpus totals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub counts: BTreeMap<String, u64>,
    pub total_entities: u64,
    pub total_sentences: u64,
    pub total_tokens: u64,
}

impl CategoryStats {
    pub fn add(&mut self, sentence: &TaggedSentence) {
        self.total_sentences += 1;
        self.total_tokens += sentence.len() as u64;
        for category in sentence.span_categories() {
            self.total_entities += 1;
            match self.counts.get_mut(category) {
                Some(n) => *n += 1,
                None => {
                    self.counts.insert(category.to_string(), 1);
                }
            }
        }
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.total_entities += other.total_entities;
        self.total_sentences += other.total_sentences;
        self.total_tokens += other.total_tokens;
        for (category, n) in other.counts {
            *self.counts.entry(category).or_default() += n;
        }
        self
    }

    pub fn count(&self, category: &str) -> u64 {
        self.counts.get(category).copied().unwrap_or(0)
    }

    /// Categories with at least one entity.
    pub fn category_count(&self) -> usize {
        self.counts.values().filter(|&&n| n > 0).count()
    }

    /// `category<TAB>count` lines, most frequent first.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<_> = self.counts.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        rows.into_iter().map(|(c, n)| format!("{c}\t{n}\n")).collect()
    }
}

pub fn compute_stats<'a, I>(corpus: I) -> CategoryStats
where
    I: IntoIterator<Item = &'a TaggedSentence>,
{
    let mut stats = CategoryStats::default();
    for sentence in corpus {
        stats.add(sentence);
    }
    stats
}

pub fn par_compute_stats(corpus: &[TaggedSentence]) -> CategoryStats {
    corpus
        .par_iter()
        .fold(CategoryStats::default, |mut acc, s| {
            acc.add(s);
            acc
        })
        .reduce(CategoryStats::default, CategoryStats::merge)
}

/// Categories other than `ENTITY` with fewer than `threshold` entities.
/// Zero-count entries in `stats` are included.
pub fn scarce_categories(stats: &CategoryStats, threshold: u64) -> BTreeSet<String> {
    stats
        .counts
        .iter()
        .filter(|(c, &n)| n < threshold && c.as_str() != ENTITY)
        .map(|(c, _)| c.clone())
        .collect()
}

/// Drops (or relabels, per `mode`) sentences containing scarce categories.
pub fn apply_scarce_discard(
    sentence: TaggedSentence,
    scarce: &BTreeSet<String>,
    mode: ScarceMode,
) -> Option<TaggedSentence> {
    if scarce.is_empty() || !sentence.span_categories().any(|c| scarce.contains(c)) {
        return Some(sentence);
    }
    match mode {
        ScarceMode::Drop => None,
        ScarceMode::Relabel => Some(sentence.map_categories(|c| {
            if scarce.contains(c) {
                ENTITY.to_string()
            } else {
                c.to_string()
            }
        })),
    }
}

/// True if the sentence has at least one span outside `ENTITY`.
pub fn filter_no_entity(sentence: &TaggedSentence) -> bool {
    sentence.span_categories().any(|c| c != ENTITY)
}

/// The `k` most frequent categories; ties go to the lexicographically
/// smaller name.
pub fn top_frequent(stats: &CategoryStats, k: usize) -> BTreeSet<String> {
    let mut rows: Vec<(&String, &u64)> = stats.counts.iter().collect();
    rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    rows.into_iter().take(k).map(|(c, _)| c.clone()).collect()
}

/// Drop probability for a sentence given the frequent-category set.
pub fn drop_probability(sentence: &TaggedSentence, top_set: &BTreeSet<String>, probs: &DropProbs) -> f64 {
    let mut num_entity = 0;
    for category in sentence.span_categories() {
        if !top_set.contains(category) {
            return 0.0;
        }
        if category == ENTITY {
            num_entity += 1;
        }
    }
    probs.for_entity_count(num_entity)
}

/// Keyed Bernoulli draw; `true` means keep.
pub fn probabilistic_filter(sentence: &TaggedSentence, top_set: &BTreeSet<String>, config: &FilterConfig) -> bool {
    let p = drop_probability(sentence, top_set, &config.drop_probs);
    if p <= 0.0 {
        return true;
    }
    let u: f64 = keyed_rng(config.seed, Purpose::Filter, sentence_stream(sentence.source())).random();
    u >= p
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterTally {
    pub scarce_discard: u64,
    pub scarce_relabeled: u64,
    pub no_entity: u64,
    pub probabilistic: u64,
}

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub kept: Vec<TaggedSentence>,
    pub tally: FilterTally,
    pub scarce: BTreeSet<String>,
    pub top: BTreeSet<String>,
}

/// Runs all three stages. Frequent categories are computed on the corpus
/// that survives the first two stages.
pub fn run_filter(corpus: Vec<TaggedSentence>, config: &FilterConfig) -> FilterOutcome {
    let stats = par_compute_stats(&corpus);
    let scarce = scarce_categories(&stats, config.scarce_threshold);
    let input = corpus.len() as u64;

    let staged: Vec<(TaggedSentence, bool, bool)> = corpus
        .into_par_iter()
        .filter_map(|s| {
            let had_scarce = s.span_categories().any(|c| scarce.contains(c));
            let s = apply_scarce_discard(s, &scarce, config.scarce_mode)?;
            let relabeled = had_scarce;
            let keep = filter_no_entity(&s);
            Some((s, relabeled, keep))
        })
        .collect();
    let after_scarce = staged.len() as u64;
    let scarce_relabeled = staged.iter().filter(|(_, r, _)| *r).count() as u64;
    let survivors: Vec<TaggedSentence> = staged.into_iter().filter(|(_, _, k)| *k).map(|(s, _, _)| s).collect();
    let after_no_entity = survivors.len() as u64;

    let top = top_frequent(&par_compute_stats(&survivors), config.top_k);
    let kept: Vec<TaggedSentence> =
        survivors.into_par_iter().filter(|s| probabilistic_filter(s, &top, config)).collect();

    let tally = FilterTally {
        scarce_discard: input - after_scarce,
        scarce_relabeled,
        no_entity: after_scarce - after_no_entity,
        probabilistic: after_no_entity - kept.len() as u64,
    };
    FilterOutcome { kept, tally, scarce, top }
}
