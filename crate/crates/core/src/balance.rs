//! Category-balanced resampling with `q(E) ∝ |E|^alpha`.
//!
//! Sampling is two-stage: a category is drawn from the smoothed
//! distribution, then a sentence containing that category is drawn
//! uniformly. Each draw uses its own keyed random stream, so the output is
//! identical no matter how draws are partitioned across threads.

use std::collections::BTreeMap;

use num_traits::Float;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{compute_stats, CategoryStats};
use crate::rng::{keyed_rng, Purpose};
use crate::scalar::Scalar;
use crate::tagger::TaggedSentence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BalanceError {
    #[error("no category has a positive count")]
    EmptyStats,
    #[error("alpha must be positive")]
    Alpha,
    #[error("category `{0}` has probability mass but no sentences")]
    MissingPosting(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSize {
    #[default]
    SameAsInput,
    Count(u64),
}

impl TargetSize {
    pub fn resolve(self, input_sentences: usize) -> usize {
        match self {
            TargetSize::SameAsInput => input_sentences,
            TargetSize::Count(n) => n as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub alpha: f64,
    #[serde(with = "target_size_serde")]
    pub target_size: TargetSize,
    /// Set from the pipeline seed, not read from config files.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { alpha: 0.7, target_size: TargetSize::SameAsInput, seed: 0 }
    }
}

mod target_size_serde {
    use super::TargetSize;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &TargetSize, s: S) -> Result<S::Ok, S::Error> {
        match t {
            TargetSize::SameAsInput => s.serialize_str("same-as-input"),
            TargetSize::Count(n) => s.serialize_u64(*n),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<TargetSize, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(TargetSize::Count(n)),
            Raw::Text(s) if s == "same-as-input" => Ok(TargetSize::SameAsInput),
            Raw::Text(s) => s
                .parse()
                .map(TargetSize::Count)
                .map_err(|_| serde::de::Error::custom(format!("invalid target_size `{s}`"))),
        }
    }
}

/// Categorical distribution over categories with a positive count.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution<F> {
    categories: Vec<String>,
    probs: Vec<F>,
}

impl<F: Float + Scalar> SamplingDistribution<F> {
    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn prob(&self, category: &str) -> F {
        self.categories
            .iter()
            .position(|c| c == category)
            .map_or(F::zero(), |i| self.probs[i])
    }

    /// Explicit distribution; weights are normalized, zero weights dropped.
    pub fn from_weights<I, S>(weights: I) -> Result<Self, BalanceError>
    where
        I: IntoIterator<Item = (S, F)>,
        S: Into<String>,
    {
        let (categories, raw): (Vec<String>, Vec<F>) =
            weights.into_iter().filter(|(_, w)| *w > F::zero()).map(|(c, w)| (c.into(), w)).unzip();
        let total = raw.iter().fold(F::zero(), |acc, &w| acc + w);
        if categories.is_empty() || total.partial_cmp(&F::zero()) != Some(std::cmp::Ordering::Greater) {
            return Err(BalanceError::EmptyStats);
        }
        Ok(Self { categories, probs: raw.into_iter().map(|w| w / total).collect() })
    }
}

/// `q(E) = counts[E]^alpha / Σ counts[E']^alpha` over positive counts.
pub fn sampling_distribution<F: Float + Scalar>(
    stats: &CategoryStats,
    alpha: F,
) -> Result<SamplingDistribution<F>, BalanceError> {
    if alpha.partial_cmp(&F::zero()) != Some(std::cmp::Ordering::Greater) {
        return Err(BalanceError::Alpha);
    }
    SamplingDistribution::from_weights(
        stats
            .counts
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(c, &n)| (c.clone(), F::from_count(n).powf(alpha))),
    )
}

/// Walker/Vose alias table for O(1) categorical draws.
#[derive(Debug, Clone)]
pub struct AliasTable<F> {
    cutoff: Vec<F>,
    alias: Vec<usize>,
}

impl<F: Float + Scalar> AliasTable<F> {
    pub fn new(probs: &[F]) -> Self {
        let n = probs.len();
        let scale = F::from_count(n as u64);
        let mut scaled: Vec<F> = probs.iter().map(|&p| p * scale).collect();
        let mut cutoff = vec![F::one(); n];
        let mut alias: Vec<usize> = (0..n).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < F::one());
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            cutoff[s] = scaled[s];
            alias[s] = l;
            scaled[l] = scaled[l] + scaled[s] - F::one();
            if scaled[l] < F::one() {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers differ from 1 only by rounding.
        for i in small.into_iter().chain(large) {
            cutoff[i] = F::one();
        }
        Self { cutoff, alias }
    }

    pub fn len(&self) -> usize {
        self.cutoff.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cutoff.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let column = rng.random_range(0..self.cutoff.len());
        let u = F::from(rng.random::<f64>()).expect("f64 converts");
        if u < self.cutoff[column] {
            column
        } else {
            self.alias[column]
        }
    }
}

/// Per-category sentence indices, each list ordered by sentence key.
pub type Posting = BTreeMap<String, Vec<usize>>;

/// Every sentence appears once in the list of each distinct category it
/// contains. Values are indices into `corpus`.
pub fn build_category_posting(corpus: &[TaggedSentence]) -> Posting {
    let mut posting: Posting = BTreeMap::new();
    for (i, sentence) in corpus.iter().enumerate() {
        let mut seen: Vec<&str> = sentence.span_categories().collect();
        seen.sort_unstable();
        seen.dedup();
        for category in seen {
            posting.entry(category.to_string()).or_default().push(i);
        }
    }
    for list in posting.values_mut() {
        list.sort_by_key(|&i| (corpus[i].source(), i));
    }
    posting
}

/// Draws `config.target_size` sentence indices (with replacement), in draw
/// order. `input_sentences` resolves the `same-as-input` target.
pub fn resample<F: Float + Scalar>(
    posting: &Posting,
    dist: &SamplingDistribution<F>,
    config: &SamplingConfig,
    input_sentences: usize,
) -> Result<Vec<usize>, BalanceError> {
    let target = config.target_size.resolve(input_sentences);
    if target == 0 {
        return Ok(Vec::new());
    }
    let lists: Vec<&Vec<usize>> = dist
        .categories()
        .iter()
        .map(|c| posting.get(c).filter(|l| !l.is_empty()).ok_or_else(|| BalanceError::MissingPosting(c.clone())))
        .collect::<Result<_, _>>()?;
    let table = AliasTable::new(dist.probs());
    Ok((0..target as u64)
        .into_par_iter()
        .map(|draw| {
            let mut rng = keyed_rng(config.seed, Purpose::Resample, draw);
            let list = lists[table.sample(&mut rng)];
            list[rng.random_range(0..list.len())]
        })
        .collect())
}

/// Category index of each draw, for checking the category distribution.
pub fn draw_categories<F: Float + Scalar>(dist: &SamplingDistribution<F>, seed: u64, draws: u64) -> Vec<usize> {
    let table = AliasTable::new(dist.probs());
    (0..draws)
        .into_par_iter()
        .map(|draw| table.sample(&mut keyed_rng(seed, Purpose::Resample, draw)))
        .collect()
}

/// Full balancing step over a corpus.
pub fn balance_corpus<F: Float + Scalar>(
    corpus: &[TaggedSentence],
    alpha: F,
    config: &SamplingConfig,
) -> Result<Vec<TaggedSentence>, BalanceError> {
    let stats = compute_stats(corpus);
    if stats.total_entities == 0 {
        return Ok(Vec::new());
    }
    let dist = sampling_distribution(&stats, alpha)?;
    let posting = build_category_posting(corpus);
    let picks = resample(&posting, &dist, config, corpus.len())?;
    Ok(picks.into_iter().map(|i| corpus[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRow {
    pub category: String,
    pub before: u64,
    pub after: u64,
}

/// Entity counts per category before and after resampling, sorted by
/// `before` descending, then name.
pub fn before_after_report<'a, I>(before: &CategoryStats, resampled: I) -> Vec<ReportRow>
where
    I: IntoIterator<Item = &'a TaggedSentence>,
{
    let after = compute_stats(resampled);
    let mut names: Vec<&String> = before.counts.keys().chain(after.counts.keys()).collect();
    names.sort();
    names.dedup();
    let mut rows: Vec<ReportRow> = names
        .into_iter()
        .map(|c| ReportRow { category: c.clone(), before: before.count(c), after: after.count(c) })
        .collect();
    rows.sort_by(|a, b| b.before.cmp(&a.before).then_with(|| a.category.cmp(&b.category)));
    rows
}

/// `category<TAB>before<TAB>after` lines.
pub fn report_tsv(rows: &[ReportRow]) -> String {
    rows.iter().map(|r| format!("{}\t{}\t{}\n", r.category, r.before, r.after)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::Span;
    use crate::tagger::SentenceKey;
    use crate::vocab::ENTITY;
    use proptest::prelude::*;

    // 100^0.7 / (100^0.7 + 1), evaluated with 40-digit arithmetic.
    const Q_A: f64 = 0.961_713_496_117_745_266_888_817_831_001_238_767_481_6;

    fn stats(pairs: &[(&str, u64)]) -> CategoryStats {
        let mut s = CategoryStats::default();
        for (c, n) in pairs {
            s.counts.insert(c.to_string(), *n);
            s.total_entities += n;
        }
        s
    }

    fn sentence(id: u64, cats: &[&str]) -> TaggedSentence {
        let tokens = (0..cats.len()).map(|i| format!("t{i}")).collect();
        let spans: Vec<Span> = cats.iter().enumerate().map(|(i, c)| Span::new(i, i + 1, *c)).collect();
        TaggedSentence::from_spans(tokens, &spans, SentenceKey::new(id, 0)).unwrap()
    }

    #[test]
    fn distribution_matches_high_precision_value() {
        let d = sampling_distribution(&stats(&[("a", 100), ("b", 1)]), 0.7f64).unwrap();
        assert!((d.prob("a") - Q_A).abs() < 1e-15);
        assert!((d.prob("b") - (1.0 - Q_A)).abs() < 1e-15);
        let d32 = sampling_distribution(&stats(&[("a", 100), ("b", 1)]), 0.7f32).unwrap();
        assert!((d32.prob("a") as f64 - Q_A).abs() < 1e-6);
    }

    #[test]
    fn four_category_values() {
        // Same 40-digit oracle, counts 1/10/100/1000.
        let expected = [0.006_368_482_519_372_963, 0.031_918_021_362_881_77, 0.159_969_048_297_188_93, 0.801_744_447_820_556_3];
        let d = sampling_distribution(&stats(&[("a", 1), ("b", 10), ("c", 100), ("d", 1000)]), 0.7).unwrap();
        for (p, e) in d.probs().iter().zip(expected) {
            assert!((p - e).abs() < 1e-14, "{p} vs {e}");
        }
    }

    #[test]
    fn symmetric_and_alpha_one() {
        let d = sampling_distribution(&stats(&[("a", 5), ("b", 5)]), 0.3).unwrap();
        assert_eq!(d.probs(), [0.5, 0.5]);
        let d = sampling_distribution(&stats(&[("a", 30), ("b", 10), ("z", 0)]), 1.0).unwrap();
        assert_eq!(d.categories(), ["a", "b"]);
        assert!((d.prob("a") - 0.75).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(sampling_distribution(&stats(&[("a", 0)]), 0.7f64).unwrap_err(), BalanceError::EmptyStats);
        assert_eq!(sampling_distribution(&stats(&[("a", 1)]), 0.0f64).unwrap_err(), BalanceError::Alpha);
    }

    #[test]
    fn posting_examples() {
        let corpus = [sentence(2, &["city", "city", ENTITY]), sentence(1, &["city"])];
        let p = build_category_posting(&corpus);
        assert_eq!(p["city"], [1, 0]);
        assert_eq!(p[ENTITY], [0]);
        assert!(build_category_posting(&[]).is_empty());
    }

    #[test]
    fn resample_examples() {
        let corpus = [sentence(1, &["a"])];
        let posting = build_category_posting(&corpus);
        let dist = sampling_distribution(&compute_stats(&corpus), 0.7).unwrap();
        let config = SamplingConfig { target_size: TargetSize::Count(3), ..SamplingConfig::default() };
        assert_eq!(resample(&posting, &dist, &config, 1).unwrap(), [0, 0, 0]);

        let corpus = [sentence(1, &["a"]), sentence(2, &["b"]), sentence(3, &["a"])];
        let posting = build_category_posting(&corpus);
        let dist = SamplingDistribution::from_weights([("a", 1.0), ("b", 0.0)]).unwrap();
        let config = SamplingConfig { target_size: TargetSize::Count(500), seed: 3, ..SamplingConfig::default() };
        let picks = resample(&posting, &dist, &config, 3).unwrap();
        assert!(picks.iter().all(|&i| i != 1));
        assert!(picks.contains(&0) && picks.contains(&2));

        let zero = SamplingConfig { target_size: TargetSize::Count(0), ..config };
        assert!(resample(&posting, &dist, &zero, 3).unwrap().is_empty());
    }

    #[test]
    fn empirical_frequencies_track_distribution() {
        let dist = sampling_distribution(&stats(&[("a", 100), ("b", 1)]), 0.7).unwrap();
        let draws = draw_categories(&dist, 17, 100_000);
        let freq_a = draws.iter().filter(|&&c| c == 0).count() as f64 / draws.len() as f64;
        assert!((freq_a - Q_A).abs() <= 0.005, "{freq_a}");
    }

    #[test]
    fn resample_is_deterministic() {
        let corpus: Vec<_> = (0..50).map(|i| sentence(i, &[["a", "b", "c"][i as usize % 3]])).collect();
        let config = SamplingConfig { seed: 9, ..SamplingConfig::default() };
        let x = balance_corpus(&corpus, 0.7, &config).unwrap();
        let y = balance_corpus(&corpus, 0.7, &config).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.len(), 50);
    }

    #[test]
    fn report_boosts_rare_categories() {
        let mut corpus: Vec<_> = (0..200).map(|i| sentence(i, &["big"])).collect();
        corpus.extend((200..210).map(|i| sentence(i, &["small"])));
        let before = compute_stats(&corpus);
        let config = SamplingConfig { seed: 1, ..SamplingConfig::default() };
        let after = balance_corpus(&corpus, 0.7, &config).unwrap();
        let rows = before_after_report(&before, &after);
        assert_eq!(rows[0].category, "big");
        let ratio = |r: &ReportRow| r.after as f64 / r.before as f64;
        assert!(ratio(&rows[1]) > ratio(&rows[0]));
        assert_eq!(report_tsv(&rows[..1]), format!("big\t200\t{}\n", rows[0].after));
    }

    #[test]
    fn single_category_report() {
        let corpus = [sentence(1, &["x"]), sentence(2, &["x"])];
        let config = SamplingConfig { target_size: TargetSize::Count(5), ..SamplingConfig::default() };
        let after = balance_corpus(&corpus, 0.7, &config).unwrap();
        let rows = before_after_report(&compute_stats(&corpus), &after);
        assert_eq!(rows, [ReportRow { category: "x".into(), before: 2, after: 5 }]);
    }

    proptest! {
        #[test]
        fn scale_invariance(counts in proptest::collection::vec(1u64..10_000, 1..12), k in 2u64..50) {
            let names: Vec<String> = (0..counts.len()).map(|i| format!("c{i:02}")).collect();
            let base: Vec<(&str, u64)> = names.iter().map(String::as_str).zip(counts.iter().copied()).collect();
            let scaled: Vec<(&str, u64)> = base.iter().map(|&(c, n)| (c, n * k)).collect();
            let p = sampling_distribution(&stats(&base), 0.7).unwrap();
            let q = sampling_distribution(&stats(&scaled), 0.7).unwrap();
            for (x, y) in p.probs().iter().zip(q.probs()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            let sum: f64 = p.probs().iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn monotone_in_counts(a in 1u64..100_000, b in 1u64..100_000, alpha in 0.05f64..1.0) {
            let d = sampling_distribution(&stats(&[("a", a), ("b", b)]), alpha).unwrap();
            if a > b {
                prop_assert!(d.prob("a") > d.prob("b"));
            }
        }

        #[test]
        fn alias_table_preserves_mass(weights in proptest::collection::vec(0.0f64..10.0, 1..20)) {
            prop_assume!(weights.iter().any(|&w| w > 0.0));
            let total: f64 = weights.iter().sum();
            let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let table = AliasTable::new(&probs);
            let n = probs.len() as f64;
            let mut mass = vec![0.0; probs.len()];
            for i in 0..probs.len() {
                mass[i] += table.cutoff[i] / n;
                mass[table.alias[i]] += (1.0 - table.cutoff[i]) / n;
            }
            for (m, p) in mass.iter().zip(&probs) {
                prop_assert!((m - p).abs() < 1e-9);
            }
        }
    }
}
