//! Category merge maps (`source<TAB>target` files).
//!
//! Two maps ship with the crate: `4types` folds every category into
//! person / location / organization / `ENTITY`, and `212types` merges
//! fine-grained families (tournaments, leagues, players, teams, seasons,
//! stations, buildings, ...) into shared parents.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use thiserror::Error;

use crate::tagger::TaggedSentence;
use crate::vocab::{CategoryVocabulary, ENTITY};

const FOUR_TYPES: &str = include_str!("../../data/merge-4types.tsv");
const TYPES_212: &str = include_str!("../../data/merge-212types.tsv");

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("line {line}: expected `source<TAB>target`")]
    Malformed { line: usize },
    #[error("line {line}: category `{category}` mapped twice")]
    Duplicate { line: usize, category: String },
    #[error("`{ENTITY}` must map to itself, not `{0}`")]
    EntityRemapped(String),
    #[error("category `{0}` is not covered by the merge map")]
    Unmapped(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeMap {
    pub name: String,
    mapping: BTreeMap<String, String>,
}

impl MergeMap {
    pub fn four_types() -> Self {
        Self::from_reader("4types", FOUR_TYPES.as_bytes()).expect("bundled map is valid")
    }

    pub fn types_212() -> Self {
        Self::from_reader("212types", TYPES_212.as_bytes()).expect("bundled map is valid")
    }

    pub fn from_reader<R: BufRead>(name: &str, reader: R) -> Result<Self, MergeError> {
        let mut mapping = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (source, target) = line
                .split_once('\t')
                .map(|(s, t)| (s.trim(), t.trim()))
                .filter(|(s, t)| !s.is_empty() && !t.is_empty())
                .ok_or(MergeError::Malformed { line: i + 1 })?;
            if mapping.insert(source.to_string(), target.to_string()).is_some() {
                return Err(MergeError::Duplicate { line: i + 1, category: source.to_string() });
            }
        }
        if let Some(t) = mapping.get(ENTITY).filter(|t| *t != ENTITY) {
            return Err(MergeError::EntityRemapped(t.clone()));
        }
        Ok(Self { name: name.to_string(), mapping })
    }

    pub fn get(&self, category: &str) -> Option<&str> {
        self.mapping.get(category).map(String::as_str)
    }

    /// Distinct target categories.
    pub fn range(&self) -> BTreeSet<&str> {
        self.mapping.values().map(String::as_str).collect()
    }

    /// Categories of `vocabulary` the map does not cover.
    pub fn uncovered<'v>(&self, vocabulary: &'v CategoryVocabulary) -> Vec<&'v str> {
        vocabulary.names().filter(|c| !self.mapping.contains_key(*c)).collect()
    }
}

/// Relabels every span through `map`. Spans keep their boundaries, so
/// adjacent spans that map to the same target stay separate.
pub fn apply_merge_map(corpus: &[TaggedSentence], map: &MergeMap) -> Result<Vec<TaggedSentence>, MergeError> {
    for sentence in corpus {
        if let Some(c) = sentence.span_categories().find(|c| map.get(c).is_none()) {
            return Err(MergeError::Unmapped(c.to_string()));
        }
    }
    Ok(corpus
        .iter()
        .map(|s| s.map_categories(|c| map.get(c).expect("checked above").to_string()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::Span;
    use crate::tagger::SentenceKey;

    fn sentence(cats: &[&str]) -> TaggedSentence {
        let tokens = (0..cats.len()).map(|i| format!("t{i}")).collect();
        let spans: Vec<Span> = cats.iter().enumerate().map(|(i, c)| Span::new(i, i + 1, *c)).collect();
        TaggedSentence::from_spans(tokens, &spans, SentenceKey::default()).unwrap()
    }

    #[test]
    fn bundled_maps_cover_vocabulary() {
        let vocab = CategoryVocabulary::bundled();
        for map in [MergeMap::four_types(), MergeMap::types_212()] {
            assert!(map.uncovered(&vocab).is_empty(), "{}", map.name);
            assert_eq!(map.get(ENTITY), Some(ENTITY));
        }
        assert_eq!(
            MergeMap::four_types().range(),
            BTreeSet::from(["person", "location", "organization", ENTITY])
        );
        assert_eq!(MergeMap::types_212().range().len(), 212);
    }

    #[test]
    fn four_types_examples() {
        let map = MergeMap::four_types();
        let out = apply_merge_map(&[sentence(&["bodyofwater", "award"])], &map).unwrap();
        assert_eq!(out[0].span_categories().collect::<Vec<_>>(), ["location", ENTITY]);
        assert_eq!(map.get("soccerplayer"), Some("person"));
        assert_eq!(map.get("company"), Some("organization"));
    }

    #[test]
    fn tournaments_merge_but_stay_distinct() {
        let map = MergeMap::types_212();
        let out = apply_merge_map(&[sentence(&["tennistournament", "golftournament"])], &map).unwrap();
        let spans = out[0].spans();
        assert_eq!(spans, [Span::new(0, 1, "sportstournament"), Span::new(1, 2, "sportstournament")]);
    }

    #[test]
    fn unmapped_category_errors() {
        let err = apply_merge_map(&[sentence(&["LOC"])], &MergeMap::four_types()).unwrap_err();
        assert!(matches!(err, MergeError::Unmapped(ref c) if c == "LOC"));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(
            MergeMap::from_reader("x", "a b\n".as_bytes()),
            Err(MergeError::Malformed { line: 1 })
        ));
        assert!(matches!(
            MergeMap::from_reader("x", "a\tb\na\tc\n".as_bytes()),
            Err(MergeError::Duplicate { line: 2, .. })
        ));
        assert!(matches!(
            MergeMap::from_reader("x", "ENTITY\tmisc\n".as_bytes()),
            Err(MergeError::EntityRemapped(_))
        ));
    }
}
