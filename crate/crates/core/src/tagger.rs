//! Anchor categorization: raw sentences to BIO-tagged sentences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bio::{self, BioError, Label, Span};
use crate::ontology::OntologyIndex;
use crate::segment::RawSentence;
use crate::vocab::ENTITY;

/// `(article_id, sentence_index)`; identifies a sentence across stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct SentenceKey {
    pub article_id: u64,
    pub sentence_index: u32,
}

impl SentenceKey {
    pub fn new(article_id: u64, sentence_index: u32) -> Self {
        Self { article_id, sentence_index }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SentenceError {
    #[error("{tokens} tokens but {labels} labels")]
    LengthMismatch { tokens: usize, labels: usize },
    #[error("token {0} is empty or contains whitespace")]
    BadToken(usize),
    #[error(transparent)]
    Bio(#[from] BioError),
}

/// Tokens with valid BIO labels. The corpus atom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SentenceRecord", into = "SentenceRecord")]
pub struct TaggedSentence {
    tokens: Vec<String>,
    labels: Vec<Label>,
    source: SentenceKey,
}

/// JSONL wire shape: `{"tokens": [...], "labels": [...], "source": [article_id, sentence_index]}`.
#[derive(Serialize, Deserialize)]
struct SentenceRecord {
    tokens: Vec<String>,
    labels: Vec<Label>,
    source: (u64, u32),
}

impl TryFrom<SentenceRecord> for TaggedSentence {
    type Error = SentenceError;

    fn try_from(r: SentenceRecord) -> Result<Self, Self::Error> {
        TaggedSentence::new(r.tokens, r.labels, SentenceKey::new(r.source.0, r.source.1))
    }
}

impl From<TaggedSentence> for SentenceRecord {
    fn from(s: TaggedSentence) -> Self {
        SentenceRecord { tokens: s.tokens, labels: s.labels, source: (s.source.article_id, s.source.sentence_index) }
    }
}

impl TaggedSentence {
    pub fn new(tokens: Vec<String>, labels: Vec<Label>, source: SentenceKey) -> Result<Self, SentenceError> {
        if tokens.len() != labels.len() {
            return Err(SentenceError::LengthMismatch { tokens: tokens.len(), labels: labels.len() });
        }
        if let Some(i) = tokens.iter().position(|t| t.is_empty() || t.contains(char::is_whitespace)) {
            return Err(SentenceError::BadToken(i));
        }
        if let Some(position) = bio::first_violation(&labels) {
            return Err(BioError::Invalid { position, label: labels[position].to_string() }.into());
        }
        Ok(Self { tokens, labels, source })
    }

    pub fn from_spans(tokens: Vec<String>, spans: &[Span], source: SentenceKey) -> Result<Self, SentenceError> {
        let labels = bio::labels_of(tokens.len(), spans);
        Self::new(tokens, labels, source)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn source(&self) -> SentenceKey {
        self.source
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn spans(&self) -> Vec<Span> {
        bio::spans_of(&self.labels).expect("labels are valid by construction")
    }

    /// Category of every span, in order.
    pub fn span_categories(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().filter_map(|l| match l {
            Label::B(c) => Some(c.as_str()),
            _ => None,
        })
    }

    pub fn with_source(mut self, source: SentenceKey) -> Self {
        self.source = source;
        self
    }

    /// Rewrites every span category; adjacent spans stay distinct.
    pub fn map_categories(&self, mut f: impl FnMut(&str) -> String) -> Self {
        let labels = self.labels.iter().map(|l| l.map_category(&mut f)).collect();
        Self { tokens: self.tokens.clone(), labels, source: self.source }
    }
}

/// Labels anchored tokens with the target's ontology category, or
/// [`ENTITY`] when the target is not indexed. Everything else is `O`.
pub fn tag_sentence(sentence: &RawSentence, index: &OntologyIndex) -> TaggedSentence {
    let tokens: Vec<String> = sentence.tokens.iter().map(|t| t.text.clone()).collect();
    let spans: Vec<Span> = sentence
        .anchor_token_ranges()
        .into_iter()
        .zip(&sentence.anchors)
        .filter(|((first, last), _)| first < last)
        .map(|((first, last), anchor)| Span::new(first, last, index.lookup(&anchor.target).unwrap_or(ENTITY)))
        .collect();
    TaggedSentence::from_spans(tokens, &spans, SentenceKey::new(sentence.article_id, sentence.sentence_index))
        .expect("tokenizer output is whitespace-free and anchors do not overlap")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::LoadMode;
    use crate::segment::{tokenize, Token};
    use crate::vocab::CategoryVocabulary;
    use crate::wikitext::AnchorSpan;
    use proptest::prelude::*;

    fn index() -> OntologyIndex {
        OntologyIndex::from_records([("Paris", "city")], CategoryVocabulary::bundled(), LoadMode::Strict)
            .unwrap()
            .0
    }

    fn raw(text: &str, anchors: &[(usize, usize, &str)]) -> RawSentence {
        let tokens: Vec<Token> = tokenize(text);
        let anchors = anchors
            .iter()
            .map(|&(first, last, target)| {
                let (s, e) = (tokens[first].start, tokens[last - 1].end);
                AnchorSpan { start: s, end: e, surface: text[s..e].into(), target: target.into() }
            })
            .collect();
        RawSentence { article_id: 3, sentence_index: 1, text: text.into(), tokens, anchors }
    }

    fn labels(t: &TaggedSentence) -> Vec<String> {
        t.labels().iter().map(Label::to_string).collect()
    }

    #[test]
    fn indexed_anchor_gets_category() {
        let t = tag_sentence(&raw("Paris is big", &[(0, 1, "Paris")]), &index());
        assert_eq!(labels(&t), ["B-city", "O", "O"]);
        assert_eq!(t.source(), SentenceKey::new(3, 1));
    }

    #[test]
    fn unindexed_anchor_gets_entity() {
        let t = tag_sentence(&raw("the Foo Bar festival", &[(1, 3, "Foo Bar")]), &index());
        assert_eq!(labels(&t), ["O", "B-ENTITY", "I-ENTITY", "O"]);
    }

    #[test]
    fn no_anchors_all_outside() {
        let t = tag_sentence(&raw("nothing to see", &[]), &index());
        assert!(t.labels().iter().all(|l| *l == Label::O));
    }

    #[test]
    fn constructor_rejects_bad_input() {
        let key = SentenceKey::default();
        assert!(matches!(
            TaggedSentence::new(vec!["a".into()], vec![], key),
            Err(SentenceError::LengthMismatch { .. })
        ));
        assert!(matches!(
            TaggedSentence::new(vec!["a b".into()], vec![Label::O], key),
            Err(SentenceError::BadToken(0))
        ));
        assert!(matches!(
            TaggedSentence::new(vec!["a".into()], vec![Label::I("x".into())], key),
            Err(SentenceError::Bio(_))
        ));
    }

    #[test]
    fn jsonl_shape() {
        let t = tag_sentence(&raw("Paris is", &[(0, 1, "Paris")]), &index());
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"tokens":["Paris","is"],"labels":["B-city","O"],"source":[3,1]}"#);
        assert_eq!(serde_json::from_str::<TaggedSentence>(&json).unwrap(), t);
        assert!(serde_json::from_str::<TaggedSentence>(r#"{"tokens":["a"],"labels":["I-x"],"source":[0,0]}"#).is_err());
    }

    proptest! {
        #[test]
        fn non_o_iff_anchored(n in 1usize..12, cuts in proptest::collection::vec((0usize..12, 1usize..4, proptest::bool::ANY), 0..5)) {
            let text = (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
            let mut anchors = Vec::new();
            let mut next_free = 0;
            let mut sorted = cuts.clone();
            sorted.sort();
            for (start, len, indexed) in sorted {
                if start < next_free || start >= n {
                    continue;
                }
                let end = (start + len).min(n);
                anchors.push((start, end, if indexed { "Paris" } else { "Elsewhere" }));
                next_free = end;
            }
            let t = tag_sentence(&raw(&text, &anchors), &index());
            for i in 0..n {
                let covered = anchors.iter().any(|&(s, e, _)| s <= i && i < e);
                prop_assert_eq!(covered, t.labels()[i] != Label::O);
            }
            let vocab = CategoryVocabulary::bundled();
            prop_assert!(t.span_categories().all(|c| vocab.contains(c)));
            prop_assert_eq!(t.spans().len(), anchors.len());
        }
    }
}
