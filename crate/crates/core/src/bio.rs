//! BIO labels and span encoding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    O,
    B(String),
    I(String),
}

impl Label {
    pub fn category(&self) -> Option<&str> {
        match self {
            Label::O => None,
            Label::B(c) | Label::I(c) => Some(c),
        }
    }

    /// Same prefix, category rewritten through `f`.
    pub fn map_category(&self, f: impl FnOnce(&str) -> String) -> Label {
        match self {
            Label::O => Label::O,
            Label::B(c) => Label::B(f(c)),
            Label::I(c) => Label::I(f(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BioError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("position {position}: `{label}` does not continue a span of the same category")]
    Invalid { position: usize, label: String },
}

impl FromStr for Label {
    type Err = BioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Label::O);
        }
        match s.split_once('-') {
            Some(("B", c)) if !c.is_empty() => Ok(Label::B(c.to_string())),
            Some(("I", c)) if !c.is_empty() => Ok(Label::I(c.to_string())),
            _ => Err(BioError::UnknownLabel(s.to_string())),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::O => f.write_str("O"),
            Label::B(c) => write!(f, "B-{c}"),
            Label::I(c) => write!(f, "I-{c}"),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Half-open token range with a category.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub category: String,
}

impl Span {
    pub fn new(start: usize, end: usize, category: impl Into<String>) -> Self {
        Self { start, end, category: category.into() }
    }
}

fn continues(prev: Option<&Label>, category: &str) -> bool {
    matches!(prev, Some(Label::B(p) | Label::I(p)) if p == category)
}

/// Position of the first BIO violation, if any.
pub fn first_violation(labels: &[Label]) -> Option<usize> {
    labels.iter().enumerate().position(|(i, l)| match l {
        Label::I(c) => !continues(i.checked_sub(1).map(|p| &labels[p]), c),
        _ => false,
    })
}

pub fn is_valid(labels: &[Label]) -> bool {
    first_violation(labels).is_none()
}

/// Decodes maximal B-I runs into spans.
pub fn spans_of(labels: &[Label]) -> Result<Vec<Span>, BioError> {
    if let Some(position) = first_violation(labels) {
        return Err(BioError::Invalid { position, label: labels[position].to_string() });
    }
    let mut spans: Vec<Span> = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        match label {
            Label::O => {}
            Label::B(c) => spans.push(Span::new(i, i + 1, c.as_str())),
            Label::I(_) => spans.last_mut().expect("validated").end = i + 1,
        }
    }
    Ok(spans)
}

/// Encodes non-overlapping spans over `len` tokens.
pub fn labels_of(len: usize, spans: &[Span]) -> Vec<Label> {
    let mut labels = vec![Label::O; len];
    for span in spans {
        labels[span.start] = Label::B(span.category.clone());
        for label in &mut labels[span.start + 1..span.end] {
            *label = Label::I(span.category.clone());
        }
    }
    labels
}

/// Turns every `I-c` that does not continue a `c` span into `B-c`.
/// Returns the number of labels changed.
pub fn repair_bio(labels: &mut [Label]) -> usize {
    let mut repaired = 0;
    for i in 0..labels.len() {
        if let Label::I(c) = &labels[i] {
            if !continues(i.checked_sub(1).map(|p| &labels[p]), c) {
                labels[i] = Label::B(c.clone());
                repaired += 1;
            }
        }
    }
    repaired
}

/// Parses label strings and repairs them.
pub fn parse_and_repair<S: AsRef<str>>(raw: &[S]) -> Result<(Vec<Label>, usize), BioError> {
    let mut labels = raw.iter().map(|s| s.as_ref().parse()).collect::<Result<Vec<Label>, _>>()?;
    let repaired = repair_bio(&mut labels);
    Ok((labels, repaired))
}
