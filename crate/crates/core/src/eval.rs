//! Exact-match span scoring for BIO predictions.
//!
//! A predicted span is correct only if its start, end and category all
//! match a gold span. Scores are micro-averaged; a zero denominator gives a
//! score of zero.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::bio::{repair_bio, spans_of, Label, Span};
use crate::scalar::{harmonic_mean, ratio_or_zero, Scalar};
use crate::tagger::TaggedSentence;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("sentence {index}: gold has {gold} tokens, prediction has {pred}")]
    LengthMismatch { index: usize, gold: usize, pred: usize },
    #[error("gold has {gold} sentences, prediction has {pred}")]
    SentenceCount { gold: usize, pred: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub true_positives: u64,
    pub predicted: u64,
    pub gold: u64,
}

impl Counts {
    fn scores<S: Scalar>(self) -> (S, S, S) {
        let p = ratio_or_zero(self.true_positives, self.predicted);
        let r = ratio_or_zero(self.true_positives, self.gold);
        (p, r, harmonic_mean(p, r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryScore<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
    pub counts: Counts,
    pub per_category: BTreeMap<String, CategoryScore<S>>,
    /// `(gold, predicted)` category pairs on spans with identical boundaries.
    pub confusion_pairs: BTreeMap<(String, String), u64>,
    /// Prediction labels changed by BIO repair before scoring.
    pub repairs: u64,
}

/// Scores `pred` label sequences against `gold`. Predictions are repaired
/// to valid BIO first.
pub fn span_f1<S: Scalar>(gold: &[TaggedSentence], pred: &[Vec<Label>]) -> Result<EvalReport<S>, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::SentenceCount { gold: gold.len(), pred: pred.len() });
    }
    let mut total = Counts::default();
    let mut per_category: BTreeMap<String, Counts> = BTreeMap::new();
    let mut confusion_pairs = BTreeMap::new();
    let mut repairs = 0u64;

    for (index, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(EvalError::LengthMismatch { index, gold: g.len(), pred: p.len() });
        }
        let mut p = p.clone();
        repairs += repair_bio(&mut p) as u64;
        let pred_spans = spans_of(&p).expect("repaired labels are valid");
        let gold_spans = g.spans();
        let gold_by_range: HashMap<(usize, usize), &str> =
            gold_spans.iter().map(|s| ((s.start, s.end), s.category.as_str())).collect();

        for span in &gold_spans {
            total.gold += 1;
            per_category.entry(span.category.clone()).or_default().gold += 1;
        }
        for Span { start, end, category } in &pred_spans {
            total.predicted += 1;
            let entry = per_category.entry(category.clone()).or_default();
            entry.predicted += 1;
            match gold_by_range.get(&(*start, *end)) {
                Some(g) if *g == category => {
                    total.true_positives += 1;
                    entry.true_positives += 1;
                }
                Some(g) => *confusion_pairs.entry((g.to_string(), category.clone())).or_default() += 1,
                None => {}
            }
        }
    }

    let (precision, recall, f1) = total.scores();
    let per_category = per_category
        .into_iter()
        .map(|(c, counts)| {
            let (precision, recall, f1) = counts.scores();
            (c, CategoryScore { precision, recall, f1, support: counts.gold })
        })
        .collect();
    Ok(EvalReport { precision, recall, f1, counts: total, per_category, confusion_pairs, repairs })
}

#[derive(Serialize)]
struct Summary {
    precision: f64,
    recall: f64,
    f1: f64,
    true_positives: u64,
    predicted: u64,
    gold: u64,
    repairs: u64,
}

impl<S: Scalar> EvalReport<S> {
    /// Single-line JSON summary.
    pub fn summary_line(&self) -> String {
        serde_json::to_string(&Summary {
            precision: self.precision.to_f64(),
            recall: self.recall.to_f64(),
            f1: self.f1.to_f64(),
            true_positives: self.counts.true_positives,
            predicted: self.counts.predicted,
            gold: self.counts.gold,
            repairs: self.repairs,
        })
        .expect("summary serializes")
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<32} {:>9} {:>9} {:>9} {:>9}", "category", "precision", "recall", "f1", "support");
        for (c, s) in &self.per_category {
            let _ = writeln!(
                out,
                "{:<32} {:>9.4} {:>9.4} {:>9.4} {:>9}",
                c,
                s.precision.to_f64(),
                s.recall.to_f64(),
                s.f1.to_f64(),
                s.support
            );
        }
        let _ = writeln!(
            out,
            "{:<32} {:>9.4} {:>9.4} {:>9.4} {:>9}",
            "micro avg",
            self.precision.to_f64(),
            self.recall.to_f64(),
            self.f1.to_f64(),
            self.counts.gold
        );
        if !self.confusion_pairs.is_empty() {
            let _ = writeln!(out, "\nsame-boundary confusions (gold -> predicted):");
            for ((g, p), n) in &self.confusion_pairs {
                let _ = writeln!(out, "  {g} -> {p}: {n}");
            }
        }
        out
    }
}
