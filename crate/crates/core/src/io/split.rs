//! Train/validation splits and few-shot subsets.

use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{keyed_rng, Purpose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("ratio {0} must lie strictly between 0 and 1")]
    Ratio(f64),
    #[error("requested {requested} sentences from a dataset of {available}")]
    TooLarge { requested: usize, available: usize },
    #[error("invalid size `{0}`: expected a count or a percentage like `10%`")]
    Size(String),
}

/// Sentence-level random partition. Both halves keep the original order.
/// The train half has `round(ratio * n)` sentences.
pub fn split_train_val<T: Clone>(corpus: &[T], ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), SplitError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(SplitError::Ratio(ratio));
    }
    let n = corpus.len();
    let n_train = (ratio * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut keyed_rng(seed, Purpose::Split, 0));
    let mut in_train = vec![false; n];
    for &i in &order[..n_train] {
        in_train[i] = true;
    }
    let mut train = Vec::with_capacity(n_train);
    let mut val = Vec::with_capacity(n - n_train);
    for (item, &t) in corpus.iter().zip(&in_train) {
        if t {
            train.push(item.clone());
        } else {
            val.push(item.clone());
        }
    }
    Ok((train, val))
}

/// A sentence count (`50` or `"50"`) or a percentage (`"5%"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SizeRepr", into = "String")]
pub enum SizeSpec {
    Count(usize),
    Percent(f64),
}

impl SizeSpec {
    pub fn resolve(self, available: usize) -> usize {
        match self {
            SizeSpec::Count(n) => n,
            SizeSpec::Percent(p) => (p / 100.0 * available as f64).round() as usize,
        }
    }
}

impl FromStr for SizeSpec {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || SplitError::Size(s.to_string());
        match s.strip_suffix('%') {
            Some(p) => {
                let p: f64 = p.trim().parse().map_err(|_| bad())?;
                if !(0.0..=100.0).contains(&p) {
                    return Err(bad());
                }
                Ok(SizeSpec::Percent(p))
            }
            None => s.parse().map(SizeSpec::Count).map_err(|_| bad()),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SizeRepr {
    Count(usize),
    Text(String),
}

impl TryFrom<SizeRepr> for SizeSpec {
    type Error = SplitError;

    fn try_from(r: SizeRepr) -> Result<Self, Self::Error> {
        match r {
            SizeRepr::Count(n) => Ok(SizeSpec::Count(n)),
            SizeRepr::Text(s) => s.parse(),
        }
    }
}

impl From<SizeSpec> for String {
    fn from(s: SizeSpec) -> Self {
        s.to_string()
    }
}

impl fmt::Display for SizeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeSpec::Count(n) => write!(f, "{n}"),
            SizeSpec::Percent(p) => write!(f, "{p}%"),
        }
    }
}

/// Uniform sample without replacement, emitted in original order.
pub fn make_fewshot_subset<T: Clone>(dataset: &[T], size: SizeSpec, seed: u64) -> Result<Vec<T>, SplitError> {
    let k = size.resolve(dataset.len());
    if k > dataset.len() {
        return Err(SplitError::TooLarge { requested: k, available: dataset.len() });
    }
    let mut picked = index::sample(&mut keyed_rng(seed, Purpose::Fewshot, 0), dataset.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| dataset[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ninety_ten() {
        let data: Vec<u32> = (0..10).collect();
        let (train, val) = split_train_val(&data, 0.9, 1).unwrap();
        assert_eq!((train.len(), val.len()), (9, 1));
        let (train, val) = split_train_val(&[1, 2], 0.5, 1).unwrap();
        assert_eq!((train.len(), val.len()), (1, 1));
        let (train, val) = split_train_val::<u8>(&[], 0.9, 1).unwrap();
        assert!(train.is_empty() && val.is_empty());
        assert!(split_train_val(&data, 1.0, 1).is_err());
    }

    #[test]
    fn same_seed_same_split() {
        let data: Vec<u32> = (0..100).collect();
        assert_eq!(split_train_val(&data, 0.9, 4).unwrap(), split_train_val(&data, 0.9, 4).unwrap());
        assert_ne!(split_train_val(&data, 0.9, 4).unwrap(), split_train_val(&data, 0.9, 5).unwrap());
    }

    #[test]
    fn fewshot_examples() {
        let data: Vec<u32> = (0..5000).collect();
        let subset = make_fewshot_subset(&data, SizeSpec::Count(50), 3).unwrap();
        assert_eq!(subset.len(), 50);
        assert!(subset.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subset, make_fewshot_subset(&data, SizeSpec::Count(50), 3).unwrap());
        assert_eq!(make_fewshot_subset(&data, "100%".parse().unwrap(), 3).unwrap(), data);
        assert_eq!(make_fewshot_subset(&data, "10%".parse().unwrap(), 3).unwrap().len(), 500);
        assert!(matches!(
            make_fewshot_subset(&data, SizeSpec::Count(5001), 3),
            Err(SplitError::TooLarge { requested: 5001, available: 5000 })
        ));
    }

    #[test]
    fn size_spec_parsing() {
        assert_eq!("50".parse::<SizeSpec>().unwrap(), SizeSpec::Count(50));
        assert_eq!("12.5%".parse::<SizeSpec>().unwrap(), SizeSpec::Percent(12.5));
        assert!("150%".parse::<SizeSpec>().is_err());
        assert!("ten".parse::<SizeSpec>().is_err());
    }

    proptest! {
        #[test]
        fn split_is_disjoint_and_exhaustive(n in 0usize..200, ratio in 0.01f64..0.99, seed in any::<u64>()) {
            let data: Vec<usize> = (0..n).collect();
            let (train, val) = split_train_val(&data, ratio, seed).unwrap();
            prop_assert_eq!(train.len(), (ratio * n as f64).round() as usize);
            let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, data);
        }
    }
}
