//! Entity-to-category index built from a DBpedia instance-types mapping.
//!
//! The mapping source is line-delimited `entity_name<TAB>category`. Entity
//! names are normalized with [`normalize_title`] so that anchor targets from
//! wikitext (`Elvis_Presley`, `elvis Presley`, `Elvis%20Presley`) all resolve
//! to the same key.

use std::collections::HashMap;
use std::io::BufRead;

use percent_encoding::percent_decode_str;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::CategoryVocabulary;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("line {line}: unknown category `{category}`")]
    UnknownCategory { line: usize, category: String },
    #[error("line {line}: expected `entity<TAB>category`")]
    Malformed { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("title is empty after normalization")]
pub struct InvalidTitle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    /// Unknown categories abort the load.
    #[default]
    Strict,
    /// Unknown categories are remapped to [`ENTITY`](crate::vocab::ENTITY) and tallied.
    Lenient,
}

/// Counters collected while loading a mapping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoadTally {
    pub records: u64,
    pub collisions: u64,
    pub remapped: u64,
    pub invalid_titles: u64,
}

/// Canonical lookup key for a page title.
///
/// Percent-escapes are decoded (repeatedly, until none remain), underscores
/// become spaces, whitespace is collapsed and trimmed, and the whole key is
/// lowercased.
pub fn normalize_title(raw: &str) -> Result<String, InvalidTitle> {
    let mut decoded = raw.to_string();
    while decoded.contains('%') {
        let next = percent_decode_str(&decoded).decode_utf8_lossy().into_owned();
        if next == decoded {
            break;
        }
        decoded = next;
    }
    let spaced = decoded.replace('_', " ");
    let mut key = String::with_capacity(spaced.len());
    for word in spaced.split_whitespace() {
        if !key.is_empty() {
            key.push(' ');
        }
        key.push_str(word);
    }
    if key.is_empty() {
        return Err(InvalidTitle);
    }
    Ok(key.to_lowercase())
}

/// Immutable entity-name → category map.
#[derive(Debug, Clone)]
pub struct OntologyIndex {
    entries: HashMap<String, u16>,
    vocabulary: CategoryVocabulary,
}

impl OntologyIndex {
    pub fn load<R: BufRead>(
        source: R,
        vocabulary: CategoryVocabulary,
        mode: LoadMode,
    ) -> Result<(Self, LoadTally), OntologyError> {
        let mut entries = HashMap::new();
        let mut tally = LoadTally::default();
        let entity = vocabulary.entity_id();
        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, category) = line
                .split_once('\t')
                .ok_or(OntologyError::Malformed { line: line_no })?;
            tally.records += 1;
            let category = category.trim();
            // Mapping records never assign the sentinel; it is reserved for
            // anchors the index does not know.
            let id = match vocabulary.id(category).or_else(|| vocabulary.id(&category.to_lowercase())) {
                Some(id) if id != entity => id,
                _ => match mode {
                    LoadMode::Strict => {
                        return Err(OntologyError::UnknownCategory {
                            line: line_no,
                            category: category.to_string(),
                        })
                    }
                    LoadMode::Lenient => {
                        tally.remapped += 1;
                        entity
                    }
                },
            };
            let Ok(key) = normalize_title(name) else {
                tally.invalid_titles += 1;
                continue;
            };
            match entries.entry(key) {
                std::collections::hash_map::Entry::Occupied(_) => tally.collisions += 1,
                std::collections::hash_map::Entry::Vacant(slot) => {
                    slot.insert(id);
                }
            }
        }
        Ok((Self { entries, vocabulary }, tally))
    }

    /// Builds an index from in-memory records.
    pub fn from_records<'a, I>(
        records: I,
        vocabulary: CategoryVocabulary,
        mode: LoadMode,
    ) -> Result<(Self, LoadTally), OntologyError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let text: String = records
            .into_iter()
            .map(|(name, cat)| format!("{name}\t{cat}\n"))
            .collect();
        Self::load(text.as_bytes(), vocabulary, mode)
    }

    pub fn lookup(&self, target: &str) -> Option<&str> {
        let key = normalize_title(target).ok()?;
        self.entries.get(&key).map(|&id| self.vocabulary.name(id))
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    pub fn vocabulary(&self) -> &CategoryVocabulary {
        &self.vocabulary
    }
}
