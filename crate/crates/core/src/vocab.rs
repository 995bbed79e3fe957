//! Category vocabulary.

use std::collections::HashMap;
use std::io::BufRead;

use thiserror::Error;

/// Sentinel category for anchored mentions that have no ontology type.
pub const ENTITY: &str = "ENTITY";

const BUNDLED: &str = include_str!("../data/categories.txt");

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("line {line}: duplicate category `{name}`")]
    Duplicate { line: usize, name: String },
    #[error("line {line}: category `{name}` must be lowercase")]
    NotLowercase { line: usize, name: String },
    #[error("vocabulary does not contain `{ENTITY}`")]
    MissingEntity,
    #[error("vocabulary has {0} categories, more than the supported 65535")]
    TooLarge(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ordered set of category names, always containing [`ENTITY`] exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryVocabulary {
    names: Vec<String>,
    ids: HashMap<String, u16>,
}

impl CategoryVocabulary {
    /// The 315-category vocabulary shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED.as_bytes()).expect("bundled vocabulary is valid")
    }

    /// One category per line; blank lines and `#` comments are ignored.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, VocabError> {
        let mut names = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let name = line.trim();
            if name.is_empty() || name.starts_with('#') {
                continue;
            }
            names.push((i + 1, name.to_string()));
        }
        Self::from_names(names)
    }

    fn from_names(names: Vec<(usize, String)>) -> Result<Self, VocabError> {
        if names.len() > u16::MAX as usize {
            return Err(VocabError::TooLarge(names.len()));
        }
        let mut ids = HashMap::with_capacity(names.len());
        let mut ordered = Vec::with_capacity(names.len());
        for (line, name) in names {
            if name != ENTITY && name.to_lowercase() != name {
                return Err(VocabError::NotLowercase { line, name });
            }
            if ids.contains_key(&name) {
                return Err(VocabError::Duplicate { line, name });
            }
            ids.insert(name.clone(), ordered.len() as u16);
            ordered.push(name);
        }
        if !ids.contains_key(ENTITY) {
            return Err(VocabError::MissingEntity);
        }
        Ok(Self { names: ordered, ids })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.ids.contains_key(name)
    }

    pub fn id(&self, name: &str) -> Option<u16> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u16) -> &str {
        &self.names[id as usize]
    }

    pub fn entity_id(&self) -> u16 {
        self.ids[ENTITY]
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}
