//! Corpus manifest: aggregate statistics and provenance, written as TOML.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::filter::CategoryStats;
use crate::io::conll::{load_conll, ConllError};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub stage: String,
    pub example_count: u64,
    pub token_count: u64,
    pub entity_count: u64,
    pub category_count: u64,
    /// Size in bytes of the stage's CoNLL file.
    pub byte_size: u64,
    pub pipeline_config_digest: String,
    pub dump_checksum: String,
    pub per_stage_drop_tallies: BTreeMap<String, u64>,
    /// Other counters: skipped pages, malformed markup, ontology collisions.
    pub counters: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default)]
pub struct Provenance {
    pub config_digest: String,
    pub dump_checksum: String,
}

pub fn write_manifest(
    stage: &str,
    stats: &CategoryStats,
    byte_size: u64,
    drops: &BTreeMap<String, u64>,
    counters: &BTreeMap<String, u64>,
    provenance: &Provenance,
) -> CorpusManifest {
    CorpusManifest {
        stage: stage.to_string(),
        example_count: stats.total_sentences,
        token_count: stats.total_tokens,
        entity_count: stats.total_entities,
        category_count: stats.category_count() as u64,
        byte_size,
        pipeline_config_digest: provenance.config_digest.clone(),
        dump_checksum: provenance.dump_checksum.clone(),
        per_stage_drop_tallies: drops.clone(),
        counters: counters.clone(),
    }
}

impl CorpusManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// True if the counts match those recomputed from `conll` bytes.
    pub fn matches_conll(&self, conll: &[u8]) -> Result<bool, ConllError> {
        let (corpus, _) = load_conll(conll)?;
        let stats = crate::filter::compute_stats(&corpus);
        Ok(self.example_count == stats.total_sentences
            && self.token_count == stats.total_tokens
            && self.entity_count == stats.total_entities
            && self.category_count == stats.category_count() as u64
            && self.byte_size == conll.len() as u64)
    }
}

/// Hex SHA-256 of a byte stream.
pub fn sha256_hex<R: Read>(mut reader: R) -> std::io::Result<String> {
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::Span;
    use crate::filter::compute_stats;
    use crate::io::conll::to_conll_string;
    use crate::tagger::{SentenceKey, TaggedSentence};

    #[test]
    fn manifest_matches_emitted_file() {
        let corpus = vec![
            TaggedSentence::from_spans(vec!["Paris".into(), "is".into()], &[Span::new(0, 1, "city")], SentenceKey::default())
                .unwrap(),
            TaggedSentence::from_spans(vec!["x".into()], &[], SentenceKey::default()).unwrap(),
        ];
        let conll = to_conll_string(&corpus);
        let drops = BTreeMap::from([("no_entity".to_string(), 4)]);
        let m = write_manifest("filter", &compute_stats(&corpus), conll.len() as u64, &drops, &BTreeMap::new(), &Provenance::default());
        assert_eq!((m.example_count, m.token_count, m.category_count), (2, 3, 1));
        assert!(m.matches_conll(conll.as_bytes()).unwrap());
        assert_eq!(CorpusManifest::from_toml(&m.to_toml()).unwrap(), m);
        assert!(m.to_toml().contains("example_count = 2"));
    }

    #[test]
    fn empty_corpus_is_all_zero() {
        let m = write_manifest("build", &CategoryStats::default(), 0, &BTreeMap::new(), &BTreeMap::new(), &Provenance::default());
        assert_eq!((m.example_count, m.token_count, m.category_count, m.byte_size), (0, 0, 0, 0));
        assert!(m.matches_conll(b"").unwrap());
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(&b"abc"[..]).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
