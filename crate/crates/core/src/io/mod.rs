//! Corpus serialization, splits, merge maps and manifests.

pub mod conll;
pub mod jsonl;
pub mod manifest;
pub mod merge;
pub mod split;

pub use conll::{emit_conll, load_conll, ConllError, ConllReader};
pub use jsonl::{emit_jsonl, load_jsonl, JsonlError};
pub use manifest::{write_manifest, CorpusManifest, Provenance};
pub use merge::{apply_merge_map, MergeError, MergeMap};
pub use split::{make_fewshot_subset, split_train_val, SizeSpec, SplitError};
