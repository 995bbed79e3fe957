//! Build a fine-grained named-entity corpus from a MediaWiki dump and an
//! entity-type ontology: extract anchored links, split sentences, tag BIO
//! spans, filter, rebalance by category frequency and export.

pub mod balance;
pub mod bio;
pub mod config;
pub mod dump;
pub mod eval;
pub mod filter;
pub mod io;
pub mod ontology;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod segment;
pub mod synth;
pub mod tagger;
pub mod vocab;
pub mod wikitext;

pub use balance::{balance_corpus, sampling_distribution, AliasTable, SamplingConfig, SamplingDistribution, TargetSize};
pub use bio::{Label, Span};
pub use dump::{stream_articles, Article};
pub use eval::{span_f1, EvalReport};
pub use filter::{compute_stats, run_filter, CategoryStats, FilterConfig};
pub use ontology::{LoadMode, OntologyIndex};
pub use scalar::Scalar;
pub use segment::{split_sentences, RawSentence, Segmenter};
pub use tagger::{tag_sentence, SentenceKey, TaggedSentence};
pub use vocab::{CategoryVocabulary, ENTITY};
pub use wikitext::extract_anchors;

/// Exact rational used where equality with an oracle must be bitwise.
pub type Exact = num_rational::Ratio<i64>;

pub type Distribution = SamplingDistribution<f64>;
pub type Distribution32 = SamplingDistribution<f32>;
pub type Report = EvalReport<f64>;
pub type ExactReport = EvalReport<Exact>;
