//! Stage orchestration: build, filter, balance, export.
//!
//! Each stage takes the previous stage's corpus and manifest and writes
//! `<name>.jsonl`, `<name>.conll`, `<name>.stats.tsv` and
//! `<name>.manifest.toml` under `output_dir/<stage>/`. Drop tallies and
//! counters accumulate from stage to stage. All parallel work goes through
//! order-preserving collects on a dedicated pool, so outputs do not depend
//! on the worker count.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::balance::{balance_corpus, before_after_report, report_tsv, BalanceError};
use crate::config::{ConfigError, PipelineConfig};
use crate::dump::{ArticleStream, DumpError};
use crate::filter::{par_compute_stats, run_filter};
use crate::io::conll::{emit_conll, load_conll, ConllError};
use crate::io::jsonl::{emit_jsonl, load_jsonl, JsonlError};
use crate::io::manifest::{sha256_hex, write_manifest, CorpusManifest, Provenance};
use crate::io::merge::{apply_merge_map, MergeError, MergeMap};
use crate::io::split::{make_fewshot_subset, split_train_val, SizeSpec, SplitError};
use crate::ontology::{OntologyError, OntologyIndex};
use crate::segment::{RawSentence, Segmenter};
use crate::tagger::{tag_sentence, TaggedSentence};
use crate::vocab::{CategoryVocabulary, VocabError};
use crate::wikitext::StripOptions;

const BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Build,
    Filter,
    Balance,
    Export,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Build => "build",
            Stage::Filter => "filter",
            Stage::Balance => "balance",
            Stage::Export => "export",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error("cannot open `{path}`: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("cannot write `{path}`: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("vocabulary `{path}`: {source}")]
    Vocabulary { path: PathBuf, source: VocabError },
    #[error("ontology `{path}`: {source}")]
    Ontology { path: PathBuf, source: OntologyError },
    #[error("dump `{path}`: {source}")]
    Dump { path: PathBuf, source: DumpError },
    #[error("`{path}`: {source}")]
    Conll { path: PathBuf, source: ConllError },
    #[error("`{path}`: {source}")]
    Jsonl { path: PathBuf, source: JsonlError },
    #[error("merge map `{name}`: {source}")]
    Merge { name: String, source: MergeError },
    #[error("manifest `{path}`: {source}")]
    Manifest { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Balance(#[from] BalanceError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// A stage failure, labelled with the stage it came from.
#[derive(Debug, Error)]
#[error("{stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Box<StageError>,
}

impl PipelineError {
    pub fn new(stage: Stage, source: impl Into<StageError>) -> Self {
        Self { stage, source: Box::new(source.into()) }
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<StageError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::new(stage, e))
    }
}

/// A corpus with the manifest describing how it was produced.
#[derive(Debug, Clone, Default)]
pub struct StageOutput {
    pub corpus: Vec<TaggedSentence>,
    pub manifest: CorpusManifest,
}

pub struct Runner {
    config: PipelineConfig,
    pool: rayon::ThreadPool,
    persist: bool,
}

impl Runner {
    /// `workers = 0` uses one thread per core.
    pub fn new(config: PipelineConfig, workers: usize) -> Result<Self, PipelineError> {
        config.validate().at(Stage::Config)?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().at(Stage::Config)?;
        Ok(Self { config, pool, persist: true })
    }

    /// When false, build/filter/balance keep their results in memory only.
    pub fn persist_intermediate(mut self, persist: bool) -> Self {
        self.persist = persist;
        self
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        self.config.output_dir.join(stage.name())
    }

    /// Default input of a stage: the corpus written by the stage before it.
    pub fn default_input(&self, stage: Stage) -> PathBuf {
        let prev = match stage {
            Stage::Filter => Stage::Build,
            Stage::Balance => Stage::Filter,
            _ => Stage::Balance,
        };
        self.stage_dir(prev).join("corpus.jsonl")
    }

    fn provenance(&self, dump_checksum: &str) -> Provenance {
        Provenance { config_digest: self.config.digest(), dump_checksum: dump_checksum.to_string() }
    }

    /// Dump → tagged sentences. Every raw sentence is also written to
    /// `raw_sink` as one JSON line, if given.
    pub fn build(&self, mut raw_sink: Option<&mut dyn Write>) -> Result<StageOutput, PipelineError> {
        let stage = Stage::Build;
        let c = &self.config;
        let vocabulary = match &c.vocabulary_path {
            None => CategoryVocabulary::bundled(),
            Some(path) => CategoryVocabulary::from_reader(open(path).at(stage)?)
                .map_err(|source| StageError::Vocabulary { path: path.clone(), source })
                .at(stage)?,
        };
        let segmenter = match &c.abbreviations_path {
            None => Segmenter::default(),
            Some(path) => Segmenter::from_reader(open(path).at(stage)?)
                .map_err(|source| StageError::Open { path: path.clone(), source })
                .at(stage)?,
        };
        let (index, load) = OntologyIndex::load(open(&c.ontology_path).at(stage)?, vocabulary, c.ontology_mode)
            .map_err(|source| StageError::Ontology { path: c.ontology_path.clone(), source })
            .at(stage)?;
        let dump_checksum = sha256_hex(open(&c.dump_path).at(stage)?)
            .map_err(|source| StageError::Open { path: c.dump_path.clone(), source })
            .at(stage)?;

        let mut articles = ArticleStream::new(open(&c.dump_path).at(stage)?, StripOptions::default());
        let mut corpus = Vec::new();
        let mut batch = Vec::with_capacity(BATCH);
        loop {
            let next = articles
                .next()
                .transpose()
                .map_err(|source| StageError::Dump { path: c.dump_path.clone(), source })
                .at(stage)?;
            let end = next.is_none();
            batch.extend(next);
            if batch.len() < BATCH && !end {
                continue;
            }
            let done: Vec<(Vec<RawSentence>, Vec<TaggedSentence>)> = self.pool.install(|| {
                batch
                    .par_iter()
                    .map(|a| {
                        let raw = segmenter.split_sentences(a);
                        let tagged = raw.iter().map(|s| tag_sentence(s, &index)).collect();
                        (raw, tagged)
                    })
                    .collect()
            });
            batch.clear();
            for (raw, tagged) in done {
                if let Some(sink) = raw_sink.as_deref_mut() {
                    for s in &raw {
                        write_json_line(sink, s).map_err(|source| StageError::Write { path: "-".into(), source }).at(stage)?;
                    }
                }
                corpus.extend(tagged);
            }
            if end {
                break;
            }
        }

        let t = articles.tally();
        let drops = BTreeMap::from([
            ("build.redirects".to_string(), t.redirects),
            ("build.other_namespace".to_string(), t.other_namespace),
            ("build.empty_after_strip".to_string(), t.empty_after_strip),
        ]);
        let counters = BTreeMap::from([
            ("build.pages".to_string(), t.pages),
            ("build.articles".to_string(), t.articles),
            ("build.malformed_markup".to_string(), t.malformed_markup),
            ("ontology.records".to_string(), load.records),
            ("ontology.collisions".to_string(), load.collisions),
            ("ontology.remapped".to_string(), load.remapped),
            ("ontology.invalid_titles".to_string(), load.invalid_titles),
        ]);
        let base = CorpusManifest {
            pipeline_config_digest: c.digest(),
            dump_checksum,
            per_stage_drop_tallies: drops,
            counters,
            ..Default::default()
        };
        self.finish(stage, corpus, &base, BTreeMap::new(), BTreeMap::new(), self.persist)
    }

    pub fn filter(&self, input: StageOutput) -> Result<StageOutput, PipelineError> {
        let outcome = self.pool.install(|| run_filter(input.corpus, &self.config.filter));
        let t = outcome.tally;
        let drops = BTreeMap::from([
            ("filter.scarce_discard".to_string(), t.scarce_discard),
            ("filter.no_entity".to_string(), t.no_entity),
            ("filter.probabilistic".to_string(), t.probabilistic),
        ]);
        let counters = BTreeMap::from([
            ("filter.scarce_relabeled".to_string(), t.scarce_relabeled),
            ("filter.scarce_categories".to_string(), outcome.scarce.len() as u64),
        ]);
        self.finish(Stage::Filter, outcome.kept, &input.manifest, drops, counters, self.persist)
    }

    pub fn balance(&self, input: StageOutput) -> Result<StageOutput, PipelineError> {
        let stage = Stage::Balance;
        let s = &self.config.sampling;
        let (resampled, before) = self
            .pool
            .install(|| {
                let before = par_compute_stats(&input.corpus);
                balance_corpus(&input.corpus, s.alpha, s).map(|r| (r, before))
            })
            .at(stage)?;
        let out = self.finish(stage, resampled, &input.manifest, BTreeMap::new(), BTreeMap::new(), self.persist)?;
        if self.persist {
            let report = report_tsv(&before_after_report(&before, &out.corpus));
            write_file(&self.stage_dir(stage).join("report.tsv"), report.as_bytes()).at(stage)?;
        }
        Ok(out)
    }

    /// Writes the train/val split, merge-mapped variants and few-shot
    /// subsets. Returns one manifest per written corpus, keyed by its path
    /// relative to the export directory.
    pub fn export(&self, input: StageOutput) -> Result<BTreeMap<String, CorpusManifest>, PipelineError> {
        let stage = Stage::Export;
        let c = &self.config;
        let (train, val) = split_train_val(&input.corpus, c.export.train_ratio, c.seed).at(stage)?;
        let mut written = BTreeMap::new();
        let mut emit = |name: String, corpus: Vec<TaggedSentence>| -> Result<(), PipelineError> {
            let out = self.write_stage(stage, &name, corpus, &input.manifest, BTreeMap::new(), BTreeMap::new(), true)?;
            written.insert(name, out.manifest);
            Ok(())
        };

        let mut maps: Vec<MergeMap> = c
            .export
            .merge_maps
            .iter()
            .map(|m| if m == "4types" { MergeMap::four_types() } else { MergeMap::types_212() })
            .collect();
        if let Some(path) = &c.merge_map_path {
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "custom".into());
            let map = MergeMap::from_reader(&name, open(path).at(stage)?)
                .map_err(|source| StageError::Merge { name: name.clone(), source })
                .at(stage)?;
            maps.push(map);
        }
        for map in &maps {
            for (split, corpus) in [("train", &train), ("val", &val)] {
                let mapped = apply_merge_map(corpus, map)
                    .map_err(|source| StageError::Merge { name: map.name.clone(), source })
                    .at(stage)?;
                emit(format!("{}/{split}", map.name), mapped)?;
            }
        }
        for &size in &c.export.fewshot_sizes {
            let subset = make_fewshot_subset(&train, size, c.seed).at(stage)?;
            emit(format!("fewshot/{}", size_label(size)), subset)?;
        }
        emit("train".into(), train)?;
        emit("val".into(), val)?;
        Ok(written)
    }

    /// build → filter → balance → export.
    pub fn all(&self) -> Result<BTreeMap<String, CorpusManifest>, PipelineError> {
        let built = self.build(None)?;
        let filtered = self.filter(built)?;
        let balanced = self.balance(filtered)?;
        self.export(balanced)
    }

    fn finish(
        &self,
        stage: Stage,
        corpus: Vec<TaggedSentence>,
        prev: &CorpusManifest,
        drops: BTreeMap<String, u64>,
        counters: BTreeMap<String, u64>,
        persist: bool,
    ) -> Result<StageOutput, PipelineError> {
        self.write_stage(stage, "corpus", corpus, prev, drops, counters, persist)
    }

    #[allow(clippy::too_many_arguments)]
    fn write_stage(
        &self,
        stage: Stage,
        name: &str,
        corpus: Vec<TaggedSentence>,
        prev: &CorpusManifest,
        drops: BTreeMap<String, u64>,
        counters: BTreeMap<String, u64>,
        persist: bool,
    ) -> Result<StageOutput, PipelineError> {
        let mut all_drops = prev.per_stage_drop_tallies.clone();
        all_drops.extend(drops);
        let mut all_counters = prev.counters.clone();
        all_counters.extend(counters);
        let stats = self.pool.install(|| par_compute_stats(&corpus));
        let provenance = self.provenance(&prev.dump_checksum);
        let label = if name == "corpus" { stage.name().to_string() } else { format!("{stage}/{name}") };

        let base = self.stage_dir(stage).join(name);
        let byte_size = if persist {
            let conll = with_ext(&base, "conll");
            save_corpus(&conll, &corpus).at(stage)?;
            write_with(&with_ext(&base, "jsonl"), |w| emit_jsonl(&corpus, w)).at(stage)?;
            write_file(&with_ext(&base, "stats.tsv"), stats.to_tsv().as_bytes()).at(stage)?;
            std::fs::metadata(&conll).map_err(|source| StageError::Open { path: conll.clone(), source }).at(stage)?.len()
        } else {
            let mut counter = ByteCounter(0);
            emit_conll(&corpus, &mut counter).expect("counting sink does not fail");
            counter.0
        };
        let manifest = write_manifest(&label, &stats, byte_size, &all_drops, &all_counters, &provenance);
        if persist {
            write_file(&with_ext(&base, "manifest.toml"), manifest.to_toml().as_bytes()).at(stage)?;
        }
        Ok(StageOutput { corpus, manifest })
    }
}

/// Loads a corpus written by an earlier stage (`.jsonl` or `.conll`),
/// together with the sibling `<stem>.manifest.toml` when present.
pub fn load_stage_input(path: &Path) -> Result<StageOutput, StageError> {
    let reader = open(path)?;
    let corpus = if path.extension().is_some_and(|e| e == "conll") {
        load_conll(reader).map_err(|source| StageError::Conll { path: path.into(), source })?.0
    } else {
        load_jsonl(reader).map_err(|source| StageError::Jsonl { path: path.into(), source })?
    };
    let manifest_path = path.with_extension("manifest.toml");
    let manifest = match std::fs::read_to_string(&manifest_path) {
        Ok(text) => CorpusManifest::from_toml(&text).map_err(|source| StageError::Manifest { path: manifest_path, source })?,
        Err(_) => CorpusManifest::default(),
    };
    Ok(StageOutput { corpus, manifest })
}

/// Loads a corpus file by extension; `.conll` input also reports the
/// number of repaired labels.
pub fn load_corpus(path: &Path) -> Result<(Vec<TaggedSentence>, u64), StageError> {
    let reader = open(path)?;
    if path.extension().is_some_and(|e| e == "conll") {
        load_conll(reader).map_err(|source| StageError::Conll { path: path.into(), source })
    } else {
        Ok((load_jsonl(reader).map_err(|source| StageError::Jsonl { path: path.into(), source })?, 0))
    }
}

/// Writes a corpus as CoNLL or JSONL depending on the extension.
pub fn save_corpus(path: &Path, corpus: &[TaggedSentence]) -> Result<(), StageError> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        write_with(path, |w| emit_jsonl(corpus, w))
    } else {
        write_with(path, |w| {
            emit_conll(corpus, w).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))
        })
    }
}

fn size_label(size: SizeSpec) -> String {
    match size {
        SizeSpec::Count(n) => n.to_string(),
        SizeSpec::Percent(p) => format!("{p}pct"),
    }
}

fn with_ext(base: &Path, ext: &str) -> PathBuf {
    let mut s = base.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn open(path: &Path) -> Result<Box<dyn BufRead>, StageError> {
    File::open(path)
        .map(|f| Box::new(BufReader::new(f)) as Box<dyn BufRead>)
        .map_err(|source| StageError::Open { path: path.into(), source })
}

fn write_with(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), StageError> {
    let err = |source| StageError::Write { path: path.into(), source };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(err)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    body(&mut w).map_err(err)?;
    w.flush().map_err(err)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), StageError> {
    write_with(path, |w| w.write_all(bytes))
}

fn write_json_line<T: serde::Serialize>(sink: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *sink, value)?;
    sink.write_all(b"\n")
}

struct ByteCounter(u64);

impl Write for ByteCounter {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.0 += buf.len() as u64;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
