//! Pipeline configuration, read from a single TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::balance::SamplingConfig;
use crate::filter::{FilterConfig, FilterConfigError};
use crate::io::split::SizeSpec;
use crate::ontology::LoadMode;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config `{path}`: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error(transparent)]
    Filter(#[from] FilterConfigError),
    #[error("sampling.alpha must be positive, got {0}")]
    Alpha(f64),
    #[error("export.train_ratio must lie strictly between 0 and 1, got {0}")]
    TrainRatio(f64),
    #[error("unknown bundled merge map `{0}` (expected `4types` or `212types`)")]
    MergeMap(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub train_ratio: f64,
    /// Few-shot subsets drawn from the train split.
    pub fewshot_sizes: Vec<SizeSpec>,
    /// Bundled merge maps applied to both splits.
    pub merge_maps: Vec<String>,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            train_ratio: 0.9,
            fewshot_sizes: vec![SizeSpec::Count(50), SizeSpec::Count(100)],
            merge_maps: vec!["4types".into(), "212types".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dump_path: PathBuf,
    pub ontology_path: PathBuf,
    /// Category vocabulary; the bundled 315-category list when absent.
    pub vocabulary_path: Option<PathBuf>,
    /// Extra merge map applied at export, named after the file stem.
    pub merge_map_path: Option<PathBuf>,
    /// One abbreviation per line; the built-in list when absent.
    pub abbreviations_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub ontology_mode: LoadMode,
    pub filter: FilterConfig,
    pub sampling: SamplingConfig,
    pub export: ExportConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dump_path: PathBuf::from("dump.xml"),
            ontology_path: PathBuf::from("ontology.tsv"),
            vocabulary_path: None,
            merge_map_path: None,
            abbreviations_path: None,
            output_dir: PathBuf::from("out"),
            seed: 0,
            ontology_mode: LoadMode::Strict,
            filter: FilterConfig::default(),
            sampling: SamplingConfig::default(),
            export: ExportConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Reads `path`. Relative paths inside the file resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let mut config = Self::from_toml(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        let absolute = std::path::absolute(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        if let Some(base) = absolute.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        let mut config: Self = toml::from_str(text)?;
        config.propagate_seed();
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Joins every relative path onto `base`.
    pub fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.dump_path);
        join(&mut self.ontology_path);
        join(&mut self.output_dir);
        for p in [&mut self.vocabulary_path, &mut self.merge_map_path, &mut self.abbreviations_path].into_iter().flatten() {
            join(p);
        }
    }

    /// Copies the global seed into every stochastic stage.
    pub fn propagate_seed(&mut self) {
        self.filter.seed = self.seed;
        self.sampling.seed = self.seed;
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.filter.validate()?;
        if !(self.sampling.alpha > 0.0 && self.sampling.alpha.is_finite()) {
            return Err(ConfigError::Alpha(self.sampling.alpha));
        }
        let r = self.export.train_ratio;
        if !(r > 0.0 && r < 1.0) {
            return Err(ConfigError::TrainRatio(r));
        }
        if let Some(m) = self.export.merge_maps.iter().find(|m| !matches!(m.as_str(), "4types" | "212types")) {
            return Err(ConfigError::MergeMap(m.clone()));
        }
        Ok(())
    }

    /// Hex SHA-256 over the settings that affect output. `output_dir` is
    /// left out so identical runs into different directories agree.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        hex::encode(Sha256::digest(c.to_toml()))
    }
}
