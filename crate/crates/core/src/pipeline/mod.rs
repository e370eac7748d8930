//! End-to-end orchestration: prepare-data → train → evaluate → explain →
//! report, driven by one TOML config. Every stage writes its artifacts under
//! the output directory together with a run manifest, and every artifact
//! carries the hash of the config that produced it.

mod artifacts;
mod stages;

pub use artifacts::{read_partition, write_partition, DatasetManifest, MetricsArtifact, Partition, RunManifest};
pub use stages::{ClassRanking, CombinedReport, StageOutcome};

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::DataError;
use crate::explain::ExplainError;
use crate::metrics::MetricsError;
use crate::nn::{AdamConfig, LossKind, ModelFamily, NnError, TrainConfig};
use crate::survey::SurveyError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage `{stage}` needs {path}, which does not exist; run the earlier stage first")]
    MissingArtifact { stage: String, path: PathBuf },
    #[error("invalid config field `{field}`: {reason}")]
    ConfigInvalid { field: String, reason: String },
    #[error("{path} was produced by config {found}, expected {expected}")]
    HashMismatch { path: PathBuf, expected: String, found: String },
    #[error("output directory is locked by another command ({0}); remove the file if no command is running")]
    Locked(PathBuf),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Survey(#[from] SurveyError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
}

impl PipelineError {
    pub(crate) fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Self + '_ {
        move |source| PipelineError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn json(path: &Path) -> impl FnOnce(serde_json::Error) -> Self + '_ {
        move |source| PipelineError::Json { path: path.to_path_buf(), source }
    }

    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        PipelineError::ConfigInvalid { field: field.into(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// NSL-KDD training file (43 comma-separated fields per line).
    pub train_path: PathBuf,
    pub train_fraction: f64,
    pub shuffle: bool,
    /// Use a seeded subsample of this many records; 0 keeps every record.
    pub subsample: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { train_path: PathBuf::from("data/KDDTrain+.txt"), train_fraction: 0.8, shuffle: true, subsample: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub shard_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 50,
            batch_size: 64,
            shard_size: 16,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSection {
    pub background_size: usize,
    pub instances: usize,
    pub coalitions: usize,
}

impl Default for ExplainSection {
    fn default() -> Self {
        Self { background_size: 100, instances: 100, coalitions: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub models: Vec<ModelFamily>,
    pub data: DataConfig,
    pub train: TrainSection,
    pub explain: ExplainSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            out_dir: PathBuf::from("runs/default"),
            models: vec![ModelFamily::Cnn, ModelFamily::Lstm],
            data: DataConfig::default(),
            train: TrainSection::default(),
            explain: ExplainSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(PipelineError::io(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let d = &self.data;
        if !(d.train_fraction > 0.0 && d.train_fraction < 1.0) {
            return Err(PipelineError::invalid("data.train_fraction", format!("must lie in (0, 1), got {}", d.train_fraction)));
        }
        if self.models.is_empty() {
            return Err(PipelineError::invalid("models", "list at least one of \"cnn\", \"lstm\""));
        }
        let t = &self.train;
        for (field, v) in [("train.epochs", t.epochs), ("train.batch_size", t.batch_size), ("train.shard_size", t.shard_size)] {
            if v == 0 {
                return Err(PipelineError::invalid(field, "must be at least 1"));
            }
        }
        let positive = |v: f64| v > 0.0;
        if !positive(t.learning_rate) || !(0.0..1.0).contains(&t.beta1) || !(0.0..1.0).contains(&t.beta2) || !positive(t.epsilon) {
            return Err(PipelineError::invalid("train", "Adam needs learning_rate > 0, beta1/beta2 in [0, 1), epsilon > 0"));
        }
        let e = &self.explain;
        for (field, v) in [("explain.background_size", e.background_size), ("explain.instances", e.instances)] {
            if v == 0 {
                return Err(PipelineError::invalid(field, "must be at least 1"));
            }
        }
        if e.coalitions < 2 {
            return Err(PipelineError::invalid("explain.coalitions", "must be at least 2"));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form, excluding `out_dir` so that the
    /// same experiment hashes equally wherever it is written.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Training settings for one family; the CNN trains on integer targets,
    /// the LSTM on one-hot targets.
    pub fn train_config(&self, family: ModelFamily) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            loss: match family {
                ModelFamily::Cnn => LossKind::SparseCe,
                ModelFamily::Lstm => LossKind::CategoricalCe,
            },
            seed: self.seed,
            adam: AdamConfig { learning_rate: t.learning_rate, beta1: t.beta1, beta2: t.beta2, epsilon: t.epsilon },
            shard_size: t.shard_size,
        }
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
        let path = dir.join(".lock");
        match std::fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                use std::io::Write;
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::Locked(path)),
            Err(e) => Err(PipelineError::Io { path, source: e }),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

pub(crate) fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// A configured pipeline rooted at `config.out_dir`.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub config_hash: String,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let config_hash = config.hash();
        Ok(Self { config, config_hash })
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.out_dir
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out_dir().join("data")
    }

    pub fn model_dir(&self, family: ModelFamily) -> PathBuf {
        self.out_dir().join("models").join(family.name())
    }

    pub fn metrics_path(&self, family: ModelFamily) -> PathBuf {
        self.out_dir().join("metrics").join(format!("{}.json", family.name()))
    }

    pub fn roc_path(&self, family: ModelFamily) -> PathBuf {
        self.out_dir().join("metrics").join(format!("{}_roc.json", family.name()))
    }

    pub fn explanation_path(&self, family: ModelFamily) -> PathBuf {
        self.out_dir().join("explanations").join(format!("{}.json", family.name()))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out_dir().join("report")
    }

    pub fn manifest_path(&self, stage: &str, family: Option<ModelFamily>) -> PathBuf {
        let name = match family {
            Some(f) => format!("{stage}-{}.json", f.name()),
            None => format!("{stage}.json"),
        };
        self.out_dir().join("manifests").join(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = PipelineConfig::default();
        let back = PipelineConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        c.validate().unwrap();
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let c = PipelineConfig::from_toml("seed = 7\nmodels = [\"lstm\"]\n[train]\nepochs = 3\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.models, vec![ModelFamily::Lstm]);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.batch_size, 64);
        assert_eq!(c.explain.background_size, 100);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(PipelineConfig::from_toml("sede = 7\n").is_err());
    }

    #[test]
    fn hash_ignores_out_dir_but_not_seed() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.out_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut c = PipelineConfig::default();
        c.data.train_fraction = 1.0;
        assert!(matches!(c.validate(), Err(PipelineError::ConfigInvalid { field, .. }) if field == "data.train_fraction"));
        let mut c = PipelineConfig::default();
        c.train.epochs = 0;
        assert!(matches!(c.validate(), Err(PipelineError::ConfigInvalid { field, .. }) if field == "train.epochs"));
    }

    #[test]
    fn loss_follows_family() {
        let c = PipelineConfig::default();
        assert_eq!(c.train_config(ModelFamily::Cnn).loss, LossKind::SparseCe);
        assert_eq!(c.train_config(ModelFamily::Lstm).loss, LossKind::CategoricalCe);
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let first = DirLock::acquire(dir.path()).unwrap();
        assert!(matches!(DirLock::acquire(dir.path()), Err(PipelineError::Locked(_))));
        drop(first);
        DirLock::acquire(dir.path()).unwrap();
    }
}
