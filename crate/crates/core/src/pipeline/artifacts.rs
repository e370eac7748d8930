//! Artifact formats: binary partitions, dataset/metrics JSON and run manifests.

use std::path::Path;

use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::data::{ClassDistribution, EncoderParams, ScalerParams};
use crate::metrics::EvaluationReport;

const PARTITION_MAGIC: &[u8; 8] = b"NIDSXD01";

/// A scaled feature matrix with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub matrix: Array2<f64>,
    pub labels: Vec<usize>,
}

/// Layout: magic, rows (u64 LE), cols (u64 LE), rows·cols f64 LE values in
/// row-major order, then one byte per label.
pub fn write_partition(path: &Path, part: &Partition) -> Result<(), PipelineError> {
    let (rows, cols) = part.matrix.dim();
    let mut bytes = Vec::with_capacity(24 + rows * cols * 8 + rows);
    bytes.extend_from_slice(PARTITION_MAGIC);
    bytes.extend_from_slice(&(rows as u64).to_le_bytes());
    bytes.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in part.matrix.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend(part.labels.iter().map(|&l| l as u8));
    std::fs::write(path, bytes).map_err(PipelineError::io(path))
}

pub fn read_partition(path: &Path) -> Result<Partition, PipelineError> {
    let bytes = std::fs::read(path).map_err(PipelineError::io(path))?;
    let corrupt = |reason: &str| PipelineError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, reason.to_string()),
    };
    if bytes.len() < 24 || &bytes[..8] != PARTITION_MAGIC {
        return Err(corrupt("not a partition file"));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes")) as usize;
    let (rows, cols) = (word(8), word(16));
    let body = rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).ok_or_else(|| corrupt("size overflow"))?;
    if bytes.len() != 24 + body + rows {
        return Err(corrupt("truncated partition file"));
    }
    let values: Vec<f64> = bytes[24..24 + body]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let labels = bytes[24 + body..].iter().map(|&b| b as usize).collect();
    let matrix = Array2::from_shape_vec((rows, cols), values).expect("length checked");
    Ok(Partition { matrix, labels })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(PipelineError::io(parent))?;
    }
    let mut json = serde_json::to_vec_pretty(value).map_err(PipelineError::json(path))?;
    json.push(b'\n');
    std::fs::write(path, json).map_err(PipelineError::io(path))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let bytes = std::fs::read(path).map_err(PipelineError::io(path))?;
    serde_json::from_slice(&bytes).map_err(PipelineError::json(path))
}

/// Description of the prepared data: provenance, sizes, class counts and the
/// fitted preprocessing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub config_hash: String,
    pub seed: u64,
    pub source_path: String,
    pub source_sha256: String,
    pub source_records: usize,
    pub records: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub distribution: ClassDistribution,
    pub train_distribution: ClassDistribution,
    pub test_distribution: ClassDistribution,
    pub encoder: EncoderParams,
    pub scaler: ScalerParams,
}

/// Test-set evaluation of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsArtifact {
    pub config_hash: String,
    pub seed: u64,
    pub model: String,
    pub accuracy: f64,
    pub report: EvaluationReport,
}

/// Record of one command execution. The only artifact carrying wall-clock times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub stage: String,
    pub model: Option<String>,
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub duration_seconds: f64,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
}
