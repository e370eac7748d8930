//! On-disk model bundle: `model.json` (format version, spec, provenance),
//! `weights.bin` (little-endian f64 tensors in [`Params::tensors`] order),
//! `train_config.json` and `history.csv`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::Params;
use super::train::{EpochStats, TrainConfig, TrainHistory};
use super::{ModelSpec, NnError};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const WEIGHTS_MAGIC: &[u8; 8] = b"NIDSXW01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub init_seed: u64,
    pub config_hash: String,
    pub parameter_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub header: ModelHeader,
    pub params: Params,
    pub config: TrainConfig,
    pub history: TrainHistory,
}

impl ModelBundle {
    pub fn new(spec: ModelSpec, params: Params, config: TrainConfig, history: TrainHistory, config_hash: String) -> Self {
        let header = ModelHeader {
            format_version: MODEL_FORMAT_VERSION,
            parameter_count: params.num_values(),
            init_seed: params.seed,
            spec,
            config_hash,
        };
        Self { header, params, config, history }
    }

    pub fn save(&self, dir: &Path) -> Result<(), NnError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("model.json"), serde_json::to_vec_pretty(&self.header)?)?;
        fs::write(dir.join("weights.bin"), encode_weights(&self.params))?;
        fs::write(dir.join("train_config.json"), serde_json::to_vec_pretty(&self.config)?)?;
        fs::write(dir.join("history.csv"), self.history.to_csv())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, NnError> {
        let header: ModelHeader = serde_json::from_slice(&fs::read(dir.join("model.json"))?)?;
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(NnError::Format(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                header.format_version
            )));
        }
        let mut params = Params::init(&header.spec, header.init_seed)?;
        decode_weights(&fs::read(dir.join("weights.bin"))?, &mut params)?;
        let config: TrainConfig = serde_json::from_slice(&fs::read(dir.join("train_config.json"))?)?;
        let history = read_history(&fs::read(dir.join("history.csv"))?)?;
        Ok(Self { header, params, config, history })
    }
}

pub fn encode_weights(params: &Params) -> Vec<u8> {
    let count = params.num_values();
    let mut out = Vec::with_capacity(16 + count * 8);
    out.extend_from_slice(WEIGHTS_MAGIC);
    out.extend_from_slice(&(count as u64).to_le_bytes());
    for t in params.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_weights(bytes: &[u8], params: &mut Params) -> Result<(), NnError> {
    if bytes.len() < 16 || &bytes[..8] != WEIGHTS_MAGIC {
        return Err(NnError::Format("weights.bin: bad magic".into()));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    if count != params.num_values() || bytes.len() != 16 + count * 8 {
        return Err(NnError::Format(format!(
            "weights.bin holds {count} values, model needs {}",
            params.num_values()
        )));
    }
    let mut chunks = bytes[16..].chunks_exact(8);
    for t in params.tensors_mut() {
        for v in t.iter_mut() {
            *v = f64::from_le_bytes(chunks.next().expect("length checked").try_into().expect("8 bytes"));
        }
    }
    Ok(())
}

fn read_history(bytes: &[u8]) -> Result<TrainHistory, NnError> {
    let mut reader = csv::Reader::from_reader(bytes);
    let mut history = TrainHistory::default();
    for row in reader.deserialize::<EpochStats>() {
        let row = row.map_err(|e| NnError::Format(format!("history.csv: {e}")))?;
        history.wall_seconds += row.seconds;
        history.epochs.push(row);
    }
    Ok(history)
}
