//! NSL-KDD ingestion: parsing, 5-class label mapping, label encoding,
//! min-max scaling, train/test splitting and per-family reshaping.

mod encode;
mod schema;
mod split;
pub mod synthetic;

pub use encode::{apply_encoding, apply_minmax, fit_encoders, fit_minmax, inverse_minmax, EncoderParams, ScalerParams};
pub use schema::{feature_names, map_attack_label, AttackClass, FeatureDef, FeatureKind, FeatureSchema, NUM_FEATURES, NUM_FIELDS};
pub use split::{split, split_indices, SplitSpec};

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line_no}: expected {NUM_FIELDS} fields, found {found}")]
    FieldCountMismatch { line_no: usize, found: usize },
    #[error("line {0}: difficulty column is not an integer")]
    NonNumericDifficulty(usize),
    #[error("line {line_no}: empty attack label")]
    EmptyLabel { line_no: usize },
    #[error("unknown attack label `{0}`")]
    UnknownAttackLabel(String),
    #[error("cannot fit encoders on an empty training set")]
    EmptyTrainingSet,
    #[error("feature `{feature}` has unseen category `{value}`")]
    UnseenCategory { feature: String, value: String },
    #[error("line {line_no}: feature `{feature}` is not numeric")]
    NonNumericToken { feature: String, line_no: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("expected {NUM_FEATURES} feature columns, found {0}")]
    WrongFeatureCount(usize),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One parsed line of an NSL-KDD file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub line_no: usize,
    pub feature_values: Vec<String>,
    pub attack_label: String,
    pub difficulty: i64,
}

impl RawRecord {
    pub fn value(&self, schema: &FeatureSchema, name: &str) -> Option<&str> {
        schema.index_of(name).map(|i| self.feature_values[i].as_str())
    }

    /// Renders the record back into its 43-field line form.
    pub fn to_line(&self) -> String {
        let mut line = self.feature_values.join(",");
        line.push(',');
        line.push_str(&self.attack_label);
        line.push(',');
        line.push_str(&self.difficulty.to_string());
        line
    }
}

/// Parses comma-separated NSL-KDD text (no header, 43 fields per line).
pub fn parse_nslkdd(stream: &[u8]) -> Result<Vec<RawRecord>, DataError> {
    parse_reader(stream)
}

pub fn parse_reader<R: BufRead>(reader: R) -> Result<Vec<RawRecord>, DataError> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != NUM_FIELDS {
            return Err(DataError::FieldCountMismatch { line_no, found: fields.len() });
        }
        let attack_label = fields[NUM_FEATURES].to_string();
        if attack_label.is_empty() {
            return Err(DataError::EmptyLabel { line_no });
        }
        let difficulty = fields[NUM_FEATURES + 1]
            .parse::<i64>()
            .map_err(|_| DataError::NonNumericDifficulty(line_no))?;
        records.push(RawRecord {
            line_no,
            feature_values: fields[..NUM_FEATURES].iter().map(|s| s.to_string()).collect(),
            attack_label,
            difficulty,
        });
    }
    Ok(records)
}

pub fn read_nslkdd(path: &Path) -> Result<Vec<RawRecord>, DataError> {
    let file = std::fs::File::open(path)?;
    parse_reader(std::io::BufReader::new(file))
}

/// Maps every record's attack label to its class code.
pub fn encode_labels(records: &[RawRecord]) -> Result<Vec<usize>, DataError> {
    records.iter().map(|r| map_attack_label(&r.attack_label).map(AttackClass::code)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Test,
}

/// Scaled feature matrix with integer class labels and the parameters that produced it.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    pub matrix: Array2<f64>,
    pub labels: Vec<usize>,
    pub encoder: EncoderParams,
    pub scaler: ScalerParams,
    pub provenance: Partition,
}

impl EncodedDataset {
    /// Encodes, scales and labels `records` with already-fitted parameters.
    pub fn from_records(
        records: &[RawRecord],
        schema: &FeatureSchema,
        encoder: &EncoderParams,
        scaler: &ScalerParams,
        provenance: Partition,
    ) -> Result<Self, DataError> {
        let raw = apply_encoding(records, schema, encoder)?;
        let matrix = apply_minmax(&raw, scaler)?;
        let labels = encode_labels(records)?;
        Ok(Self { matrix, labels, encoder: encoder.clone(), scaler: scaler.clone(), provenance })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_distribution(&self) -> ClassDistribution {
        class_distribution(&self.labels)
    }
}

/// Per-class sample counts indexed by class code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassDistribution(pub [usize; AttackClass::COUNT]);

impl ClassDistribution {
    pub fn get(&self, class: AttackClass) -> usize {
        self.0[class.code()]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl Serialize for ClassDistribution {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<&str, usize> = AttackClass::ALL.iter().map(|c| (c.name(), self.get(*c))).collect();
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ClassDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, usize>::deserialize(deserializer)?;
        let mut counts = [0usize; AttackClass::COUNT];
        for class in AttackClass::ALL {
            counts[class.code()] = *map
                .get(class.name())
                .ok_or_else(|| serde::de::Error::custom(format!("missing class {}", class.name())))?;
        }
        Ok(Self(counts))
    }
}

/// Counts labels per class; codes outside 0..5 are ignored.
pub fn class_distribution(labels: &[usize]) -> ClassDistribution {
    let mut counts = [0usize; AttackClass::COUNT];
    for &l in labels {
        if let Some(c) = counts.get_mut(l) {
            *c += 1;
        }
    }
    ClassDistribution(counts)
}

/// Tensor layout expected by each model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// (samples, 41, 1): features as a length-41 single-channel sequence.
    Cnn,
    /// (samples, 1, 41): one time step carrying 41 features.
    Lstm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapedInput {
    pub layout: Layout,
    pub values: Array3<f64>,
}

/// Reshapes an N×41 matrix for a model family without reordering values.
pub fn reshape(matrix: &Array2<f64>, layout: Layout) -> Result<ShapedInput, DataError> {
    let (n, m) = matrix.dim();
    if m != NUM_FEATURES {
        return Err(DataError::WrongFeatureCount(m));
    }
    let flat: Vec<f64> = matrix.iter().copied().collect();
    let shape = match layout {
        Layout::Cnn => (n, m, 1),
        Layout::Lstm => (n, 1, m),
    };
    let values = Array3::from_shape_vec(shape, flat).expect("element count preserved");
    Ok(ShapedInput { layout, values })
}
