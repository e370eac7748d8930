use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{DataError, FeatureKind, FeatureSchema, RawRecord, NUM_FEATURES};

/// Category vocabularies per categorical feature; a category's code is its
/// index in the lexicographically sorted list.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EncoderParams {
    pub categories: BTreeMap<String, Vec<String>>,
}

impl EncoderParams {
    pub fn code(&self, feature: &str, value: &str) -> Option<usize> {
        self.categories.get(feature)?.binary_search_by(|c| c.as_str().cmp(value)).ok()
    }

    pub fn category(&self, feature: &str, code: usize) -> Option<&str> {
        self.categories.get(feature)?.get(code).map(String::as_str)
    }
}

pub fn fit_encoders(train: &[RawRecord], schema: &FeatureSchema) -> Result<EncoderParams, DataError> {
    if train.is_empty() {
        return Err(DataError::EmptyTrainingSet);
    }
    let mut categories = BTreeMap::new();
    for idx in schema.categorical_indices() {
        let distinct: BTreeSet<&str> = train.iter().map(|r| r.feature_values[idx].as_str()).collect();
        categories.insert(
            schema.features[idx].name.clone(),
            distinct.into_iter().map(str::to_string).collect(),
        );
    }
    Ok(EncoderParams { categories })
}

/// Replaces categorical tokens by their codes and parses numeric tokens.
pub fn apply_encoding(
    records: &[RawRecord],
    schema: &FeatureSchema,
    encoder: &EncoderParams,
) -> Result<Array2<f64>, DataError> {
    let mut out = Array2::<f64>::zeros((records.len(), NUM_FEATURES));
    for (row, record) in out.outer_iter_mut().zip(records) {
        if record.feature_values.len() != NUM_FEATURES {
            return Err(DataError::FieldCountMismatch {
                line_no: record.line_no,
                found: record.feature_values.len() + 2,
            });
        }
        for ((cell, token), def) in row.into_iter().zip(&record.feature_values).zip(&schema.features) {
            *cell = match def.kind {
                FeatureKind::Categorical => encoder.code(&def.name, token).ok_or_else(|| {
                    DataError::UnseenCategory { feature: def.name.clone(), value: token.clone() }
                })? as f64,
                FeatureKind::Numeric => token
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| DataError::NonNumericToken {
                        feature: def.name.clone(),
                        line_no: record.line_no,
                    })?,
            };
        }
    }
    Ok(out)
}

/// Column-wise min and max of the training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_minmax(train: &Array2<f64>) -> Result<ScalerParams, DataError> {
    if train.nrows() == 0 {
        return Err(DataError::EmptyTrainingSet);
    }
    let min = train
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();
    let max = train
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ok(ScalerParams { min, max })
}

/// x' = (x - min) / (max - min), clamped to [0, 1]; constant columns map to 0.
pub fn apply_minmax(matrix: &Array2<f64>, params: &ScalerParams) -> Result<Array2<f64>, DataError> {
    check_width(matrix, params)?;
    let mut out = matrix.clone();
    for (mut col, (&lo, &hi)) in out.axis_iter_mut(Axis(1)).zip(params.min.iter().zip(&params.max)) {
        let range = hi - lo;
        col.mapv_inplace(|x| if range > 0.0 { ((x - lo) / range).clamp(0.0, 1.0) } else { 0.0 });
    }
    Ok(out)
}

pub fn inverse_minmax(matrix: &Array2<f64>, params: &ScalerParams) -> Result<Array2<f64>, DataError> {
    check_width(matrix, params)?;
    let mut out = matrix.clone();
    for (mut col, (&lo, &hi)) in out.axis_iter_mut(Axis(1)).zip(params.min.iter().zip(&params.max)) {
        col.mapv_inplace(|x| lo + x * (hi - lo));
    }
    Ok(out)
}

fn check_width(matrix: &Array2<f64>, params: &ScalerParams) -> Result<(), DataError> {
    if matrix.ncols() != params.min.len() || params.min.len() != params.max.len() {
        return Err(DataError::ShapeMismatch(format!(
            "matrix has {} columns, scaler fitted on {}",
            matrix.ncols(),
            params.min.len()
        )));
    }
    Ok(())
}
