//! Model-agnostic Shapley attributions.
//!
//! A coalition `z` keeps the explained instance's values on its features and
//! replaces the others with each background row in turn; the coalition's
//! value is the mean model output over the background. Kernel regression over
//! sampled coalitions estimates the Shapley values, and an exhaustive
//! enumeration serves as the reference for small feature counts.

mod bundle;
mod exact;
mod kernel;

pub use bundle::{
    explain_batch, summarize, BeeswarmPoint, ClassAttribution, ExplanationBundle, ExplanationSummary, FeatureImportance,
    InstanceExplanation, EXPLANATION_FORMAT_VERSION,
};
pub use exact::{exact_shap_bruteforce, exact_shap_all, MAX_EXACT_FEATURES};
pub use kernel::{kernel_shap, kernel_shap_all, plan_coalitions, shapley_kernel_weight, Coalition, KernelShapConfig};

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::Classifier;

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("coalition size {size} of {features} features has no kernel weight")]
    DegenerateCoalition { size: usize, features: usize },
    #[error("model evaluation failed: {0}")]
    ModelEvaluationFailure(String),
    #[error("{requested} coalitions requested; at least {required} needed")]
    InsufficientCoalitions { requested: usize, required: usize },
    #[error("{0} features is too many for exhaustive enumeration")]
    TooManyFeatures(usize),
    #[error("weighted least-squares system is singular even with ridge")]
    SingularSystem,
    #[error("no attributions for class {0}")]
    EmptyAttributionSet(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("background set is empty")]
    EmptyBackground,
}

/// A vector-valued model over flat feature rows, safe to call concurrently.
pub trait Model: Sync {
    fn num_outputs(&self) -> usize;
    /// Maps an R×M matrix of rows to R×outputs.
    fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>, ExplainError>;
}

impl Model for Classifier {
    fn num_outputs(&self) -> usize {
        self.spec.output_classes
    }

    fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>, ExplainError> {
        self.predict_proba(rows).map_err(|e| ExplainError::ModelEvaluationFailure(e.to_string()))
    }
}

/// Adapts a per-row closure into a [`Model`].
pub struct FnModel<F> {
    outputs: usize,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(ArrayView1<'_, f64>) -> Vec<f64> + Sync,
{
    pub fn new(outputs: usize, f: F) -> Self {
        Self { outputs, f }
    }
}

impl<F> Model for FnModel<F>
where
    F: Fn(ArrayView1<'_, f64>) -> Vec<f64> + Sync,
{
    fn num_outputs(&self) -> usize {
        self.outputs
    }

    fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>, ExplainError> {
        let mut out = Array2::zeros((rows.nrows(), self.outputs));
        for (mut dst, row) in out.rows_mut().into_iter().zip(rows.rows()) {
            let values = (self.f)(row);
            if values.len() != self.outputs {
                return Err(ExplainError::ModelEvaluationFailure(format!(
                    "model returned {} outputs, expected {}",
                    values.len(),
                    self.outputs
                )));
            }
            dst.assign(&ArrayView1::from(&values));
        }
        Ok(out)
    }
}

/// Reference rows that stand in for "absent" features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSet {
    pub rows: Array2<f64>,
    pub seed: u64,
}

impl BackgroundSet {
    pub fn new(rows: Array2<f64>, seed: u64) -> Result<Self, ExplainError> {
        if rows.nrows() == 0 {
            return Err(ExplainError::EmptyBackground);
        }
        Ok(Self { rows, seed })
    }

    /// First `size` rows of a seeded shuffle of `train`.
    pub fn sample(train: ArrayView2<'_, f64>, size: usize, seed: u64) -> Result<Self, ExplainError> {
        let mut order: Vec<usize> = (0..train.nrows()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        order.truncate(size);
        Self::new(train.select(Axis(0), &order), seed)
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn num_features(&self) -> usize {
        self.rows.ncols()
    }
}

/// Attributions for one instance and one output class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub class_index: usize,
    /// Mean model output over the background (φ₀).
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub instance_id: usize,
    /// Model output f_c(x).
    pub prediction: f64,
    /// True when the regression needed the ridge fallback.
    #[serde(default)]
    pub singular: bool,
}

impl AttributionVector {
    /// |φ₀ + Σφᵢ − f(x)|.
    pub fn local_accuracy_gap(&self) -> f64 {
        (self.base_value + self.phi.iter().sum::<f64>() - self.prediction).abs()
    }
}

/// Rows per model call when evaluating coalitions.
const EVAL_ROWS: usize = 4096;

/// Mean model output over the background for each coalition mask.
///
/// Bit `j` of a mask refers to feature `features[j]`; set bits take the
/// instance's value, clear bits the background row's. A mask bit is
/// irrelevant for a background row that already agrees with the instance on
/// that feature, so each distinct substituted row is evaluated only once.
pub(crate) fn coalition_values(
    model: &dyn Model,
    x: ArrayView1<'_, f64>,
    background: &BackgroundSet,
    features: &[usize],
    masks: &[u64],
) -> Result<Array2<f64>, ExplainError> {
    let b = background.len();
    let outputs = model.num_outputs();
    let differs: Vec<u64> = background
        .rows
        .rows()
        .into_iter()
        .map(|row| features.iter().enumerate().filter(|&(_, &f)| row[f] != x[f]).fold(0u64, |acc, (j, _)| acc | 1 << j))
        .collect();

    // (background row, effective mask) for every distinct substituted row.
    let mut unique: Vec<(usize, u64)> = Vec::new();
    let mut seen: Vec<HashMap<u64, usize>> = vec![HashMap::new(); b];
    let mut slot = vec![0usize; masks.len() * b];
    for (k, &mask) in masks.iter().enumerate() {
        for r in 0..b {
            let key = mask & differs[r];
            slot[k * b + r] = *seen[r].entry(key).or_insert_with(|| {
                unique.push((r, key));
                unique.len() - 1
            });
        }
    }

    let mut preds = Array2::<f64>::zeros((unique.len(), outputs));
    for (chunk_idx, chunk) in unique.chunks(EVAL_ROWS).enumerate() {
        let mut rows = Array2::<f64>::zeros((chunk.len(), background.num_features()));
        for (mut dst, &(r, key)) in rows.rows_mut().into_iter().zip(chunk) {
            dst.assign(&background.rows.row(r));
            for (j, &f) in features.iter().enumerate() {
                if key >> j & 1 == 1 {
                    dst[f] = x[f];
                }
            }
        }
        let out = model.predict(rows.view())?;
        if out.dim() != (chunk.len(), outputs) {
            return Err(ExplainError::ModelEvaluationFailure(format!("model returned shape {:?}", out.dim())));
        }
        preds.slice_mut(ndarray::s![chunk_idx * EVAL_ROWS..chunk_idx * EVAL_ROWS + chunk.len(), ..]).assign(&out);
    }

    let mut values = Array2::<f64>::zeros((masks.len(), outputs));
    for (k, mut v) in values.rows_mut().into_iter().enumerate() {
        for r in 0..b {
            v += &preds.row(slot[k * b + r]);
        }
        v /= b as f64;
    }
    Ok(values)
}

/// Model output for class `c` with features in `z` taken from `x` and the
/// rest from each background row, averaged over the background.
pub fn masked_prediction(
    model: &dyn Model,
    x: ArrayView1<'_, f64>,
    z: &[bool],
    background: &BackgroundSet,
    class: usize,
) -> Result<f64, ExplainError> {
    let m = x.len();
    if z.len() != m || background.num_features() != m {
        return Err(ExplainError::ShapeMismatch(format!(
            "instance has {m} features, mask {}, background {}",
            z.len(),
            background.num_features()
        )));
    }
    if class >= model.num_outputs() {
        return Err(ExplainError::ShapeMismatch(format!("class {class} outside model outputs")));
    }
    let mut rows = background.rows.clone();
    for (j, &keep) in z.iter().enumerate() {
        if keep {
            rows.column_mut(j).fill(x[j]);
        }
    }
    let preds = model.predict(rows.view())?;
    Ok(preds.column(class).mean().expect("non-empty background"))
}

pub(crate) fn check_inputs(model: &dyn Model, x: ArrayView1<'_, f64>, background: &BackgroundSet) -> Result<(), ExplainError> {
    if background.is_empty() {
        return Err(ExplainError::EmptyBackground);
    }
    if background.num_features() != x.len() {
        return Err(ExplainError::ShapeMismatch(format!(
            "instance has {} features, background {}",
            x.len(),
            background.num_features()
        )));
    }
    if model.num_outputs() == 0 {
        return Err(ExplainError::ShapeMismatch("model has no outputs".into()));
    }
    Ok(())
}
