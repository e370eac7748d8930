//! Batch explanation, summary rankings and the explanation bundle.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kernel_shap_all, AttributionVector, BackgroundSet, ExplainError, KernelShapConfig, Model};

pub const EXPLANATION_FORMAT_VERSION: u32 = 1;

/// Explains every row of `instances` for all output classes.
///
/// Returns instance-major, class-minor attribution vectors. Each instance
/// draws coalitions from its own RNG stream keyed by its id, so results do
/// not depend on batch composition or thread scheduling.
pub fn explain_batch(
    model: &dyn Model,
    instances: ArrayView2<'_, f64>,
    ids: &[usize],
    background: &BackgroundSet,
    config: &KernelShapConfig,
) -> Result<Vec<AttributionVector>, ExplainError> {
    if ids.len() != instances.nrows() {
        return Err(ExplainError::ShapeMismatch(format!("{} instances but {} ids", instances.nrows(), ids.len())));
    }
    let per_instance: Vec<Vec<AttributionVector>> = (0..ids.len())
        .into_par_iter()
        .map(|r| kernel_shap_all(model, instances.row(r), background, config, ids[r]))
        .collect::<Result<_, _>>()?;
    Ok(per_instance.into_iter().flatten().collect())
}

/// One (feature value, φ) pair for a beeswarm plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmPoint {
    pub instance_id: usize,
    pub value: Option<f64>,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub rank: usize,
    pub index: usize,
    pub feature: String,
    pub mean_abs_phi: f64,
    pub points: Vec<BeeswarmPoint>,
}

/// Features of one class ranked by mean |φ|, most influential first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSummary {
    pub class_index: usize,
    pub instances: usize,
    pub features: Vec<FeatureImportance>,
}

impl ExplanationSummary {
    pub fn top(&self, k: usize) -> impl Iterator<Item = &FeatureImportance> {
        self.features.iter().take(k)
    }
}

/// Mean |φ| per feature over the attributions for `class`, ranked descending
/// (ties keep feature order). `values` maps instance ids to the feature
/// values shown on the beeswarm axis.
pub fn summarize(
    attributions: &[AttributionVector],
    class: usize,
    feature_names: &[String],
    values: &BTreeMap<usize, Vec<f64>>,
) -> Result<ExplanationSummary, ExplainError> {
    let selected: Vec<&AttributionVector> = attributions.iter().filter(|a| a.class_index == class).collect();
    if selected.is_empty() {
        return Err(ExplainError::EmptyAttributionSet(class));
    }
    let m = selected[0].phi.len();
    if selected.iter().any(|a| a.phi.len() != m) || feature_names.len() != m {
        return Err(ExplainError::ShapeMismatch(format!("{} feature names for {m} attributions", feature_names.len())));
    }
    let n = selected.len() as f64;
    let mut features: Vec<FeatureImportance> = (0..m)
        .map(|j| FeatureImportance {
            rank: 0,
            index: j,
            feature: feature_names[j].clone(),
            mean_abs_phi: selected.iter().map(|a| a.phi[j].abs()).sum::<f64>() / n,
            points: selected
                .iter()
                .map(|a| BeeswarmPoint {
                    instance_id: a.instance_id,
                    value: values.get(&a.instance_id).and_then(|row| row.get(j).copied()),
                    phi: a.phi[j],
                })
                .collect(),
        })
        .collect();
    features.sort_by(|a, b| b.mean_abs_phi.total_cmp(&a.mean_abs_phi).then(a.index.cmp(&b.index)));
    for (rank, f) in features.iter_mut().enumerate() {
        f.rank = rank + 1;
    }
    Ok(ExplanationSummary { class_index: class, instances: selected.len(), features })
}

/// φ₀, φ and f_c(x) for one class of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAttribution {
    pub class_index: usize,
    pub class_name: String,
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceExplanation {
    pub instance_id: usize,
    pub true_label: usize,
    pub predicted_label: usize,
    pub probabilities: Vec<f64>,
    /// Model-input (scaled) feature values.
    pub feature_values: Vec<f64>,
    /// Original record tokens, when available.
    #[serde(default)]
    pub raw_values: Vec<String>,
    pub classes: Vec<ClassAttribution>,
}

/// Everything the analyst views need about one explanation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationBundle {
    pub format_version: u32,
    pub model: String,
    pub config_hash: String,
    pub seed: u64,
    pub background_size: usize,
    pub n_coalitions: usize,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub instances: Vec<InstanceExplanation>,
    pub summaries: Vec<ExplanationSummary>,
}

impl ExplanationBundle {
    pub fn instance(&self, id: usize) -> Option<&InstanceExplanation> {
        self.instances.iter().find(|i| i.instance_id == id)
    }

    /// Attribution vectors in instance-major, class-minor order.
    pub fn attributions(&self) -> Vec<AttributionVector> {
        self.instances
            .iter()
            .flat_map(|inst| {
                inst.classes.iter().map(move |c| AttributionVector {
                    class_index: c.class_index,
                    base_value: c.base_value,
                    phi: c.phi.clone(),
                    instance_id: inst.instance_id,
                    prediction: c.prediction,
                    singular: false,
                })
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_vec_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, json)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attr(id: usize, class: usize, phi: Vec<f64>) -> AttributionVector {
        AttributionVector { class_index: class, base_value: 0.0, phi, instance_id: id, prediction: 0.0, singular: false }
    }

    fn names(m: usize) -> Vec<String> {
        (0..m).map(|j| format!("f{j}")).collect()
    }

    #[test]
    fn single_attribution_ranking_sorts_magnitudes() {
        let s = summarize(&[attr(0, 1, vec![0.1, -0.5, 0.3])], 1, &names(3), &BTreeMap::new()).unwrap();
        let order: Vec<usize> = s.features.iter().map(|f| f.index).collect();
        assert_eq!(order, vec![1, 2, 0]);
        assert_eq!(s.features[0].rank, 1);
        assert_eq!(s.features[0].mean_abs_phi, 0.5);
    }

    #[test]
    fn opposite_signs_average_magnitudes() {
        let a = [attr(0, 0, vec![0.4, 0.0]), attr(1, 0, vec![-0.2, 0.0]), attr(2, 3, vec![9.0, 9.0])];
        let values = BTreeMap::from([(0, vec![1.0, 2.0]), (1, vec![3.0, 4.0])]);
        let s = summarize(&a, 0, &names(2), &values).unwrap();
        assert!((s.features[0].mean_abs_phi - 0.3).abs() < 1e-15);
        assert_eq!(s.instances, 2);
        assert_eq!(s.features[0].points[1], BeeswarmPoint { instance_id: 1, value: Some(3.0), phi: -0.2 });
    }

    #[test]
    fn empty_class_is_an_error() {
        assert!(matches!(
            summarize(&[attr(0, 0, vec![1.0])], 2, &names(1), &BTreeMap::new()),
            Err(ExplainError::EmptyAttributionSet(2))
        ));
    }
}
