//! Read-only pipeline artifacts loaded once at startup.

use std::collections::BTreeMap;
use std::path::Path;

use nidsx_core::explain::{ExplanationBundle, ExplanationSummary, InstanceExplanation};
use nidsx_core::nn::ModelFamily;
use nidsx_core::pipeline::MetricsArtifact;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// A case shown to participants: one explained test row under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub narrative: String,
    pub instance_id: usize,
    pub model: String,
}

/// Body of `GET /api/explanations/{instance}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancePayload {
    pub model: String,
    pub config_hash: String,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub instance: InstanceExplanation,
}

/// Body of `GET /api/explanations`: what is explained plus the global rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationIndex {
    pub model: String,
    pub config_hash: String,
    pub background_size: usize,
    pub n_coalitions: usize,
    pub instance_ids: Vec<usize>,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub summaries: Vec<ExplanationSummary>,
}

#[derive(Debug, Clone)]
pub struct Artifacts {
    pub config_hash: String,
    /// Model name → bundle.
    pub bundles: BTreeMap<String, ExplanationBundle>,
    pub metrics: Vec<MetricsArtifact>,
    pub scenarios: Vec<Scenario>,
}

const SCENARIOS_PER_MODEL: usize = 3;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ServiceError> {
    let bytes = std::fs::read(path).map_err(|e| ServiceError::Artifacts(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| ServiceError::Artifacts(format!("{}: {e}", path.display())))
}

impl Artifacts {
    /// Loads every explanation bundle and metrics file under `dir`. Returns
    /// `None` when no explanation bundle exists yet.
    pub fn load(dir: &Path) -> Result<Option<Self>, ServiceError> {
        let mut bundles = BTreeMap::new();
        let mut metrics = Vec::new();
        for family in [ModelFamily::Cnn, ModelFamily::Lstm] {
            let path = dir.join("explanations").join(format!("{}.json", family.name()));
            if path.exists() {
                bundles.insert(family.name().to_string(), read_json::<ExplanationBundle>(&path)?);
            }
            let path = dir.join("metrics").join(format!("{}.json", family.name()));
            if path.exists() {
                metrics.push(read_json::<MetricsArtifact>(&path)?);
            }
        }
        let Some(first) = bundles.values().next() else {
            return Ok(None);
        };
        let config_hash = first.config_hash.clone();
        let hashes = bundles.values().map(|b| &b.config_hash).chain(metrics.iter().map(|m| &m.config_hash));
        if let Some(other) = hashes.into_iter().find(|h| **h != config_hash) {
            return Err(ServiceError::Artifacts(format!("mixed config hashes {config_hash} and {other} under {}", dir.display())));
        }
        let scenario_path = dir.join("scenarios.json");
        let scenarios =
            if scenario_path.exists() { read_json(&scenario_path)? } else { default_scenarios(&bundles) };
        let artifacts = Self { config_hash, bundles, metrics, scenarios };
        artifacts.check_scenarios()?;
        Ok(Some(artifacts))
    }

    fn check_scenarios(&self) -> Result<(), ServiceError> {
        for s in &self.scenarios {
            let found = self.bundles.get(&s.model).and_then(|b| b.instance(s.instance_id));
            if found.is_none() {
                return Err(ServiceError::Artifacts(format!(
                    "scenario {} references instance {} of model {}, which is not explained",
                    s.id, s.instance_id, s.model
                )));
            }
        }
        Ok(())
    }

    /// The named bundle, or the first one when `model` is `None`.
    pub fn bundle(&self, model: Option<&str>) -> Result<&ExplanationBundle, ServiceError> {
        match model {
            Some(m) => self.bundles.get(m).ok_or_else(|| ServiceError::NotFound(format!("model {m} has no explanations"))),
            None => Ok(self.bundles.values().next().expect("load guarantees one bundle")),
        }
    }

    pub fn instance(&self, model: Option<&str>, id: usize) -> Result<InstancePayload, ServiceError> {
        let bundle = self.bundle(model)?;
        let instance = bundle.instance(id).ok_or_else(|| ServiceError::NotFound(format!("instance {id}")))?;
        Ok(InstancePayload {
            model: bundle.model.clone(),
            config_hash: bundle.config_hash.clone(),
            feature_names: bundle.feature_names.clone(),
            class_names: bundle.class_names.clone(),
            instance: instance.clone(),
        })
    }

    pub fn index(&self, model: Option<&str>) -> Result<ExplanationIndex, ServiceError> {
        let b = self.bundle(model)?;
        Ok(ExplanationIndex {
            model: b.model.clone(),
            config_hash: b.config_hash.clone(),
            background_size: b.background_size,
            n_coalitions: b.n_coalitions,
            instance_ids: b.instances.iter().map(|i| i.instance_id).collect(),
            feature_names: b.feature_names.clone(),
            class_names: b.class_names.clone(),
            summaries: b.summaries.clone(),
        })
    }
}

/// A few cases per model, preferring instances with distinct predicted classes.
fn default_scenarios(bundles: &BTreeMap<String, ExplanationBundle>) -> Vec<Scenario> {
    let mut out = Vec::new();
    for (model, bundle) in bundles {
        let mut seen = Vec::new();
        let mut picked: Vec<&InstanceExplanation> = Vec::new();
        for inst in &bundle.instances {
            if !seen.contains(&inst.predicted_label) {
                seen.push(inst.predicted_label);
                picked.push(inst);
            }
        }
        for inst in &bundle.instances {
            if picked.len() >= SCENARIOS_PER_MODEL {
                break;
            }
            if !picked.iter().any(|p| p.instance_id == inst.instance_id) {
                picked.push(inst);
            }
        }
        picked.truncate(SCENARIOS_PER_MODEL);
        for inst in picked {
            let class = bundle.class_names.get(inst.predicted_label).map(String::as_str).unwrap_or("unknown");
            let confidence = inst.probabilities.get(inst.predicted_label).copied().unwrap_or(0.0);
            out.push(Scenario {
                id: format!("{model}-{}", inst.instance_id),
                narrative: format!(
                    "During a routine shift the {} detector flags connection record #{} as {class} with {:.0}% confidence. \
                     Review the connection details and the explanation of which features drove the decision, then judge \
                     whether you would act on this alert.",
                    model.to_uppercase(),
                    inst.instance_id,
                    confidence * 100.0
                ),
                instance_id: inst.instance_id,
                model: model.clone(),
            });
        }
    }
    out
}
