use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::artifacts::{read_json, write_json};
use super::{
    read_partition, unix_now, write_partition, DatasetManifest, DirLock, MetricsArtifact, Partition, Pipeline, PipelineError,
    RunManifest,
};
use crate::data::{
    apply_encoding, class_distribution, feature_names, fit_encoders, fit_minmax, parse_nslkdd, split_indices, AttackClass,
    EncodedDataset, FeatureSchema, Partition as Provenance, RawRecord, SplitSpec,
};
use crate::explain::{
    explain_batch, summarize, BackgroundSet, ClassAttribution, ExplanationBundle, InstanceExplanation, KernelShapConfig,
    EXPLANATION_FORMAT_VERSION,
};
use crate::metrics::{evaluate, EvaluationReport, RocCurve};
use crate::nn::{predict_class, train, Classifier, ModelBundle, ModelFamily, ModelSpec};

/// Manifest plus a short human-readable summary of what a stage did.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub manifest: RunManifest,
    pub summary: String,
}

/// Top-ranked features of one class in one explanation bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRanking {
    pub class: String,
    pub features: Vec<(String, f64)>,
}

/// Everything `report` aggregates, all from artifacts of one config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedReport {
    pub config_hash: String,
    pub seed: u64,
    pub models: Vec<MetricsArtifact>,
    /// Model name → per-class top-10 mean-|φ| ranking, for explained models.
    pub rankings: BTreeMap<String, Vec<ClassRanking>>,
}

const RANKING_DEPTH: usize = 10;

fn class_names() -> Vec<String> {
    AttackClass::ALL.iter().map(|c| c.name().to_string()).collect()
}

fn require(stage: &str, path: PathBuf) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::MissingArtifact { stage: stage.into(), path })
    }
}

impl Pipeline {
    fn check_hash(&self, path: &Path, found: &str) -> Result<(), PipelineError> {
        if found != self.config_hash {
            return Err(PipelineError::HashMismatch {
                path: path.to_path_buf(),
                expected: self.config_hash.clone(),
                found: found.to_string(),
            });
        }
        Ok(())
    }

    fn finish(
        &self,
        stage: &str,
        family: Option<ModelFamily>,
        started_unix: f64,
        clock: Instant,
        artifacts: &[PathBuf],
        summary: String,
    ) -> Result<StageOutcome, PipelineError> {
        let rel = |p: &PathBuf| p.strip_prefix(self.out_dir()).unwrap_or(p).to_string_lossy().replace('\\', "/");
        let manifest = RunManifest {
            stage: stage.to_string(),
            model: family.map(|f| f.name().to_string()),
            config_hash: self.config_hash.clone(),
            seed: self.config.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix,
            finished_unix: unix_now(),
            duration_seconds: clock.elapsed().as_secs_f64(),
            artifacts: artifacts.iter().map(rel).collect(),
        };
        write_json(&self.manifest_path(stage, family), &manifest)?;
        Ok(StageOutcome { manifest, summary })
    }

    fn dataset_manifest(&self, stage: &str) -> Result<DatasetManifest, PipelineError> {
        let path = require(stage, self.data_dir().join("dataset.json"))?;
        let manifest: DatasetManifest = read_json(&path)?;
        self.check_hash(&path, &manifest.config_hash)?;
        Ok(manifest)
    }

    fn partition(&self, stage: &str, name: &str) -> Result<Partition, PipelineError> {
        read_partition(&require(stage, self.data_dir().join(format!("{name}.bin")))?)
    }

    fn classifier(&self, stage: &str, family: ModelFamily) -> Result<Classifier, PipelineError> {
        let dir = self.model_dir(family);
        require(stage, dir.join("model.json"))?;
        let bundle = ModelBundle::load(&dir)?;
        self.check_hash(&dir.join("model.json"), &bundle.header.config_hash)?;
        Ok(Classifier { spec: bundle.header.spec, params: bundle.params })
    }

    /// Parses, label-maps, encodes, splits and scales the configured file.
    pub fn prepare_data(&self) -> Result<StageOutcome, PipelineError> {
        let _lock = DirLock::acquire(self.out_dir())?;
        let (started, clock) = (unix_now(), Instant::now());
        let cfg = &self.config;
        let source = &cfg.data.train_path;
        if !source.is_file() {
            return Err(PipelineError::ConfigInvalid {
                field: "data.train_path".into(),
                reason: format!("{} does not exist", source.display()),
            });
        }
        let bytes = std::fs::read(source).map_err(PipelineError::io(source))?;
        let source_sha256 = hex::encode(Sha256::digest(&bytes));
        let mut records = parse_nslkdd(&bytes)?;
        drop(bytes);
        let source_records = records.len();
        if cfg.data.subsample > 0 && cfg.data.subsample < records.len() {
            let mut keep: Vec<usize> = (0..records.len()).collect();
            keep.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
            keep.truncate(cfg.data.subsample);
            keep.sort_unstable();
            records = keep.into_iter().map(|i| records[i].clone()).collect();
        }

        let schema = FeatureSchema::nsl_kdd();
        // Vocabularies cover every category in the file so that no test row
        // hits an unseen code; min-max bounds come from the train rows only.
        let encoder = fit_encoders(&records, &schema)?;
        let spec = SplitSpec { train_fraction: cfg.data.train_fraction, seed: cfg.seed, shuffle: cfg.data.shuffle };
        let (train_idx, test_idx) = split_indices(records.len(), &spec)?;
        let pick = |idx: &[usize]| -> Vec<RawRecord> { idx.iter().map(|&i| records[i].clone()).collect() };
        let (train_records, test_records) = (pick(&train_idx), pick(&test_idx));
        let scaler = fit_minmax(&apply_encoding(&train_records, &schema, &encoder)?)?;
        let train_set = EncodedDataset::from_records(&train_records, &schema, &encoder, &scaler, Provenance::Train)?;
        let test_set = EncodedDataset::from_records(&test_records, &schema, &encoder, &scaler, Provenance::Test)?;

        let dir = self.data_dir();
        std::fs::create_dir_all(&dir).map_err(PipelineError::io(&dir))?;
        let train_path = dir.join("train.bin");
        let test_path = dir.join("test.bin");
        let raw_path = dir.join("test_raw.txt");
        let manifest_path = dir.join("dataset.json");
        write_partition(&train_path, &Partition { matrix: train_set.matrix.clone(), labels: train_set.labels.clone() })?;
        write_partition(&test_path, &Partition { matrix: test_set.matrix.clone(), labels: test_set.labels.clone() })?;
        let mut raw: String = test_records.iter().map(|r| r.to_line() + "\n").collect();
        if raw.is_empty() {
            raw.push('\n');
        }
        std::fs::write(&raw_path, raw).map_err(PipelineError::io(&raw_path))?;

        let all_labels: Vec<usize> = train_set.labels.iter().chain(&test_set.labels).copied().collect();
        let dataset = DatasetManifest {
            config_hash: self.config_hash.clone(),
            seed: cfg.seed,
            source_path: source.display().to_string(),
            source_sha256,
            source_records,
            records: records.len(),
            train_rows: train_set.len(),
            test_rows: test_set.len(),
            feature_names: feature_names().into_iter().map(String::from).collect(),
            class_names: class_names(),
            distribution: class_distribution(&all_labels),
            train_distribution: train_set.class_distribution(),
            test_distribution: test_set.class_distribution(),
            encoder,
            scaler,
        };
        write_json(&manifest_path, &dataset)?;
        let mut summary = format!(
            "{} records ({} train / {} test)\n",
            dataset.records, dataset.train_rows, dataset.test_rows
        );
        for class in AttackClass::ALL {
            let _ = writeln!(summary, "  {:<7} {:>7}", class.name(), dataset.distribution.get(class));
        }
        self.finish("prepare-data", None, started, clock, &[train_path, test_path, raw_path, manifest_path], summary)
    }

    /// Trains the reference architecture of `family` on the prepared train partition.
    pub fn train_model(&self, family: ModelFamily) -> Result<StageOutcome, PipelineError> {
        let _lock = DirLock::acquire(self.out_dir())?;
        let (started, clock) = (unix_now(), Instant::now());
        self.dataset_manifest("train")?;
        let part = self.partition("train", "train")?;
        let spec = ModelSpec::reference(family);
        let config = self.config.train_config(family);
        let (params, history) = train(&spec, part.matrix.view(), &part.labels, &config)?;
        let last = history.epochs.last().cloned();
        let bundle = ModelBundle::new(spec, params, config, history, self.config_hash.clone());
        let dir = self.model_dir(family);
        bundle.save(&dir)?;
        let summary = match last {
            Some(e) => format!("{}: {} epochs, final loss {:.5}, train accuracy {:.4}\n", family.name(), e.epoch, e.mean_loss, e.train_accuracy),
            None => format!("{}: trained\n", family.name()),
        };
        self.finish("train", Some(family), started, clock, &[dir], summary)
    }

    /// Scores a trained model on the test partition.
    pub fn evaluate_model(&self, family: ModelFamily) -> Result<StageOutcome, PipelineError> {
        let _lock = DirLock::acquire(self.out_dir())?;
        let (started, clock) = (unix_now(), Instant::now());
        self.dataset_manifest("evaluate")?;
        let model = self.classifier("evaluate", family)?;
        let test = self.partition("evaluate", "test")?;
        let probs = model.predict_proba(test.matrix.view())?;
        let pred = predict_class(probs.view());
        let (report, curves) = evaluate(family.name(), &test.labels, probs.view(), &pred)?;
        let artifact = MetricsArtifact {
            config_hash: self.config_hash.clone(),
            seed: self.config.seed,
            model: family.name().to_string(),
            accuracy: report.aggregate.accuracy,
            report,
        };
        let metrics_path = self.metrics_path(family);
        let roc_path = self.roc_path(family);
        write_json(&metrics_path, &artifact)?;
        let mut named: BTreeMap<String, Option<RocCurve>> = BTreeMap::new();
        for (name, curve) in class_names().into_iter().chain(["micro".to_string()]).zip(curves) {
            named.insert(name, curve);
        }
        write_json(&roc_path, &named)?;
        let summary = EvaluationReport::overall_table(&[&artifact.report]);
        self.finish("evaluate", Some(family), started, clock, &[metrics_path, roc_path], summary)
    }

    /// Kernel SHAP attributions for a seeded sample of test rows, all five classes.
    pub fn explain_model(&self, family: ModelFamily) -> Result<StageOutcome, PipelineError> {
        let _lock = DirLock::acquire(self.out_dir())?;
        let (started, clock) = (unix_now(), Instant::now());
        let dataset = self.dataset_manifest("explain")?;
        let model = self.classifier("explain", family)?;
        let train_part = self.partition("explain", "train")?;
        let test = self.partition("explain", "test")?;
        let raw_path = require("explain", self.data_dir().join("test_raw.txt"))?;
        let raw_text = std::fs::read(&raw_path).map_err(PipelineError::io(&raw_path))?;
        let raw = parse_nslkdd(&raw_text)?;

        let cfg = &self.config;
        let mut ids: Vec<usize> = (0..test.labels.len()).collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
        ids.truncate(cfg.explain.instances);
        let instances = test.matrix.select(ndarray::Axis(0), &ids);
        let background = BackgroundSet::sample(train_part.matrix.view(), cfg.explain.background_size, cfg.seed)?;
        let shap = KernelShapConfig { n_coalitions: cfg.explain.coalitions, seed: cfg.seed };
        let attributions = explain_batch(&model, instances.view(), &ids, &background, &shap)?;
        let probs = model.predict_proba(instances.view())?;
        let pred = predict_class(probs.view());

        let names = class_names();
        let k = names.len();
        let explained: Vec<InstanceExplanation> = ids
            .iter()
            .enumerate()
            .map(|(r, &id)| InstanceExplanation {
                instance_id: id,
                true_label: test.labels[id],
                predicted_label: pred[r],
                probabilities: probs.row(r).to_vec(),
                feature_values: instances.row(r).to_vec(),
                raw_values: raw.get(id).map(|rec| rec.feature_values.clone()).unwrap_or_default(),
                classes: attributions[r * k..(r + 1) * k]
                    .iter()
                    .map(|a| ClassAttribution {
                        class_index: a.class_index,
                        class_name: names[a.class_index].clone(),
                        base_value: a.base_value,
                        phi: a.phi.clone(),
                        prediction: a.prediction,
                    })
                    .collect(),
            })
            .collect();
        let values: BTreeMap<usize, Vec<f64>> = explained.iter().map(|e| (e.instance_id, e.feature_values.clone())).collect();
        let summaries = (0..k)
            .map(|c| summarize(&attributions, c, &dataset.feature_names, &values))
            .collect::<Result<Vec<_>, _>>()?;
        let worst_gap = attributions.iter().map(|a| a.local_accuracy_gap()).fold(0.0, f64::max);
        let bundle = ExplanationBundle {
            format_version: EXPLANATION_FORMAT_VERSION,
            model: family.name().to_string(),
            config_hash: self.config_hash.clone(),
            seed: cfg.seed,
            background_size: background.len(),
            n_coalitions: cfg.explain.coalitions,
            feature_names: dataset.feature_names.clone(),
            class_names: names,
            instances: explained,
            summaries,
        };
        let path = self.explanation_path(family);
        let parent = path.parent().expect("explanations dir");
        std::fs::create_dir_all(parent).map_err(PipelineError::io(parent))?;
        bundle.save(&path).map_err(PipelineError::io(&path))?;
        let summary = format!(
            "{}: {} instances × {k} classes, max local-accuracy gap {worst_gap:.2e}\n",
            family.name(),
            bundle.instances.len()
        );
        self.finish("explain", Some(family), started, clock, &[path], summary)
    }

    /// Tables, ROC CSVs and a combined JSON over the configured models. Refuses
    /// artifacts produced by a different config.
    pub fn report(&self) -> Result<StageOutcome, PipelineError> {
        let _lock = DirLock::acquire(self.out_dir())?;
        let (started, clock) = (unix_now(), Instant::now());
        let dir = self.report_dir();
        let roc_dir = dir.join("roc");
        std::fs::create_dir_all(&roc_dir).map_err(PipelineError::io(&roc_dir))?;
        let mut models = Vec::new();
        let mut rankings: BTreeMap<String, Vec<ClassRanking>> = BTreeMap::new();
        let mut written = Vec::new();
        for &family in &self.config.models {
            let path = require("report", self.metrics_path(family))?;
            let artifact: MetricsArtifact = read_json(&path)?;
            self.check_hash(&path, &artifact.config_hash)?;
            let roc_path = require("report", self.roc_path(family))?;
            let curves: BTreeMap<String, Option<RocCurve>> = read_json(&roc_path)?;
            for (class, curve) in curves.iter().filter_map(|(c, v)| v.as_ref().map(|v| (c, v))) {
                let csv = roc_dir.join(format!("{}_{}.csv", family.name(), class.to_lowercase()));
                std::fs::write(&csv, curve.to_csv()).map_err(PipelineError::io(&csv))?;
                written.push(csv);
            }
            let explanation = self.explanation_path(family);
            if explanation.exists() {
                let bundle = ExplanationBundle::load(&explanation).map_err(PipelineError::io(&explanation))?;
                self.check_hash(&explanation, &bundle.config_hash)?;
                let per_class = bundle
                    .summaries
                    .iter()
                    .map(|s| ClassRanking {
                        class: bundle.class_names.get(s.class_index).cloned().unwrap_or_default(),
                        features: s.top(RANKING_DEPTH).map(|f| (f.feature.clone(), f.mean_abs_phi)).collect(),
                    })
                    .collect();
                rankings.insert(family.name().to_string(), per_class);
            }
            models.push(artifact);
        }
        let reports: Vec<&EvaluationReport> = models.iter().map(|m| &m.report).collect();
        let overall = EvaluationReport::overall_table(&reports);
        let per_class = EvaluationReport::per_class_table(&reports);
        let mut ranking_text = String::new();
        for (model, classes) in &rankings {
            for c in classes {
                let _ = writeln!(ranking_text, "{model} / {}:", c.class);
                for (rank, (feature, v)) in c.features.iter().enumerate() {
                    let _ = writeln!(ranking_text, "  {:>2}. {feature:<28} {v:.6}", rank + 1);
                }
            }
        }
        let files = [("overall.txt", &overall), ("per_class.txt", &per_class), ("explanations.txt", &ranking_text)];
        for (name, text) in files {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(PipelineError::io(&path))?;
            written.push(path);
        }
        let combined = CombinedReport { config_hash: self.config_hash.clone(), seed: self.config.seed, models, rankings };
        let json_path = dir.join("report.json");
        write_json(&json_path, &combined)?;
        written.push(json_path);
        let summary = format!("{overall}\n{per_class}");
        self.finish("report", None, started, clock, &written, summary)
    }

    /// prepare-data, then train/evaluate/explain for every configured model, then report.
    pub fn run_all(&self) -> Result<Vec<StageOutcome>, PipelineError> {
        let mut out = vec![self.prepare_data()?];
        for &family in &self.config.models {
            out.push(self.train_model(family)?);
            out.push(self.evaluate_model(family)?);
            out.push(self.explain_model(family)?);
        }
        out.push(self.report()?);
        Ok(out)
    }
}
