use std::time::Instant;

use ndarray::{Array3, ArrayView2};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{backward, cross_entropy, forward, one_hot, predict_class, Mode, Targets};
use super::optim::{adam_update, AdamConfig, AdamState};
use super::params::Params;
use super::{ModelSpec, NnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Integer class targets.
    SparseCe,
    /// One-hot class targets.
    CategoricalCe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossKind,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Samples per gradient shard. Shards run in parallel and are summed in
    /// index order, so results do not depend on the thread count.
    pub shard_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 50, batch_size: 64, loss: LossKind::SparseCe, seed: 42, adam: AdamConfig::default(), shard_size: 16 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.epochs == 0 || self.batch_size == 0 || self.shard_size == 0 {
            return Err(NnError::InvalidConfig("epochs, batch_size and shard_size must be >= 1".into()));
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return Err(NnError::InvalidConfig(format!("invalid Adam hyper-parameters {a:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_accuracy: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub wall_seconds: f64,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,mean_loss,train_accuracy,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.mean_loss, e.train_accuracy, e.seconds));
        }
        out
    }
}

struct ShardResult {
    grads: Params,
    loss_sum: f64,
    correct: usize,
}

/// Mini-batch Adam training from a seeded initialisation.
///
/// `rows` is N×(input length) in row-major sample layout; every source of
/// randomness (init, shuffling, dropout) derives from `config.seed`.
pub fn train(
    spec: &ModelSpec,
    rows: ArrayView2<'_, f64>,
    labels: &[usize],
    config: &TrainConfig,
) -> Result<(Params, TrainHistory), NnError> {
    config.validate()?;
    spec.shapes()?;
    let n = rows.nrows();
    if n == 0 {
        return Err(NnError::EmptyTrainingSet);
    }
    if labels.len() != n {
        return Err(NnError::InvalidTarget(format!("{} labels for {n} rows", labels.len())));
    }
    if rows.ncols() != spec.input_len() {
        return Err(NnError::ShapeMismatch(format!("expected {} features, got {}", spec.input_len(), rows.ncols())));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= spec.output_classes) {
        return Err(NnError::InvalidTarget(format!("label {bad} outside 0..{}", spec.output_classes)));
    }

    let mut params = Params::init(spec, config.seed)?;
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5_eed0_f7a1);
    let mut order: Vec<usize> = (0..n).collect();
    let (len, ch) = spec.input_shape;
    let mut history = TrainHistory::default();
    let started = Instant::now();

    for epoch in 0..config.epochs {
        let epoch_start = Instant::now();
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let batch_seed = rng.next_u64();
            let shards: Vec<&[usize]> = batch.chunks(config.shard_size).collect();
            let results: Vec<Result<ShardResult, NnError>> = shards
                .par_iter()
                .enumerate()
                .map(|(s, idx)| {
                    let mut shard_rng = ChaCha8Rng::seed_from_u64(batch_seed);
                    shard_rng.set_stream(s as u64);
                    let x = Array3::from_shape_fn((idx.len(), len, ch), |(i, t, c)| rows[[idx[i], t * ch + c]]);
                    let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
                    let pass = forward(spec, &params, x.view(), Mode::Train(&mut shard_rng))?;
                    let targets_oh;
                    let targets = match config.loss {
                        LossKind::SparseCe => Targets::Sparse(&y),
                        LossKind::CategoricalCe => {
                            targets_oh = one_hot(&y, spec.output_classes);
                            Targets::OneHot(targets_oh.view())
                        }
                    };
                    let loss = cross_entropy(pass.probs.view(), targets)?;
                    let grads = backward(spec, &params, &pass, targets)?;
                    let correct = predict_class(pass.probs.view()).iter().zip(&y).filter(|(p, t)| p == t).count();
                    Ok(ShardResult { grads, loss_sum: loss * idx.len() as f64, correct })
                })
                .collect();

            let mut total = params.zeros_like();
            for (shard, result) in shards.iter().zip(results) {
                let r = result?;
                total.add_scaled(&r.grads, shard.len() as f64 / batch.len() as f64);
                loss_sum += r.loss_sum;
                correct += r.correct;
            }
            if !loss_sum.is_finite() {
                return Err(NnError::NonFiniteLoss { epoch });
            }
            adam_update(&mut params, &total, &mut adam, &config.adam)?;
        }
        if !params.all_finite() {
            return Err(NnError::NonFiniteLoss { epoch });
        }
        let stats = EpochStats {
            epoch: epoch + 1,
            mean_loss: loss_sum / n as f64,
            train_accuracy: correct as f64 / n as f64,
            seconds: epoch_start.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {}/{}: loss {:.5} accuracy {:.4} ({:.1}s)",
            stats.epoch,
            config.epochs,
            stats.mean_loss,
            stats.train_accuracy,
            stats.seconds
        );
        history.epochs.push(stats);
    }
    history.wall_seconds = started.elapsed().as_secs_f64();
    Ok((params, history))
}

/// Fraction of rows whose argmax matches the label.
pub fn accuracy(spec: &ModelSpec, params: &Params, rows: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64, NnError> {
    let probs = super::model::predict_proba(spec, params, rows)?;
    let hits = predict_class(probs.view()).iter().zip(labels).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / labels.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec, ModelFamily};
    use ndarray::Array2;
    use rand::Rng;

    fn toy_problem() -> (Array2<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let w = [1.0, -2.0, 0.5, 1.5];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        while labels.len() < 200 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let score: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
            if score.abs() < 0.1 {
                continue;
            }
            labels.push(usize::from(score > 0.0));
            rows.extend(x);
        }
        (Array2::from_shape_vec((200, 4), rows).unwrap(), labels)
    }

    fn toy_spec() -> ModelSpec {
        ModelSpec {
            family: ModelFamily::Cnn,
            layers: vec![
                LayerSpec::Dense { units: 8, activation: Activation::Relu },
                LayerSpec::Dense { units: 5, activation: Activation::Linear },
                LayerSpec::Softmax,
            ],
            input_shape: (4, 1),
            output_classes: 5,
        }
    }

    /// Perceptron run to convergence certifies that the toy set is separable.
    fn separable(rows: &Array2<f64>, labels: &[usize]) -> bool {
        let mut w = [0.0; 5];
        for _ in 0..1000 {
            let mut mistakes = 0;
            for (x, &y) in rows.rows().into_iter().zip(labels) {
                let target = if y == 1 { 1.0 } else { -1.0 };
                let s: f64 = w[4] + x.iter().zip(&w[..4]).map(|(a, b)| a * b).sum::<f64>();
                if s * target <= 0.0 {
                    mistakes += 1;
                    for j in 0..4 {
                        w[j] += target * x[j];
                    }
                    w[4] += target;
                }
            }
            if mistakes == 0 {
                return true;
            }
        }
        false
    }

    #[test]
    fn learns_separable_toy_set() {
        let (rows, labels) = toy_problem();
        assert!(separable(&rows, &labels));
        let spec = toy_spec();
        let config = TrainConfig { epochs: 50, batch_size: 16, adam: AdamConfig { learning_rate: 0.01, ..Default::default() }, ..Default::default() };
        let (params, history) = train(&spec, rows.view(), &labels, &config).unwrap();
        assert_eq!(history.epochs.len(), 50);
        let acc = accuracy(&spec, &params, rows.view(), &labels).unwrap();
        assert!(acc >= 0.99, "accuracy {acc}");
    }

    #[test]
    fn bit_reproducible_under_seed() {
        let (rows, labels) = toy_problem();
        let mut spec = toy_spec();
        spec.layers.insert(1, LayerSpec::Dropout { rate: 0.3 });
        let config = TrainConfig { epochs: 3, batch_size: 20, shard_size: 7, ..Default::default() };
        let (a, ha) = train(&spec, rows.view(), &labels, &config).unwrap();
        let (b, hb) = train(&spec, rows.view(), &labels, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            ha.epochs.iter().map(|e| e.mean_loss.to_bits()).collect::<Vec<_>>(),
            hb.epochs.iter().map(|e| e.mean_loss.to_bits()).collect::<Vec<_>>()
        );
        let other = TrainConfig { seed: 7, ..config };
        let (c, _) = train(&spec, rows.view(), &labels, &other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn categorical_loss_matches_sparse() {
        let (rows, labels) = toy_problem();
        let spec = toy_spec();
        let sparse = TrainConfig { epochs: 2, ..Default::default() };
        let categorical = TrainConfig { loss: LossKind::CategoricalCe, ..sparse.clone() };
        let (a, _) = train(&spec, rows.view(), &labels, &sparse).unwrap();
        let (b, _) = train(&spec, rows.view(), &labels, &categorical).unwrap();
        for (x, y) in a.tensors().iter().zip(b.tensors()) {
            for (p, q) in x.iter().zip(y) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = toy_spec();
        let rows = Array2::<f64>::zeros((0, 4));
        assert!(matches!(train(&spec, rows.view(), &[], &TrainConfig::default()), Err(NnError::EmptyTrainingSet)));
        let rows = Array2::<f64>::zeros((2, 4));
        assert!(train(&spec, rows.view(), &[0, 9], &TrainConfig::default()).is_err());
        let bad = TrainConfig { epochs: 0, ..Default::default() };
        assert!(matches!(train(&spec, rows.view(), &[0, 1], &bad), Err(NnError::InvalidConfig(_))));
    }

    #[test]
    fn history_csv_layout() {
        let h = TrainHistory {
            epochs: vec![EpochStats { epoch: 1, mean_loss: 0.5, train_accuracy: 0.75, seconds: 1.0 }],
            wall_seconds: 1.0,
        };
        assert_eq!(h.to_csv(), "epoch,mean_loss,train_accuracy,seconds\n1,0.5,0.75,1\n");
    }
}
