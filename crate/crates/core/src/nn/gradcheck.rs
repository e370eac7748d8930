//! Central finite-difference check of [`backward`](super::backward).

use ndarray::ArrayView3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{backward, cross_entropy, forward, ForwardPass, Mode, Targets};
use super::params::Params;
use super::{LayerSpec, ModelSpec, NnError};

/// Denominator floor for the relative error of near-zero gradients.
pub const REL_ERROR_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_entry: String,
    pub checked: usize,
}

/// Compares every analytic gradient entry with `(L(θ+h) − L(θ−h)) / 2h`.
///
/// With `dropout_seed = Some(s)` every evaluation runs in training mode with
/// an RNG seeded from `s`, so all passes share the same dropout masks. With
/// `None` dropout behaves as at inference time (identity).
pub fn check_gradients(
    spec: &ModelSpec,
    params: &Params,
    input: ArrayView3<'_, f64>,
    targets: Targets<'_>,
    dropout_seed: Option<u64>,
    step: f64,
) -> Result<GradCheckReport, NnError> {
    let spec = match dropout_seed {
        Some(_) => spec.clone(),
        None => without_dropout(spec),
    };
    let seed = dropout_seed.unwrap_or(0);
    let run = |p: &Params| -> Result<ForwardPass, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        forward(&spec, p, input, Mode::Train(&mut rng))
    };

    let analytic = backward(&spec, params, &run(params)?, targets)?;
    let names: Vec<String> = params.named_tensors().into_iter().map(|(n, _)| n).collect();
    let mut probe = params.clone();
    let mut worst = (0.0f64, String::new());
    let mut checked = 0;
    for (t, name) in names.iter().enumerate() {
        for i in 0..params.tensors()[t].len() {
            let original = params.tensors()[t][i];
            probe.tensors_mut()[t][i] = original + step;
            let plus = cross_entropy(run(&probe)?.probs.view(), targets)?;
            probe.tensors_mut()[t][i] = original - step;
            let minus = cross_entropy(run(&probe)?.probs.view(), targets)?;
            probe.tensors_mut()[t][i] = original;

            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic.tensors()[t][i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
            if rel > worst.0 {
                worst = (rel, format!("{name}[{i}]"));
            }
            checked += 1;
        }
    }
    Ok(GradCheckReport { max_rel_error: worst.0, worst_entry: worst.1, checked })
}

fn without_dropout(spec: &ModelSpec) -> ModelSpec {
    let mut s = spec.clone();
    for layer in &mut s.layers {
        if let LayerSpec::Dropout { rate } = layer {
            *rate = 0.0;
        }
    }
    s
}
