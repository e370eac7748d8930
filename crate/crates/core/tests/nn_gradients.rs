use ndarray::{Array2, Array3};
use nidsx_core::nn::{
    check_gradients, forward, Activation, LayerParams, LayerSpec, Mode, ModelFamily, ModelSpec, Padding, Params, Targets,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(layers: Vec<LayerSpec>, input_shape: (usize, usize)) -> ModelSpec {
    ModelSpec { family: ModelFamily::Cnn, layers, input_shape, output_classes: 5 }
}

fn head() -> [LayerSpec; 2] {
    [LayerSpec::Dense { units: 5, activation: Activation::Linear }, LayerSpec::Softmax]
}

fn random_case(spec: &ModelSpec, n: usize, seed: u64) -> (Params, Array3<f64>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Params::init(spec, seed).unwrap();
    // Non-zero biases so every bias gradient path is exercised.
    for t in params.tensors_mut() {
        for v in t.iter_mut() {
            *v += rng.random_range(-0.1..0.1);
        }
    }
    let x = Array3::from_shape_fn((n, spec.input_shape.0, spec.input_shape.1), |_| rng.random_range(-1.0..1.0));
    let y = (0..n).map(|_| rng.random_range(0..5)).collect();
    (params, x, y)
}

fn assert_gradients(name: &str, spec: &ModelSpec, dropout_seed: Option<u64>) {
    for seed in 0..3 {
        let (params, x, y) = random_case(spec, 3, 100 + seed);
        let report = check_gradients(spec, &params, x.view(), Targets::Sparse(&y), dropout_seed, 1e-5).unwrap();
        assert!(
            report.max_rel_error < 1e-4,
            "{name} seed {seed}: max relative error {:.3e} at {}",
            report.max_rel_error,
            report.worst_entry
        );
    }
}

#[test]
fn dense_gradients() {
    let mut layers = vec![
        LayerSpec::Dense { units: 6, activation: Activation::Tanh },
        LayerSpec::Dense { units: 4, activation: Activation::Sigmoid },
    ];
    layers.extend(head());
    assert_gradients("dense", &spec(layers, (4, 2)), None);
}

#[test]
fn conv_gradients() {
    for (padding, stride, activation) in
        [(Padding::Same, 1, Activation::Tanh), (Padding::Valid, 2, Activation::Sigmoid), (Padding::Same, 2, Activation::Linear)]
    {
        let mut layers = vec![
            LayerSpec::Conv1d { filters: 3, kernel_width: 3, stride, padding, activation },
            LayerSpec::Conv1d { filters: 2, kernel_width: 2, stride: 1, padding: Padding::Same, activation: Activation::Tanh },
        ];
        layers.extend(head());
        assert_gradients("conv1d", &spec(layers, (7, 2)), None);
    }
}

#[test]
fn conv_relu_pool_gradients() {
    let mut layers = vec![
        LayerSpec::Conv1d { filters: 3, kernel_width: 3, stride: 1, padding: Padding::Same, activation: Activation::Relu },
        LayerSpec::MaxPool1d { window: 2, stride: 2 },
        LayerSpec::Conv1d { filters: 2, kernel_width: 3, stride: 1, padding: Padding::Same, activation: Activation::Tanh },
        LayerSpec::MaxPool1d { window: 3, stride: 1 },
    ];
    layers.extend(head());
    assert_gradients("conv+relu+maxpool", &spec(layers, (9, 1)), None);
}

#[test]
fn lstm_gradients_multi_step() {
    let mut layers = vec![
        LayerSpec::Lstm { hidden_units: 3, return_sequences: true },
        LayerSpec::Lstm { hidden_units: 4, return_sequences: false },
    ];
    layers.extend(head());
    assert_gradients("lstm T=4", &spec(layers, (4, 3)), None);
}

#[test]
fn lstm_gradients_single_step() {
    let mut layers = vec![LayerSpec::Lstm { hidden_units: 5, return_sequences: false }];
    layers.extend(head());
    assert_gradients("lstm T=1", &spec(layers, (1, 6)), None);
}

#[test]
fn dropout_gradients() {
    let mut layers = vec![
        LayerSpec::Dense { units: 8, activation: Activation::Tanh },
        LayerSpec::Dropout { rate: 0.4 },
        LayerSpec::Lstm { hidden_units: 3, return_sequences: false },
        LayerSpec::Dropout { rate: 0.2 },
    ];
    layers.extend(head());
    let s = spec(layers, (3, 2));
    assert_gradients("dropout (infer)", &s, None);
    assert_gradients("dropout (fixed train mask)", &s, Some(17));
}

/// Straight-line evaluation of Conv1D(same) → ReLU → MaxPool(2) → Dense → softmax.
#[allow(clippy::needless_range_loop)]
fn naive_forward(params: &Params, x: &Array2<f64>) -> Vec<f64> {
    let (len, ch) = x.dim();
    let (kernel, kb) = match &params.layers[0] {
        LayerParams::Conv { kernel, bias } => (kernel, bias),
        _ => unreachable!(),
    };
    let (w, db) = match &params.layers[2] {
        LayerParams::Dense { weights, bias } => (weights, bias),
        _ => unreachable!(),
    };
    let (kw, _, filters) = kernel.dim();
    let left = (kw - 1) / 2;
    let mut conv = vec![vec![0.0; filters]; len];
    for t in 0..len {
        for f in 0..filters {
            let mut acc = kb[f];
            for k in 0..kw {
                let pos = t as isize + k as isize - left as isize;
                if pos >= 0 && (pos as usize) < len {
                    for c in 0..ch {
                        acc += x[[pos as usize, c]] * kernel[[k, c, f]];
                    }
                }
            }
            conv[t][f] = if acc > 0.0 { acc } else { 0.0 };
        }
    }
    let pooled: Vec<Vec<f64>> = (0..len / 2)
        .map(|t| (0..filters).map(|f| conv[2 * t][f].max(conv[2 * t + 1][f])).collect())
        .collect();
    let flat: Vec<f64> = pooled.into_iter().flatten().collect();
    let logits: Vec<f64> = (0..5).map(|o| db[o] + flat.iter().enumerate().map(|(i, v)| v * w[[i, o]]).sum::<f64>()).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

#[test]
fn forward_matches_straight_line_reimplementation() {
    let s = spec(
        vec![
            LayerSpec::Conv1d { filters: 3, kernel_width: 3, stride: 1, padding: Padding::Same, activation: Activation::Relu },
            LayerSpec::MaxPool1d { window: 2, stride: 2 },
            LayerSpec::Dense { units: 5, activation: Activation::Linear },
            LayerSpec::Softmax,
        ],
        (8, 2),
    );
    for seed in 0..5 {
        let (params, x, _) = random_case(&s, 4, seed);
        let probs = forward(&s, &params, x.view(), Mode::Infer).unwrap().probs;
        for n in 0..4 {
            let sample = x.index_axis(ndarray::Axis(0), n).to_owned();
            let expected = naive_forward(&params, &sample);
            for c in 0..5 {
                assert!((probs[[n, c]] - expected[c]).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn reference_architectures_gradcheck_spot() {
    // Full reference models are too large for exhaustive differencing; a
    // 41-feature input still exercises the real layer geometry.
    let mut cnn = ModelSpec::reference_cnn();
    cnn.layers = vec![
        LayerSpec::Conv1d { filters: 2, kernel_width: 3, stride: 1, padding: Padding::Same, activation: Activation::Tanh },
        LayerSpec::MaxPool1d { window: 2, stride: 2 },
        LayerSpec::Conv1d { filters: 2, kernel_width: 3, stride: 1, padding: Padding::Same, activation: Activation::Tanh },
        LayerSpec::MaxPool1d { window: 2, stride: 2 },
        LayerSpec::Conv1d { filters: 2, kernel_width: 3, stride: 1, padding: Padding::Same, activation: Activation::Tanh },
        LayerSpec::Dense { units: 3, activation: Activation::Tanh },
        LayerSpec::Dense { units: 5, activation: Activation::Linear },
        LayerSpec::Softmax,
    ];
    cnn.validate().unwrap();
    assert_gradients("mini cnn on 41 features", &cnn, None);

    let mut lstm = ModelSpec::reference_lstm();
    for layer in &mut lstm.layers {
        if let LayerSpec::Lstm { hidden_units, .. } = layer {
            *hidden_units = 3;
        }
    }
    lstm.validate().unwrap();
    assert_gradients("mini lstm on 41 features", &lstm, Some(5));
}
