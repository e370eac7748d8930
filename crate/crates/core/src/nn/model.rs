use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand_chacha::ChaCha8Rng;

use super::layers::{self, ConvCache, DenseCache, PoolCache};
use super::lstm::{self, LstmCache};
use super::params::{LayerParams, Params};
use super::{LayerSpec, ModelSpec, NnError};

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Forward-pass mode. Training mode samples dropout masks from the given RNG.
pub enum Mode<'a> {
    Infer,
    Train(&'a mut ChaCha8Rng),
}

pub(crate) enum LayerCache {
    Conv(ConvCache),
    Pool(PoolCache),
    Dense(DenseCache),
    Lstm(LstmCache),
    Dropout(Option<Array3<f64>>),
    Softmax(Array3<f64>),
}

/// Output of [`forward`]: class probabilities plus, in training mode, the
/// activations needed by [`backward`].
pub struct ForwardPass {
    pub probs: Array2<f64>,
    cache: Option<Vec<LayerCache>>,
}

impl ForwardPass {
    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }
}

fn check_input(spec: &ModelSpec, input: &ArrayView3<'_, f64>) -> Result<(), NnError> {
    let (_, len, ch) = input.dim();
    if (len, ch) != spec.input_shape {
        return Err(NnError::ShapeMismatch(format!(
            "model expects samples of shape {:?}, got ({len}, {ch})",
            spec.input_shape
        )));
    }
    Ok(())
}

/// Runs the layer stack on a (batch, length, channels) tensor.
pub fn forward(spec: &ModelSpec, params: &Params, input: ArrayView3<'_, f64>, mode: Mode<'_>) -> Result<ForwardPass, NnError> {
    check_input(spec, &input)?;
    if params.layers.len() != spec.layers.len() {
        return Err(NnError::ShapeMismatch("parameter count differs from layer count".into()));
    }
    let (train, mut rng) = match mode {
        Mode::Infer => (false, None),
        Mode::Train(rng) => (true, Some(rng)),
    };
    let mut caches = Vec::with_capacity(spec.layers.len());
    let mut x: Array3<f64> = input.to_owned();
    for (index, (layer, p)) in spec.layers.iter().zip(&params.layers).enumerate() {
        let (next, cache) = match (layer, p) {
            (&LayerSpec::Conv1d { stride, padding, activation, .. }, LayerParams::Conv { kernel, bias }) => {
                let (y, c) = layers::conv_forward(x.view(), kernel, bias, stride, padding, activation, train)?;
                (y, LayerCache::Conv(c))
            }
            (&LayerSpec::MaxPool1d { window, stride }, LayerParams::None) => {
                if window > x.dim().1 {
                    return Err(NnError::ShapeMismatch(format!("layer {index}: pool window exceeds input")));
                }
                let (y, c) = layers::maxpool_forward(x.view(), window, stride, train);
                (y, LayerCache::Pool(c))
            }
            (&LayerSpec::Dense { activation, .. }, LayerParams::Dense { weights, bias }) => {
                let (y, c) = layers::dense_forward(x.view(), weights, bias, activation, train)?;
                (y, LayerCache::Dense(c))
            }
            (&LayerSpec::Lstm { return_sequences, .. }, LayerParams::Lstm(w)) => {
                let (y, c) = lstm::forward(x.view(), w, return_sequences)?;
                (y, LayerCache::Lstm(c))
            }
            (&LayerSpec::Dropout { rate }, LayerParams::None) => match rng.as_deref_mut() {
                Some(rng) if rate > 0.0 => {
                    let mask = layers::dropout_mask(x.dim(), rate, rng);
                    (&x * &mask, LayerCache::Dropout(Some(mask)))
                }
                _ => (x, LayerCache::Dropout(None)),
            },
            (LayerSpec::Softmax, LayerParams::None) => {
                let p = layers::softmax(x.view());
                (p.clone(), LayerCache::Softmax(p))
            }
            _ => {
                return Err(NnError::ShapeMismatch(format!(
                    "layer {index} ({}) has parameters of the wrong kind",
                    layer.kind()
                )))
            }
        };
        if !next.iter().all(|v| v.is_finite()) {
            return Err(NnError::NonFiniteActivation { layer: index });
        }
        x = next;
        if train {
            caches.push(cache);
        }
    }
    let (n, len, ch) = x.dim();
    let probs = x.into_shape_with_order((n, len * ch)).expect("reshape");
    Ok(ForwardPass { probs, cache: train.then_some(caches) })
}

/// Inference on an N×k matrix of flattened samples.
pub fn predict_proba(spec: &ModelSpec, params: &Params, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>, NnError> {
    const CHUNK: usize = 256;
    let (n, k) = rows.dim();
    if k != spec.input_len() {
        return Err(NnError::ShapeMismatch(format!("expected {} features per row, got {k}", spec.input_len())));
    }
    let (len, ch) = spec.input_shape;
    let mut out: Option<Array2<f64>> = None;
    for (start, chunk) in rows.axis_chunks_iter(Axis(0), CHUNK).enumerate() {
        let m = chunk.nrows();
        let batch = chunk.as_standard_layout();
        let x = batch.view().into_shape_with_order((m, len, ch)).expect("row-major reshape");
        let probs = forward(spec, params, x, Mode::Infer)?.probs;
        let dst = out.get_or_insert_with(|| Array2::zeros((n, probs.ncols())));
        dst.slice_mut(ndarray::s![start * CHUNK..start * CHUNK + m, ..]).assign(&probs);
    }
    Ok(out.unwrap_or_else(|| Array2::zeros((0, spec.output_classes))))
}

/// Training targets in either integer or one-hot form.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    Sparse(&'a [usize]),
    OneHot(ArrayView2<'a, f64>),
}

impl Targets<'_> {
    fn len(&self) -> usize {
        match self {
            Targets::Sparse(t) => t.len(),
            Targets::OneHot(t) => t.nrows(),
        }
    }

    fn weight(&self, row: usize, class: usize) -> f64 {
        match self {
            Targets::Sparse(t) => f64::from(u8::from(t[row] == class)),
            Targets::OneHot(t) => t[[row, class]],
        }
    }

    fn validate(&self, classes: usize) -> Result<(), NnError> {
        match self {
            Targets::Sparse(t) => match t.iter().position(|&c| c >= classes) {
                Some(i) => Err(NnError::InvalidTarget(format!("target {} at row {i}", t[i]))),
                None => Ok(()),
            },
            Targets::OneHot(t) => {
                if t.ncols() != classes {
                    return Err(NnError::InvalidTarget(format!("one-hot width {} != {classes}", t.ncols())));
                }
                match t.rows().into_iter().position(|r| r.iter().any(|&v| v < 0.0) || (r.sum() - 1.0).abs() > 1e-9) {
                    Some(i) => Err(NnError::InvalidTarget(format!("row {i} is not a distribution"))),
                    None => Ok(()),
                }
            }
        }
    }
}

pub fn one_hot(labels: &[usize], classes: usize) -> Array2<f64> {
    let mut out = Array2::zeros((labels.len(), classes));
    for (i, &l) in labels.iter().enumerate() {
        if l < classes {
            out[[i, l]] = 1.0;
        }
    }
    out
}

/// Mean of `−Σ_c y_c · log(max(p_c, 1e-12))` over rows.
pub fn cross_entropy(probs: ArrayView2<'_, f64>, targets: Targets<'_>) -> Result<f64, NnError> {
    let (n, classes) = probs.dim();
    if targets.len() != n {
        return Err(NnError::InvalidTarget(format!("{} targets for {n} rows", targets.len())));
    }
    targets.validate(classes)?;
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (i, row) in probs.rows().into_iter().enumerate() {
        for (c, &p) in row.iter().enumerate() {
            let y = targets.weight(i, c);
            if y != 0.0 {
                total -= y * p.max(PROB_FLOOR).ln();
            }
        }
    }
    Ok(total / n as f64)
}

/// Exact gradients of the mean cross-entropy with respect to every parameter.
pub fn backward(spec: &ModelSpec, params: &Params, pass: &ForwardPass, targets: Targets<'_>) -> Result<Params, NnError> {
    let caches = pass.cache.as_ref().ok_or(NnError::MissingCache)?;
    let (n, classes) = pass.probs.dim();
    if targets.len() != n {
        return Err(NnError::InvalidTarget(format!("{} targets for {n} rows", targets.len())));
    }
    targets.validate(classes)?;

    let mut d = Array2::<f64>::zeros((n, classes));
    for ((i, c), g) in d.indexed_iter_mut() {
        let p = pass.probs[[i, c]];
        let y = targets.weight(i, c);
        if y != 0.0 && p >= PROB_FLOOR {
            *g = -y / (n as f64 * p);
        }
    }
    let out_shape = spec.shapes()?.last().copied().unwrap_or(spec.input_shape);
    let mut grad = d.into_shape_with_order((n, out_shape.0, out_shape.1)).expect("reshape");
    let mut grads = params.zeros_like();

    for (((layer, cache), p), g) in spec
        .layers
        .iter()
        .zip(caches)
        .zip(&params.layers)
        .zip(grads.layers.iter_mut())
        .rev()
    {
        grad = match (layer, cache, p, g) {
            (
                &LayerSpec::Conv1d { stride, activation, .. },
                LayerCache::Conv(c),
                LayerParams::Conv { kernel, .. },
                LayerParams::Conv { kernel: dk, bias: db },
            ) => layers::conv_backward(grad.view(), c, kernel, stride, activation, dk, db),
            (_, LayerCache::Pool(c), _, _) => layers::maxpool_backward(grad.view(), c),
            (
                &LayerSpec::Dense { activation, .. },
                LayerCache::Dense(c),
                LayerParams::Dense { weights, .. },
                LayerParams::Dense { weights: dw, bias: db },
            ) => layers::dense_backward(grad.view(), c, weights, activation, dw, db),
            (_, LayerCache::Lstm(c), LayerParams::Lstm(w), LayerParams::Lstm(dw)) => {
                lstm::backward(grad.view(), c, w, dw)
            }
            (_, LayerCache::Dropout(mask), _, _) => match mask {
                Some(m) => grad * m,
                None => grad,
            },
            (_, LayerCache::Softmax(probs), _, _) => layers::softmax_backward(grad.view(), probs),
            _ => return Err(NnError::MissingCache),
        };
    }
    Ok(grads)
}

/// Argmax per row; ties go to the lowest class index.
pub fn predict_class(probs: ArrayView2<'_, f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
