use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lstm::LstmWeights;
use super::{LayerSpec, ModelSpec, NnError};

/// Trainable tensors of one layer. Parameter-free layers hold `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum LayerParams {
    None,
    /// `kernel` is (kernel_width, in_channels, filters).
    Conv { kernel: Array3<f64>, bias: Array1<f64> },
    /// `weights` is (flattened_inputs, units).
    Dense { weights: Array2<f64>, bias: Array1<f64> },
    Lstm(LstmWeights),
}

impl LayerParams {
    fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            LayerParams::None => vec![],
            LayerParams::Conv { kernel, bias } => vec![("kernel", slice(kernel)), ("bias", slice(bias))],
            LayerParams::Dense { weights, bias } => vec![("weights", slice(weights)), ("bias", slice(bias))],
            LayerParams::Lstm(w) => w.tensors(),
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            LayerParams::None => vec![],
            LayerParams::Conv { kernel, bias } => vec![slice_mut(kernel), slice_mut(bias)],
            LayerParams::Dense { weights, bias } => vec![slice_mut(weights), slice_mut(bias)],
            LayerParams::Lstm(w) => w.tensors_mut(),
        }
    }

    fn zeros_like(&self) -> Self {
        match self {
            LayerParams::None => LayerParams::None,
            LayerParams::Conv { kernel, bias } => {
                LayerParams::Conv { kernel: Array3::zeros(kernel.dim()), bias: Array1::zeros(bias.len()) }
            }
            LayerParams::Dense { weights, bias } => {
                LayerParams::Dense { weights: Array2::zeros(weights.dim()), bias: Array1::zeros(bias.len()) }
            }
            LayerParams::Lstm(w) => LayerParams::Lstm(w.zeros_like()),
        }
    }
}

pub(crate) fn slice<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> &[f64] {
    a.as_slice().expect("parameters are stored in standard layout")
}

pub(crate) fn slice_mut<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are stored in standard layout")
}

/// Weights for a whole model; gradients and optimizer moments share this type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub layers: Vec<LayerParams>,
    pub seed: u64,
}

impl Params {
    /// Glorot-uniform weights, zero biases (LSTM forget-gate bias 1).
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self, NnError> {
        let shapes = spec.shapes()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut input = spec.input_shape;
        let mut layers = Vec::with_capacity(spec.layers.len());
        for (layer, &out) in spec.layers.iter().zip(&shapes) {
            let params = match *layer {
                LayerSpec::Conv1d { filters, kernel_width, .. } => {
                    let (fan_in, fan_out) = (kernel_width * input.1, kernel_width * filters);
                    LayerParams::Conv {
                        kernel: glorot((kernel_width, input.1, filters), fan_in, fan_out, &mut rng),
                        bias: Array1::zeros(filters),
                    }
                }
                LayerSpec::Dense { units, .. } => {
                    let fan_in = input.0 * input.1;
                    LayerParams::Dense {
                        weights: glorot((fan_in, units), fan_in, units, &mut rng),
                        bias: Array1::zeros(units),
                    }
                }
                LayerSpec::Lstm { hidden_units, .. } => {
                    LayerParams::Lstm(LstmWeights::glorot(input.1, hidden_units, &mut rng))
                }
                LayerSpec::MaxPool1d { .. } | LayerSpec::Dropout { .. } | LayerSpec::Softmax => LayerParams::None,
            };
            layers.push(params);
            input = out;
        }
        Ok(Self { layers, seed })
    }

    pub fn zeros_like(&self) -> Self {
        Self { layers: self.layers.iter().map(LayerParams::zeros_like).collect(), seed: self.seed }
    }

    /// Every tensor as `(name, values)` in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, &[f64])> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.tensors().into_iter().map(move |(n, t)| (format!("layer{i}.{n}"), t)))
            .collect()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.tensors().into_iter().map(|(_, t)| t)).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(LayerParams::tensors_mut).collect()
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Checks that every tensor has the shape `spec` implies.
    pub fn check_against(&self, spec: &ModelSpec) -> Result<(), NnError> {
        let expected = Params::init(spec, 0)?.zeros_like();
        let ok = self.layers.len() == expected.layers.len()
            && self.tensors().iter().map(|t| t.len()).eq(expected.tensors().iter().map(|t| t.len()))
            && self.layers.iter().zip(&expected.layers).all(|(a, b)| same_dims(a, b));
        if ok {
            Ok(())
        } else {
            Err(NnError::ShapeMismatch("parameters do not match model spec".into()))
        }
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

fn same_dims(a: &LayerParams, b: &LayerParams) -> bool {
    match (a, b) {
        (LayerParams::None, LayerParams::None) => true,
        (LayerParams::Conv { kernel: k1, .. }, LayerParams::Conv { kernel: k2, .. }) => k1.dim() == k2.dim(),
        (LayerParams::Dense { weights: w1, .. }, LayerParams::Dense { weights: w2, .. }) => w1.dim() == w2.dim(),
        (LayerParams::Lstm(a), LayerParams::Lstm(b)) => a.dims() == b.dims(),
        _ => false,
    }
}

pub(crate) fn glorot<Sh, D>(shape: Sh, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> ndarray::Array<f64, D>
where
    Sh: ndarray::ShapeBuilder<Dim = D>,
    D: ndarray::Dimension,
{
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    ndarray::Array::from_shape_simple_fn(shape, || rng.random_range(-limit..limit))
}
