use serde::{Deserialize, Serialize};

use super::NnError;
use crate::data::{Layout, NUM_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the activation's output.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Same,
    Valid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d { filters: usize, kernel_width: usize, stride: usize, padding: Padding, activation: Activation },
    MaxPool1d { window: usize, stride: usize },
    /// Flattens its (length, channels) input before the affine map.
    Dense { units: usize, activation: Activation },
    Lstm { hidden_units: usize, return_sequences: bool },
    Dropout { rate: f64 },
    Softmax,
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv1d { .. } => "conv1d",
            LayerSpec::MaxPool1d { .. } => "maxpool1d",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Lstm { .. } => "lstm",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Softmax => "softmax",
        }
    }

    /// Output (length, channels) for a given input shape.
    pub fn output_shape(&self, index: usize, (len, ch): (usize, usize)) -> Result<(usize, usize), NnError> {
        let bad = |msg: String| NnError::InvalidSpec(format!("layer {index} ({}): {msg}", self.kind()));
        match *self {
            LayerSpec::Conv1d { filters, kernel_width, stride, padding, .. } => {
                if filters == 0 || kernel_width == 0 || stride == 0 {
                    return Err(bad("filters, kernel_width and stride must be >= 1".into()));
                }
                let (out, _) = conv_geometry(len, kernel_width, stride, padding)
                    .ok_or_else(|| bad(format!("kernel {kernel_width} wider than input {len}")))?;
                Ok((out, filters))
            }
            LayerSpec::MaxPool1d { window, stride } => {
                if window == 0 || stride == 0 {
                    return Err(bad("window and stride must be >= 1".into()));
                }
                if window > len {
                    return Err(bad(format!("window {window} wider than input {len}")));
                }
                Ok(((len - window) / stride + 1, ch))
            }
            LayerSpec::Dense { units, .. } => {
                if units == 0 {
                    return Err(bad("units must be >= 1".into()));
                }
                Ok((1, units))
            }
            LayerSpec::Lstm { hidden_units, return_sequences } => {
                if hidden_units == 0 {
                    return Err(bad("hidden_units must be >= 1".into()));
                }
                Ok((if return_sequences { len } else { 1 }, hidden_units))
            }
            LayerSpec::Dropout { rate } => {
                if !(0.0..1.0).contains(&rate) {
                    return Err(bad(format!("rate {rate} outside [0, 1)")));
                }
                Ok((len, ch))
            }
            LayerSpec::Softmax => Ok((len, ch)),
        }
    }
}

/// Output length and left padding of a 1-D convolution, or `None` when the
/// kernel does not fit.
pub(crate) fn conv_geometry(len: usize, kernel: usize, stride: usize, padding: Padding) -> Option<(usize, usize)> {
    match padding {
        Padding::Valid => (kernel <= len).then(|| ((len - kernel) / stride + 1, 0)),
        Padding::Same => {
            let out = len.div_ceil(stride);
            let needed = ((out - 1) * stride + kernel).saturating_sub(len);
            Some((out, needed / 2))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Cnn,
    Lstm,
}

impl ModelFamily {
    pub fn layout(self) -> Layout {
        match self {
            ModelFamily::Cnn => Layout::Cnn,
            ModelFamily::Lstm => Layout::Lstm,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Cnn => "cnn",
            ModelFamily::Lstm => "lstm",
        }
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" => Ok(ModelFamily::Cnn),
            "lstm" => Ok(ModelFamily::Lstm),
            other => Err(NnError::InvalidSpec(format!("unknown model family `{other}`"))),
        }
    }
}

/// Layer stack plus the per-sample input shape `(length, channels)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub layers: Vec<LayerSpec>,
    pub input_shape: (usize, usize),
    pub output_classes: usize,
}

impl ModelSpec {
    /// Conv1D(64) → MaxPool(2) → Conv1D(128) → MaxPool(2) → Conv1D(64) →
    /// Dense(64, relu) → Dense(5) → softmax, on (41, 1) inputs.
    pub fn reference_cnn() -> Self {
        let conv = |filters| LayerSpec::Conv1d {
            filters,
            kernel_width: 3,
            stride: 1,
            padding: Padding::Same,
            activation: Activation::Relu,
        };
        let pool = LayerSpec::MaxPool1d { window: 2, stride: 2 };
        Self {
            family: ModelFamily::Cnn,
            layers: vec![
                conv(64),
                pool.clone(),
                conv(128),
                pool,
                conv(64),
                LayerSpec::Dense { units: 64, activation: Activation::Relu },
                LayerSpec::Dense { units: 5, activation: Activation::Linear },
                LayerSpec::Softmax,
            ],
            input_shape: (NUM_FEATURES, 1),
            output_classes: 5,
        }
    }

    /// Three stacked LSTM(64) layers each followed by Dropout(0.3), then
    /// Dense(5) → softmax, on (1, 41) inputs.
    pub fn reference_lstm() -> Self {
        let mut layers = Vec::new();
        for i in 0..3 {
            layers.push(LayerSpec::Lstm { hidden_units: 64, return_sequences: i < 2 });
            layers.push(LayerSpec::Dropout { rate: 0.3 });
        }
        layers.push(LayerSpec::Dense { units: 5, activation: Activation::Linear });
        layers.push(LayerSpec::Softmax);
        Self { family: ModelFamily::Lstm, layers, input_shape: (1, NUM_FEATURES), output_classes: 5 }
    }

    pub fn reference(family: ModelFamily) -> Self {
        match family {
            ModelFamily::Cnn => Self::reference_cnn(),
            ModelFamily::Lstm => Self::reference_lstm(),
        }
    }

    /// Per-layer output shapes; fails if any layer cannot accept its input.
    pub fn shapes(&self) -> Result<Vec<(usize, usize)>, NnError> {
        let mut shape = self.input_shape;
        if shape.0 == 0 || shape.1 == 0 {
            return Err(NnError::InvalidSpec("input shape must be non-empty".into()));
        }
        let mut out = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer.output_shape(i, shape)?;
            out.push(shape);
        }
        Ok(out)
    }

    /// Full model invariants: consistent shapes, a final 5-way softmax, and
    /// the family's required layer count.
    pub fn validate(&self) -> Result<(), NnError> {
        let shapes = self.shapes()?;
        if self.output_classes != 5 {
            return Err(NnError::InvalidSpec(format!("output_classes must be 5, got {}", self.output_classes)));
        }
        if self.layers.last() != Some(&LayerSpec::Softmax) || shapes.last() != Some(&(1, self.output_classes)) {
            return Err(NnError::InvalidSpec("final layer must be a 5-way softmax".into()));
        }
        let (kind, expected) = match self.family {
            ModelFamily::Cnn => ("conv1d", 3),
            ModelFamily::Lstm => ("lstm", 3),
        };
        let count = self.layers.iter().filter(|l| l.kind() == kind).count();
        if count != expected {
            return Err(NnError::InvalidSpec(format!(
                "{} family needs exactly {expected} {kind} layers, found {count}",
                self.family.name()
            )));
        }
        if self.input_shape.0 * self.input_shape.1 != NUM_FEATURES {
            return Err(NnError::InvalidSpec(format!("input must carry {NUM_FEATURES} features")));
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.0 * self.input_shape.1
    }
}
