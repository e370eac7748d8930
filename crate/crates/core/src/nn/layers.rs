//! Batched layer kernels over (batch, length, channels) tensors.

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis, Zip};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::spec::{conv_geometry, Activation, Padding};
use super::NnError;

/// Single-sequence 1-D cross-correlation: `input` is (length, in_channels),
/// `kernel` is (width, in_channels, filters); returns (out_length, filters).
pub fn conv1d_forward(
    input: ArrayView2<'_, f64>,
    kernel: ArrayView3<'_, f64>,
    bias: ArrayView1<'_, f64>,
    stride: usize,
    padding: Padding,
) -> Result<Array2<f64>, NnError> {
    let (len, ch) = input.dim();
    let batch = input.into_shape_with_order((1, len, ch)).expect("contiguous view");
    let (pre, _, out_len) = conv_pre_activation(batch, kernel, bias, stride, padding)?;
    Ok(pre.into_shape_with_order((out_len, kernel.dim().2)).expect("element count preserved"))
}

pub(crate) struct ConvCache {
    cols: Array2<f64>,
    output: Array2<f64>,
    in_shape: (usize, usize, usize),
    out_len: usize,
    left_pad: usize,
}

/// im2col rows: one row per (sample, output position), `width * channels` wide.
fn im2col(x: ArrayView3<'_, f64>, width: usize, stride: usize, left_pad: usize, out_len: usize) -> Array2<f64> {
    let (n, len, ch) = x.dim();
    let x = x.as_standard_layout();
    let src = x.as_slice().expect("standard layout");
    let row_len = width * ch;
    let mut cols = Array2::<f64>::zeros((n * out_len, row_len));
    let dst = cols.as_slice_mut().expect("fresh array");
    for s in 0..n {
        let sample = &src[s * len * ch..(s + 1) * len * ch];
        for t in 0..out_len {
            // Copy the in-bounds part of the window; padding stays zero.
            let start = (t * stride) as isize - left_pad as isize;
            let lo = start.max(0) as usize;
            let hi = ((start + width as isize).max(0) as usize).min(len);
            if lo >= hi {
                continue;
            }
            let offset = (lo as isize - start) as usize * ch;
            let row = &mut dst[(s * out_len + t) * row_len..(s * out_len + t + 1) * row_len];
            row[offset..offset + (hi - lo) * ch].copy_from_slice(&sample[lo * ch..hi * ch]);
        }
    }
    cols
}

#[allow(clippy::type_complexity)]
fn conv_pre_activation(
    x: ArrayView3<'_, f64>,
    kernel: ArrayView3<'_, f64>,
    bias: ArrayView1<'_, f64>,
    stride: usize,
    padding: Padding,
) -> Result<(Array2<f64>, (Array2<f64>, usize), usize), NnError> {
    let (_, len, ch) = x.dim();
    let (width, k_ch, filters) = kernel.dim();
    if k_ch != ch || bias.len() != filters || stride == 0 {
        return Err(NnError::ShapeMismatch(format!(
            "conv1d: input channels {ch}, kernel {:?}, bias {}, stride {stride}",
            kernel.dim(),
            bias.len()
        )));
    }
    let (out_len, left_pad) = conv_geometry(len, width, stride, padding)
        .ok_or_else(|| NnError::ShapeMismatch(format!("conv1d: kernel {width} wider than input {len}")))?;
    let cols = im2col(x, width, stride, left_pad, out_len);
    let w2 = kernel.to_shape((width * ch, filters)).expect("kernel reshape");
    let mut pre = Array2::<f64>::zeros((cols.nrows(), filters));
    pre.assign(&bias);
    ndarray::linalg::general_mat_mul(1.0, &cols, &w2, 1.0, &mut pre);
    Ok((pre, (cols, left_pad), out_len))
}

pub(crate) fn conv_forward(
    x: ArrayView3<'_, f64>,
    kernel: &Array3<f64>,
    bias: &Array1<f64>,
    stride: usize,
    padding: Padding,
    activation: Activation,
    keep_cache: bool,
) -> Result<(Array3<f64>, ConvCache), NnError> {
    let (pre, (cols, left_pad), out_len) = conv_pre_activation(x, kernel.view(), bias.view(), stride, padding)?;
    let output = pre.mapv_into(|v| activation.apply(v));
    let shape = (x.dim().0, out_len, kernel.dim().2);
    let (out, cols, output) = if keep_cache {
        (output.to_shape(shape).expect("reshape").to_owned(), cols, output)
    } else {
        (output.into_shape_with_order(shape).expect("reshape"), Array2::zeros((0, 0)), Array2::zeros((0, 0)))
    };
    Ok((out, ConvCache { cols, output, in_shape: x.dim(), out_len, left_pad }))
}

pub(crate) fn conv_backward(
    d_out: ArrayView3<'_, f64>,
    cache: &ConvCache,
    kernel: &Array3<f64>,
    stride: usize,
    activation: Activation,
    d_kernel: &mut Array3<f64>,
    d_bias: &mut Array1<f64>,
) -> Array3<f64> {
    let (n, len, ch) = cache.in_shape;
    let (width, _, filters) = kernel.dim();
    let mut d_pre = d_out.to_shape((n * cache.out_len, filters)).expect("reshape").to_owned();
    Zip::from(&mut d_pre).and(&cache.output).for_each(|d, &y| *d *= activation.derivative_from_output(y));

    let dw = cache.cols.t().dot(&d_pre);
    *d_kernel += &dw.to_shape((width, ch, filters)).expect("reshape");
    *d_bias += &d_pre.sum_axis(Axis(0));

    let w2 = kernel.to_shape((width * ch, filters)).expect("reshape");
    let d_cols = d_pre.dot(&w2.t());
    let mut d_x = Array3::<f64>::zeros((n, len, ch));
    for s in 0..n {
        for t in 0..cache.out_len {
            let row = d_cols.row(s * cache.out_len + t);
            for k in 0..width {
                let pos = (t * stride + k) as isize - cache.left_pad as isize;
                if pos < 0 || pos as usize >= len {
                    continue;
                }
                for c in 0..ch {
                    d_x[[s, pos as usize, c]] += row[k * ch + c];
                }
            }
        }
    }
    d_x
}

pub(crate) struct PoolCache {
    argmax: Array3<usize>,
    in_shape: (usize, usize, usize),
}

/// Valid max pooling along the length axis; ties resolve to the first position.
pub(crate) fn maxpool_forward(x: ArrayView3<'_, f64>, window: usize, stride: usize, keep_cache: bool) -> (Array3<f64>, PoolCache) {
    let (n, len, ch) = x.dim();
    let out_len = (len - window) / stride + 1;
    let x = x.as_standard_layout();
    let src = x.as_slice().expect("standard layout");
    let mut out = Array3::<f64>::zeros((n, out_len, ch));
    let mut argmax = Array3::<usize>::zeros(if keep_cache { (n, out_len, ch) } else { (0, 0, 0) });
    let dst = out.as_slice_mut().expect("fresh array");
    for s in 0..n {
        for t in 0..out_len {
            let start = t * stride;
            let base = (s * len + start) * ch;
            let row = &mut dst[(s * out_len + t) * ch..(s * out_len + t + 1) * ch];
            row.copy_from_slice(&src[base..base + ch]);
            if keep_cache {
                argmax.slice_mut(ndarray::s![s, t, ..]).fill(start);
            }
            for p in 1..window {
                let cand = &src[base + p * ch..base + (p + 1) * ch];
                for (c, (best, &v)) in row.iter_mut().zip(cand).enumerate() {
                    if v > *best {
                        *best = v;
                        if keep_cache {
                            argmax[[s, t, c]] = start + p;
                        }
                    }
                }
            }
        }
    }
    (out, PoolCache { argmax, in_shape: (n, len, ch) })
}

pub(crate) fn maxpool_backward(d_out: ArrayView3<'_, f64>, cache: &PoolCache) -> Array3<f64> {
    let mut d_x = Array3::<f64>::zeros(cache.in_shape);
    for ((s, t, c), &g) in d_out.indexed_iter() {
        let p = cache.argmax[[s, t, c]];
        d_x[[s, p, c]] += g;
    }
    d_x
}

pub(crate) struct DenseCache {
    input: Array2<f64>,
    output: Array2<f64>,
    in_shape: (usize, usize, usize),
}

pub(crate) fn dense_forward(
    x: ArrayView3<'_, f64>,
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    activation: Activation,
    keep_cache: bool,
) -> Result<(Array3<f64>, DenseCache), NnError> {
    let (n, len, ch) = x.dim();
    if weights.nrows() != len * ch || bias.len() != weights.ncols() {
        return Err(NnError::ShapeMismatch(format!(
            "dense: input {} features, weights {:?}, bias {}",
            len * ch,
            weights.dim(),
            bias.len()
        )));
    }
    let input = x.to_shape((n, len * ch)).expect("reshape");
    let output = (input.dot(weights) + bias).mapv_into(|v| activation.apply(v));
    let shape = (n, 1, weights.ncols());
    if !keep_cache {
        let out = output.into_shape_with_order(shape).expect("reshape");
        return Ok((out, DenseCache { input: Array2::zeros((0, 0)), output: Array2::zeros((0, 0)), in_shape: (n, len, ch) }));
    }
    let out = output.to_shape(shape).expect("reshape").to_owned();
    Ok((out, DenseCache { input: input.into_owned(), output, in_shape: (n, len, ch) }))
}

pub(crate) fn dense_backward(
    d_out: ArrayView3<'_, f64>,
    cache: &DenseCache,
    weights: &Array2<f64>,
    activation: Activation,
    d_weights: &mut Array2<f64>,
    d_bias: &mut Array1<f64>,
) -> Array3<f64> {
    let n = cache.in_shape.0;
    let mut d_pre = d_out.to_shape((n, weights.ncols())).expect("reshape").to_owned();
    Zip::from(&mut d_pre).and(&cache.output).for_each(|d, &y| *d *= activation.derivative_from_output(y));
    *d_weights += &cache.input.t().dot(&d_pre);
    *d_bias += &d_pre.sum_axis(Axis(0));
    d_pre.dot(&weights.t()).into_shape_with_order(cache.in_shape).expect("reshape")
}

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)`.
pub(crate) fn dropout_mask(shape: (usize, usize, usize), rate: f64, rng: &mut ChaCha8Rng) -> Array3<f64> {
    let keep = 1.0 - rate;
    Array3::from_shape_simple_fn(shape, || if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
}

/// Row-wise softmax over the channel axis with max subtraction.
pub(crate) fn softmax(x: ArrayView3<'_, f64>) -> Array3<f64> {
    let mut out = x.to_owned();
    for mut lane in out.lanes_mut(Axis(2)) {
        let max = lane.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        lane.mapv_inplace(|v| (v - max).exp());
        let sum = lane.sum();
        lane.mapv_inplace(|v| v / sum);
    }
    out
}

/// Softmax Jacobian-vector product: `p ⊙ (dy − Σ dy ⊙ p)`.
pub(crate) fn softmax_backward(d_out: ArrayView3<'_, f64>, probs: &Array3<f64>) -> Array3<f64> {
    let mut d_x = d_out.to_owned();
    for (mut d, p) in d_x.lanes_mut(Axis(2)).into_iter().zip(probs.lanes(Axis(2))) {
        let dot: f64 = d.iter().zip(p.iter()).map(|(a, b)| a * b).sum();
        Zip::from(&mut d).and(&p).for_each(|dv, &pv| *dv = pv * (*dv - dot));
    }
    d_x
}
