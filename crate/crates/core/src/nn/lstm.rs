//! Long short-term memory cell and layer with backpropagation through time.
//!
//! Gates for input row `x` and previous state `(h, c)`:
//!
//! ```text
//! f = σ(x W_f + h U_f + b_f)    forget
//! i = σ(x W_i + h U_i + b_i)    input
//! o = σ(x W_o + h U_o + b_o)    output
//! g = tanh(x W_c + h U_c + b_c) candidate memory
//! c' = f ⊙ c + i ⊙ g
//! h' = o ⊙ tanh(c')
//! ```

use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, Axis};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::params::{glorot, slice, slice_mut};
use super::spec::sigmoid;
use super::NnError;

/// Input weights `w_*` are (input_dim, hidden); recurrent weights `u_*` are
/// (hidden, hidden).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmWeights {
    pub w_f: Array2<f64>,
    pub w_i: Array2<f64>,
    pub w_o: Array2<f64>,
    pub w_c: Array2<f64>,
    pub u_f: Array2<f64>,
    pub u_i: Array2<f64>,
    pub u_o: Array2<f64>,
    pub u_c: Array2<f64>,
    pub b_f: Array1<f64>,
    pub b_i: Array1<f64>,
    pub b_o: Array1<f64>,
    pub b_c: Array1<f64>,
}

impl LstmWeights {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        let w = || Array2::zeros((input_dim, hidden));
        let u = || Array2::zeros((hidden, hidden));
        let b = || Array1::zeros(hidden);
        Self {
            w_f: w(),
            w_i: w(),
            w_o: w(),
            w_c: w(),
            u_f: u(),
            u_i: u(),
            u_o: u(),
            u_c: u(),
            b_f: b(),
            b_i: b(),
            b_o: b(),
            b_c: b(),
        }
    }

    pub(crate) fn glorot(input_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut w = Self::zeros(input_dim, hidden);
        for m in [&mut w.w_f, &mut w.w_i, &mut w.w_o, &mut w.w_c] {
            *m = glorot((input_dim, hidden), input_dim, hidden, rng);
        }
        for m in [&mut w.u_f, &mut w.u_i, &mut w.u_o, &mut w.u_c] {
            *m = glorot((hidden, hidden), hidden, hidden, rng);
        }
        w.b_f.fill(1.0);
        w
    }

    pub fn input_dim(&self) -> usize {
        self.w_f.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w_f.ncols()
    }

    pub(crate) fn dims(&self) -> (usize, usize) {
        (self.input_dim(), self.hidden())
    }

    pub(crate) fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden())
    }

    pub(crate) fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("w_f", slice(&self.w_f)),
            ("w_i", slice(&self.w_i)),
            ("w_o", slice(&self.w_o)),
            ("w_c", slice(&self.w_c)),
            ("u_f", slice(&self.u_f)),
            ("u_i", slice(&self.u_i)),
            ("u_o", slice(&self.u_o)),
            ("u_c", slice(&self.u_c)),
            ("b_f", slice(&self.b_f)),
            ("b_i", slice(&self.b_i)),
            ("b_o", slice(&self.b_o)),
            ("b_c", slice(&self.b_c)),
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            slice_mut(&mut self.w_f),
            slice_mut(&mut self.w_i),
            slice_mut(&mut self.w_o),
            slice_mut(&mut self.w_c),
            slice_mut(&mut self.u_f),
            slice_mut(&mut self.u_i),
            slice_mut(&mut self.u_o),
            slice_mut(&mut self.u_c),
            slice_mut(&mut self.b_f),
            slice_mut(&mut self.b_i),
            slice_mut(&mut self.b_o),
            slice_mut(&mut self.b_c),
        ]
    }

    fn check(&self) -> Result<(), NnError> {
        let (d, h) = self.dims();
        let ok = [&self.w_i, &self.w_o, &self.w_c].iter().all(|m| m.dim() == (d, h))
            && [&self.u_f, &self.u_i, &self.u_o, &self.u_c].iter().all(|m| m.dim() == (h, h))
            && [&self.b_f, &self.b_i, &self.b_o, &self.b_c].iter().all(|b| b.len() == h);
        if ok {
            Ok(())
        } else {
            Err(NnError::ShapeMismatch("inconsistent LSTM weight shapes".into()))
        }
    }
}

/// Hidden and memory-cell vectors of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Array1<f64>,
    pub c: Array1<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: Array1::zeros(hidden), c: Array1::zeros(hidden) }
    }
}

/// Advances one sequence by one time step.
pub fn lstm_step(x: ArrayView1<'_, f64>, state: &LstmState, w: &LstmWeights) -> Result<LstmState, NnError> {
    w.check()?;
    let (d, h) = w.dims();
    if x.len() != d || state.h.len() != h || state.c.len() != h {
        return Err(NnError::ShapeMismatch(format!(
            "lstm_step expects x of {d} and state of {h}, got x={} h={} c={}",
            x.len(),
            state.h.len(),
            state.c.len()
        )));
    }
    let step = step_batch(
        x.insert_axis(Axis(0)),
        state.h.view().insert_axis(Axis(0)),
        state.c.view().insert_axis(Axis(0)),
        w,
    );
    Ok(LstmState { h: step.h.row(0).to_owned(), c: step.c.row(0).to_owned() })
}

struct StepCache {
    f: Array2<f64>,
    i: Array2<f64>,
    o: Array2<f64>,
    g: Array2<f64>,
    c: Array2<f64>,
    tanh_c: Array2<f64>,
    h: Array2<f64>,
}

fn step_batch(x: ArrayView2<'_, f64>, h: ArrayView2<'_, f64>, c: ArrayView2<'_, f64>, w: &LstmWeights) -> StepCache {
    let gate = |wx: &Array2<f64>, uh: &Array2<f64>, b: &Array1<f64>| x.dot(wx) + h.dot(uh) + b;
    let f = gate(&w.w_f, &w.u_f, &w.b_f).mapv_into(sigmoid);
    let i = gate(&w.w_i, &w.u_i, &w.b_i).mapv_into(sigmoid);
    let o = gate(&w.w_o, &w.u_o, &w.b_o).mapv_into(sigmoid);
    let g = gate(&w.w_c, &w.u_c, &w.b_c).mapv_into(f64::tanh);
    let c_new = &f * &c + &i * &g;
    let tanh_c = c_new.mapv(f64::tanh);
    let h_new = &o * &tanh_c;
    StepCache { f, i, o, g, c: c_new, tanh_c, h: h_new }
}

pub(crate) struct LstmCache {
    inputs: Array3<f64>,
    steps: Vec<StepCache>,
    return_sequences: bool,
}

/// Runs a (batch, time, features) tensor through the layer from a zero state.
pub(crate) fn forward(
    input: ArrayView3<'_, f64>,
    w: &LstmWeights,
    return_sequences: bool,
) -> Result<(Array3<f64>, LstmCache), NnError> {
    w.check()?;
    let (n, t_len, d) = input.dim();
    let hidden = w.hidden();
    if d != w.input_dim() {
        return Err(NnError::ShapeMismatch(format!("lstm expects {} features, got {d}", w.input_dim())));
    }
    let mut h = Array2::<f64>::zeros((n, hidden));
    let mut c = Array2::<f64>::zeros((n, hidden));
    let mut steps = Vec::with_capacity(t_len);
    let mut out = Array3::<f64>::zeros((n, if return_sequences { t_len } else { 1 }, hidden));
    for t in 0..t_len {
        let step = step_batch(input.slice(s![.., t, ..]), h.view(), c.view(), w);
        h.assign(&step.h);
        c.assign(&step.c);
        if return_sequences {
            out.slice_mut(s![.., t, ..]).assign(&step.h);
        }
        steps.push(step);
    }
    if !return_sequences {
        out.slice_mut(s![.., 0, ..]).assign(&h);
    }
    Ok((out, LstmCache { inputs: input.to_owned(), steps, return_sequences }))
}

/// Backpropagation through time. Returns the input gradient.
pub(crate) fn backward(
    d_out: ArrayView3<'_, f64>,
    cache: &LstmCache,
    w: &LstmWeights,
    grads: &mut LstmWeights,
) -> Array3<f64> {
    let (n, t_len, d) = cache.inputs.dim();
    let hidden = w.hidden();
    let mut d_input = Array3::<f64>::zeros((n, t_len, d));
    let mut dh_next = Array2::<f64>::zeros((n, hidden));
    let mut dc_next = Array2::<f64>::zeros((n, hidden));
    let zeros = Array2::<f64>::zeros((n, hidden));

    for t in (0..t_len).rev() {
        let step = &cache.steps[t];
        let (h_prev, c_prev) = if t == 0 {
            (zeros.view(), zeros.view())
        } else {
            (cache.steps[t - 1].h.view(), cache.steps[t - 1].c.view())
        };
        let mut dh = dh_next.clone();
        if cache.return_sequences {
            dh += &d_out.slice(s![.., t, ..]);
        } else if t == t_len - 1 {
            dh += &d_out.slice(s![.., 0, ..]);
        }
        let d_o = &dh * &step.tanh_c;
        let dc = &dh * &step.o * &step.tanh_c.mapv(|v| 1.0 - v * v) + &dc_next;
        let d_f = &dc * &c_prev;
        let d_i = &dc * &step.g;
        let d_g = &dc * &step.i;
        dc_next = &dc * &step.f;

        let da_f = d_f * &step.f.mapv(|v| v * (1.0 - v));
        let da_i = d_i * &step.i.mapv(|v| v * (1.0 - v));
        let da_o = d_o * &step.o.mapv(|v| v * (1.0 - v));
        let da_g = d_g * &step.g.mapv(|v| 1.0 - v * v);

        let x_t = cache.inputs.slice(s![.., t, ..]);
        let mut dx = d_input.slice_mut(s![.., t, ..]);
        dh_next.fill(0.0);
        for (da, wx, uh, gw, gu, gb) in [
            (&da_f, &w.w_f, &w.u_f, &mut grads.w_f, &mut grads.u_f, &mut grads.b_f),
            (&da_i, &w.w_i, &w.u_i, &mut grads.w_i, &mut grads.u_i, &mut grads.b_i),
            (&da_o, &w.w_o, &w.u_o, &mut grads.w_o, &mut grads.u_o, &mut grads.b_o),
            (&da_g, &w.w_c, &w.u_c, &mut grads.w_c, &mut grads.u_c, &mut grads.b_c),
        ] {
            *gw += &x_t.t().dot(da);
            *gu += &h_prev.t().dot(da);
            *gb += &da.sum_axis(Axis(0));
            dx += &da.dot(&wx.t());
            dh_next += &da.dot(&uh.t());
        }
    }
    d_input
}
