//! Kernel SHAP: weighted least squares over coalitions with the Shapley kernel.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView1;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_inputs, coalition_values, AttributionVector, BackgroundSet, ExplainError, Model};

/// Widest feature set a coalition mask can hold.
const MAX_MASK_FEATURES: usize = 64;
/// Diagonal added to the normal equations when they are singular.
const RIDGE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelShapConfig {
    /// Coalition budget, excluding the empty and full coalitions.
    pub n_coalitions: usize,
    pub seed: u64,
}

impl Default for KernelShapConfig {
    fn default() -> Self {
        Self { n_coalitions: 2048, seed: 42 }
    }
}

/// (M−1) / (C(M,s)·s·(M−s)).
pub fn shapley_kernel_weight(m: usize, s: usize) -> Result<f64, ExplainError> {
    if s == 0 || s >= m {
        return Err(ExplainError::DegenerateCoalition { size: s, features: m });
    }
    Ok((m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A coalition mask over the explained features with its regression weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coalition {
    pub mask: u64,
    pub weight: f64,
}

impl Coalition {
    pub fn size(&self) -> usize {
        self.mask.count_ones() as usize
    }
}

fn full_mask(m: usize) -> u64 {
    if m == 64 {
        u64::MAX
    } else {
        (1u64 << m) - 1
    }
}

/// Chooses the regression coalitions for `m` features.
///
/// When the budget covers all 2^m − 2 proper coalitions they are enumerated
/// with exact kernel weights. Otherwise coalition sizes are taken in pairs
/// (s, m−s) from the outside in: a size pair is enumerated completely while
/// the budget share its kernel mass deserves can pay for it, and the rest of
/// the budget is spent on random coalitions of the remaining sizes, each drawn
/// together with its complement. Duplicate draws add weight to the existing
/// row.
pub fn plan_coalitions(m: usize, budget: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Coalition>, ExplainError> {
    if m > MAX_MASK_FEATURES {
        return Err(ExplainError::TooManyFeatures(m));
    }
    if m < 2 {
        return Ok(Vec::new());
    }
    let proper = if m >= 63 { u64::MAX } else { (1u64 << m) - 2 };
    if (budget as u64) >= proper {
        return (1..full_mask(m))
            .map(|mask| Ok(Coalition { mask, weight: shapley_kernel_weight(m, mask.count_ones() as usize)? }))
            .collect();
    }
    if budget < m + 2 {
        return Err(ExplainError::InsufficientCoalitions { requested: budget, required: m + 2 });
    }

    let num_sizes = (m - 1).div_ceil(2);
    let num_paired = (m - 1) / 2;
    // Total kernel mass of each size (or size pair), normalised.
    let mut size_weight: Vec<f64> = (1..=num_sizes)
        .map(|s| {
            let w = (m - 1) as f64 / (s as f64 * (m - s) as f64);
            if s <= num_paired {
                2.0 * w
            } else {
                w
            }
        })
        .collect();
    let total: f64 = size_weight.iter().sum();
    size_weight.iter_mut().for_each(|w| *w /= total);

    let mut out: Vec<Coalition> = Vec::new();
    let mut left = budget as f64;
    let mut remaining = size_weight.clone();
    let mut full_sizes = 0;
    for s in 1..=num_sizes {
        let paired = s <= num_paired;
        let members = binomial(m, s) * if paired { 2.0 } else { 1.0 };
        if left * remaining[s - 1] / members < 1.0 - 1e-8 {
            break;
        }
        full_sizes += 1;
        left -= members;
        if remaining[s - 1] < 1.0 {
            let scale = 1.0 - remaining[s - 1];
            remaining.iter_mut().for_each(|w| *w /= scale);
        }
        let w = size_weight[s - 1] / members;
        for_each_subset(m, s, |mask| {
            out.push(Coalition { mask, weight: w });
            if paired {
                out.push(Coalition { mask: !mask & full_mask(m), weight: w });
            }
        });
    }

    if full_sizes < num_sizes {
        let fixed = out.len();
        let mut probs: Vec<f64> = size_weight[full_sizes..].to_vec();
        for (k, p) in probs.iter_mut().enumerate() {
            if full_sizes + k < num_paired {
                *p /= 2.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= sum);

        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut slots = budget.saturating_sub(fixed);
        let mut draws = 0;
        let max_draws = 4 * budget.max(1);
        let mut add = |mask: u64, out: &mut Vec<Coalition>, slots: &mut usize| match index.get(&mask) {
            Some(&i) => out[i].weight += 1.0,
            None => {
                index.insert(mask, out.len());
                out.push(Coalition { mask, weight: 1.0 });
                *slots -= 1;
            }
        };
        while slots > 0 && draws < max_draws {
            draws += 1;
            let u: f64 = rng.random();
            let mut k = 0;
            let mut acc = probs[0];
            while u >= acc && k + 1 < probs.len() {
                k += 1;
                acc += probs[k];
            }
            let s = full_sizes + k + 1;
            let mask = sample(rng, m, s).into_iter().fold(0u64, |acc, j| acc | 1 << j);
            add(mask, &mut out, &mut slots);
            if s <= num_paired && slots > 0 {
                add(!mask & full_mask(m), &mut out, &mut slots);
            }
        }
        // Sampled rows share the kernel mass of the sizes left unenumerated.
        let left_mass: f64 = size_weight[full_sizes..].iter().sum();
        let sampled: f64 = out[fixed..].iter().map(|c| c.weight).sum();
        if sampled > 0.0 {
            out[fixed..].iter_mut().for_each(|c| c.weight *= left_mass / sampled);
        }
    }
    Ok(out)
}

fn for_each_subset(m: usize, s: usize, mut f: impl FnMut(u64)) {
    // Gosper's hack over s-bit masks in ascending order.
    let mut mask: u64 = (1u64 << s) - 1;
    let limit = full_mask(m);
    loop {
        f(mask);
        let c = mask & mask.wrapping_neg();
        let r = mask.wrapping_add(c);
        if r == 0 || r > limit {
            break;
        }
        mask = (((r ^ mask) >> 2) / c) | r;
        if mask > limit {
            break;
        }
    }
}

/// Kernel SHAP for a single output class.
pub fn kernel_shap(
    model: &dyn Model,
    x: ArrayView1<'_, f64>,
    background: &BackgroundSet,
    class: usize,
    config: &KernelShapConfig,
    instance_id: usize,
) -> Result<AttributionVector, ExplainError> {
    if class >= model.num_outputs() {
        return Err(ExplainError::ShapeMismatch(format!("class {class} outside model outputs")));
    }
    Ok(kernel_shap_all(model, x, background, config, instance_id)?.swap_remove(class))
}

/// Kernel SHAP for every output class from one set of coalition evaluations.
///
/// Features whose value in `x` matches every background row cannot change
/// any coalition value; they get φ = 0 and are left out of the regression.
pub fn kernel_shap_all(
    model: &dyn Model,
    x: ArrayView1<'_, f64>,
    background: &BackgroundSet,
    config: &KernelShapConfig,
    instance_id: usize,
) -> Result<Vec<AttributionVector>, ExplainError> {
    check_inputs(model, x, background)?;
    let m_total = x.len();
    let varying: Vec<usize> =
        (0..m_total).filter(|&j| background.rows.column(j).iter().any(|&b| b != x[j])).collect();
    let m = varying.len();
    if m > MAX_MASK_FEATURES {
        return Err(ExplainError::TooManyFeatures(m));
    }

    // One stream per instance: batch and single calls draw identical coalitions.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(instance_id as u64);
    let coalitions = plan_coalitions(m, config.n_coalitions, &mut rng)?;
    let mut masks: Vec<u64> = vec![0, full_mask(m)];
    masks.extend(coalitions.iter().map(|c| c.mask));
    let values = coalition_values(model, x, background, &varying, &masks)?;
    let outputs = model.num_outputs();

    let base: Vec<f64> = (0..outputs).map(|c| values[[0, c]]).collect();
    let fx: Vec<f64> = (0..outputs).map(|c| values[[1, c]]).collect();
    let mut phis = vec![vec![0.0; m_total]; outputs];
    let mut singular = false;

    match m {
        0 => {}
        1 => {
            for c in 0..outputs {
                phis[c][varying[0]] = fx[c] - base[c];
            }
        }
        _ => {
            // Substituting φ_last = Δ − Σ_{j<last} φ_j turns the constrained
            // problem into ordinary WLS on m−1 unknowns.
            let k = m - 1;
            let n = coalitions.len();
            let design = DMatrix::from_fn(n, k, |r, j| {
                let mask = coalitions[r].mask;
                (mask >> j & 1) as f64 - (mask >> k & 1) as f64
            });
            let weights = DVector::from_iterator(n, coalitions.iter().map(|c| c.weight));
            let mut weighted = design.clone();
            for (r, mut row) in weighted.row_iter_mut().enumerate() {
                row *= weights[r];
            }
            let gram = design.transpose() * &weighted;
            let (solver, used_ridge) = match gram.clone().cholesky() {
                Some(ch) => (ch, false),
                None => {
                    let ridged = gram + DMatrix::identity(k, k) * RIDGE;
                    (ridged.cholesky().ok_or(ExplainError::SingularSystem)?, true)
                }
            };
            singular = used_ridge;
            for c in 0..outputs {
                let delta = fx[c] - base[c];
                let y = DVector::from_fn(n, |r, _| {
                    let last = (coalitions[r].mask >> k & 1) as f64;
                    values[[r + 2, c]] - base[c] - last * delta
                });
                let beta = solver.solve(&(weighted.transpose() * y));
                let mut partial = 0.0;
                for j in 0..k {
                    phis[c][varying[j]] = beta[j];
                    partial += beta[j];
                }
                phis[c][varying[k]] = delta - partial;
            }
        }
    }

    Ok(phis
        .into_iter()
        .enumerate()
        .map(|(c, phi)| AttributionVector {
            class_index: c,
            base_value: base[c],
            phi,
            instance_id,
            prediction: fx[c],
            singular,
        })
        .collect())
}
