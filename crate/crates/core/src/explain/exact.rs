//! Exhaustive Shapley values by subset enumeration.

use ndarray::ArrayView1;

use super::{check_inputs, coalition_values, AttributionVector, BackgroundSet, ExplainError, Model};

/// Largest feature count enumerated exhaustively (2^12 coalitions).
pub const MAX_EXACT_FEATURES: usize = 12;

/// φᵢ = Σ_{S⊆F∖{i}} |S|!(M−|S|−1)!/M! · [v(S∪{i}) − v(S)] for one class.
pub fn exact_shap_bruteforce(
    model: &dyn Model,
    x: ArrayView1<'_, f64>,
    background: &BackgroundSet,
    class: usize,
    instance_id: usize,
) -> Result<AttributionVector, ExplainError> {
    if class >= model.num_outputs() {
        return Err(ExplainError::ShapeMismatch(format!("class {class} outside model outputs")));
    }
    Ok(exact_shap_all(model, x, background, instance_id)?.swap_remove(class))
}

/// Exhaustive Shapley values for every output class.
pub fn exact_shap_all(
    model: &dyn Model,
    x: ArrayView1<'_, f64>,
    background: &BackgroundSet,
    instance_id: usize,
) -> Result<Vec<AttributionVector>, ExplainError> {
    check_inputs(model, x, background)?;
    let m = x.len();
    if m > MAX_EXACT_FEATURES {
        return Err(ExplainError::TooManyFeatures(m));
    }
    let features: Vec<usize> = (0..m).collect();
    let masks: Vec<u64> = (0..1u64 << m).collect();
    let v = coalition_values(model, x, background, &features, &masks)?;

    let factorial: Vec<f64> = (0..=m).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    })
    .collect();
    let weight: Vec<f64> = (0..m).map(|s| factorial[s] * factorial[m - s - 1] / factorial[m]).collect();

    let full = masks.len() - 1;
    Ok((0..model.num_outputs())
        .map(|c| {
            let phi = (0..m)
                .map(|i| {
                    let bit = 1usize << i;
                    (0..masks.len())
                        .filter(|s| s & bit == 0)
                        .map(|s| weight[s.count_ones() as usize] * (v[[s | bit, c]] - v[[s, c]]))
                        .sum()
                })
                .collect();
            AttributionVector {
                class_index: c,
                base_value: v[[0, c]],
                phi,
                instance_id,
                prediction: v[[full, c]],
                singular: false,
            }
        })
        .collect())
}
