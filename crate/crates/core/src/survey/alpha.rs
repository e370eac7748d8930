//! Cronbach's alpha over reverse-adjusted item responses.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{adjusted_response, Construct, InstrumentSet, SurveyError, SurveyResponse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaStats {
    pub n: usize,
    pub k: usize,
    /// Sample variance (n − 1) of each item.
    pub item_variances: Vec<f64>,
    /// Sample variance of respondents' summed scores.
    pub total_variance: f64,
    pub alpha: f64,
}

fn sample_variance(v: ArrayView1<'_, f64>) -> f64 {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// α = k/(k−1) · (1 − Σσ²ᵢ/σ²ₜ) for an n_respondents × k_items matrix.
pub fn cronbach_alpha(matrix: ArrayView2<'_, f64>) -> Result<AlphaStats, SurveyError> {
    let (n, k) = matrix.dim();
    if n < 2 || k < 2 {
        return Err(SurveyError::InsufficientData { respondents: n, items: k });
    }
    let item_variances: Vec<f64> = matrix.axis_iter(Axis(1)).map(sample_variance).collect();
    let totals = matrix.sum_axis(Axis(1));
    let total_variance = sample_variance(totals.view());
    if total_variance == 0.0 {
        return Err(SurveyError::ZeroTotalVariance);
    }
    let kf = k as f64;
    let alpha = kf / (kf - 1.0) * (1.0 - item_variances.iter().sum::<f64>() / total_variance);
    Ok(AlphaStats { n, k, item_variances, total_variance, alpha })
}

/// Reverse-adjusted responses to `construct` from complete responses, one
/// row per respondent, with the session ids in row order.
pub fn item_matrix(
    responses: &[SurveyResponse],
    set: &InstrumentSet,
    construct: Construct,
) -> Result<(Array2<f64>, Vec<String>), SurveyError> {
    let items = set.construct_items(construct);
    let complete: Vec<&SurveyResponse> = responses.iter().filter(|r| r.is_complete(set)).collect();
    let mut m = Array2::zeros((complete.len(), items.len()));
    for (row, r) in complete.iter().enumerate() {
        for (col, item) in items.iter().enumerate() {
            m[[row, col]] = adjusted_response(item, r.answers[&item.id])? as f64;
        }
    }
    Ok((m, complete.iter().map(|r| r.session_id.clone()).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructAlpha {
    pub construct: Construct,
    pub label: String,
    pub n: usize,
    pub stats: Option<AlphaStats>,
    /// Why alpha is absent, when it is.
    pub omitted: Option<String>,
}

/// Alpha for every construct, post-interaction constructs first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub constructs: Vec<ConstructAlpha>,
    pub respondents: usize,
    pub excluded_incomplete: usize,
}

pub fn alpha_report(responses: &[SurveyResponse], set: &InstrumentSet) -> Result<AlphaReport, SurveyError> {
    let mut constructs = set.constructs();
    constructs.sort_by_key(|c| c.is_trait());
    let respondents = responses.iter().filter(|r| r.is_complete(set)).count();
    let mut rows = Vec::new();
    for c in constructs {
        let (m, ids) = item_matrix(responses, set, c)?;
        let (stats, omitted) = match cronbach_alpha(m.view()) {
            Ok(s) => (Some(s), None),
            Err(SurveyError::InsufficientData { respondents, .. }) if respondents < 2 => (None, Some("insufficient n".to_string())),
            Err(SurveyError::InsufficientData { .. }) => (None, Some("fewer than 2 items".to_string())),
            Err(SurveyError::ZeroTotalVariance) => (None, Some("zero total variance".to_string())),
            Err(e) => return Err(e),
        };
        rows.push(ConstructAlpha { construct: c, label: c.label().to_string(), n: ids.len(), stats, omitted });
    }
    Ok(AlphaReport { constructs: rows, respondents, excluded_incomplete: responses.len() - respondents })
}

impl AlphaReport {
    pub fn alpha(&self, construct: Construct) -> Option<f64> {
        self.constructs.iter().find(|c| c.construct == construct)?.stats.as_ref().map(|s| s.alpha)
    }

    /// Text table: construct, item count, alpha.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<20} {:>5} {:>5} {:>16}", "User Experience", "k", "n", "Cronbach's Alpha");
        for c in &self.constructs {
            let k = c.stats.as_ref().map(|s| s.k.to_string()).unwrap_or_else(|| "-".into());
            let value = match (&c.stats, &c.omitted) {
                (Some(s), _) => format!("{:.2}", s.alpha),
                (None, Some(reason)) => format!("({reason})"),
                (None, None) => "-".into(),
            };
            let _ = writeln!(out, "{:<20} {:>5} {:>5} {:>16}", c.label, k, c.n, value);
        }
        if self.excluded_incomplete > 0 {
            let _ = writeln!(out, "{} incomplete response(s) excluded", self.excluded_incomplete);
        }
        out
    }
}
