//! Reverse keying, construct means and the SUS score.

use serde::{Deserialize, Serialize};

use super::{Construct, InstrumentSet, LikertItem, SurveyError, SurveyResponse};

/// (m + 1) − r.
pub fn reverse_score(r: u8, scale_max: u8) -> Result<u8, SurveyError> {
    if r < 1 || r > scale_max {
        return Err(SurveyError::OutOfScale { item: String::new(), value: r as i64, scale_max });
    }
    Ok(scale_max + 1 - r)
}

/// The response with reverse keying applied when the item requires it.
pub fn adjusted_response(item: &LikertItem, r: u8) -> Result<u8, SurveyError> {
    if r < 1 || r > item.scale_max {
        return Err(SurveyError::OutOfScale { item: item.id.clone(), value: r as i64, scale_max: item.scale_max });
    }
    if item.reverse_keyed {
        reverse_score(r, item.scale_max)
    } else {
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructScore {
    pub construct: Construct,
    /// Mean of reverse-adjusted responses.
    pub mean: f64,
    pub items: usize,
    /// 0–100 SUS score, for the usability construct when it has 10 items.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sus: Option<f64>,
}

/// Mean reverse-adjusted response over the construct's items.
pub fn score_construct(response: &SurveyResponse, set: &InstrumentSet, construct: Construct) -> Result<ConstructScore, SurveyError> {
    let items = set.construct_items(construct);
    if items.is_empty() {
        return Err(SurveyError::InvalidInstrument(format!("no items for {construct}")));
    }
    let missing: Vec<String> = items.iter().filter(|i| !response.answers.contains_key(&i.id)).map(|i| i.id.clone()).collect();
    if !missing.is_empty() {
        return Err(SurveyError::IncompleteResponse(missing));
    }
    let mut sum = 0.0;
    for item in &items {
        sum += adjusted_response(item, response.answers[&item.id])? as f64;
    }
    let sus = if construct == Construct::Usability && items.len() == 10 {
        let raw: Vec<u8> = items.iter().map(|i| response.answers[&i.id]).collect();
        Some(sus_score(&raw)?)
    } else {
        None
    };
    Ok(ConstructScore { construct, mean: sum / items.len() as f64, items: items.len(), sus })
}

/// Scores for every construct in the instrument set.
pub fn score_all(response: &SurveyResponse, set: &InstrumentSet) -> Result<Vec<ConstructScore>, SurveyError> {
    set.constructs().into_iter().map(|c| score_construct(response, set, c)).collect()
}

/// Σ(odd items: r − 1; even items: 5 − r) × 2.5 over the ten raw SUS responses.
pub fn sus_score(responses: &[u8]) -> Result<f64, SurveyError> {
    if responses.len() != 10 {
        return Err(SurveyError::WrongItemCount { expected: 10, found: responses.len() });
    }
    let mut total = 0u32;
    for (k, &r) in responses.iter().enumerate() {
        if !(1..=5).contains(&r) {
            return Err(SurveyError::OutOfScale { item: format!("sus_{:02}", k + 1), value: r as i64, scale_max: 5 });
        }
        total += if k % 2 == 0 { r as u32 - 1 } else { 5 - r as u32 };
    }
    Ok(total as f64 * 2.5)
}
