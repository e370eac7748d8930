//! Likert distributions, trait score distributions and CSV import/export.

use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{score_all, score_construct, Construct, InstrumentSet, SurveyError, SurveyResponse};

/// Counts and percentages per scale point for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDistribution {
    pub item_id: String,
    pub construct: Construct,
    pub n: u64,
    /// `counts[p - 1]` respondents answered scale point `p`.
    pub counts: Vec<u64>,
    pub percentages: Vec<f64>,
}

/// Raw-response distribution of every item over complete responses.
pub fn likert_summary(responses: &[SurveyResponse], set: &InstrumentSet) -> Vec<ItemDistribution> {
    let complete: Vec<&SurveyResponse> = responses.iter().filter(|r| r.is_complete(set)).collect();
    set.items()
        .map(|item| {
            let mut counts = vec![0u64; item.scale_max as usize];
            for r in &complete {
                if let Some(&v) = r.answers.get(&item.id) {
                    if (1..=item.scale_max).contains(&v) {
                        counts[v as usize - 1] += 1;
                    }
                }
            }
            let n: u64 = counts.iter().sum();
            let percentages = counts.iter().map(|&c| if n == 0 { 0.0 } else { 100.0 * c as f64 / n as f64 }).collect();
            ItemDistribution { item_id: item.id.clone(), construct: item.construct, n, counts, percentages }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitDistribution {
    pub construct: Construct,
    pub label: String,
    pub scores: Vec<f64>,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

/// Per-respondent construct means for each personality trait, over complete responses.
pub fn trait_distributions(responses: &[SurveyResponse], set: &InstrumentSet) -> Result<Vec<TraitDistribution>, SurveyError> {
    let complete: Vec<&SurveyResponse> = responses.iter().filter(|r| r.is_complete(set)).collect();
    set.constructs()
        .into_iter()
        .filter(|c| c.is_trait())
        .map(|c| {
            let scores = complete.iter().map(|r| score_construct(r, set, c).map(|s| s.mean)).collect::<Result<Vec<_>, _>>()?;
            let mean = (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64);
            let min = scores.iter().copied().reduce(f64::min);
            let max = scores.iter().copied().reduce(f64::max);
            Ok(TraitDistribution { construct: c, label: c.label().to_string(), scores, mean, min, max })
        })
        .collect()
}

fn score_column(c: Construct) -> String {
    format!("score_{c:?}").to_lowercase()
}

/// One row per response: ids, timestamps, demographics, raw item answers,
/// construct means and the SUS score. Incomplete responses leave scores blank.
pub fn export_csv(responses: &[SurveyResponse], set: &InstrumentSet) -> Result<String, SurveyError> {
    let constructs = set.constructs();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["session_id".into(), "started_at".into(), "completed_at".into()];
    header.extend(set.demographics.iter().map(|f| f.id.clone()));
    header.extend(set.items().map(|i| i.id.clone()));
    header.extend(constructs.iter().map(|&c| score_column(c)));
    header.push("sus".into());
    w.write_record(&header).map_err(|e| SurveyError::Parse(e.to_string()))?;

    for r in responses {
        let mut row: Vec<String> = vec![
            r.session_id.clone(),
            r.started_at.clone().unwrap_or_default(),
            r.completed_at.clone().unwrap_or_default(),
        ];
        row.extend(set.demographics.iter().map(|f| r.demographics.get(&f.id).cloned().unwrap_or_default()));
        row.extend(set.items().map(|i| r.answers.get(&i.id).map(|v| v.to_string()).unwrap_or_default()));
        if r.is_complete(set) {
            let scores = score_all(r, set)?;
            row.extend(scores.iter().map(|s| s.mean.to_string()));
            row.push(scores.iter().find_map(|s| s.sus).map(|v| v.to_string()).unwrap_or_default());
        } else {
            row.extend(std::iter::repeat_n(String::new(), constructs.len() + 1));
        }
        w.write_record(&row).map_err(|e| SurveyError::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| SurveyError::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| SurveyError::Parse(e.to_string()))
}

/// Reads responses from CSV with a header row. Columns named after item ids
/// hold raw answers (blank = unanswered); demographic and `session_id`
/// columns are optional; anything else is ignored.
pub fn parse_responses_csv<R: Read>(reader: R, set: &InstrumentSet) -> Result<Vec<SurveyResponse>, SurveyError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| SurveyError::Parse(e.to_string()))?.clone();
    let mut out = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| SurveyError::Parse(e.to_string()))?;
        let mut r = SurveyResponse { session_id: format!("row-{}", row_no + 1), ..Default::default() };
        for (name, value) in header.iter().zip(record.iter()) {
            if value.is_empty() {
                continue;
            }
            match name {
                "session_id" => r.session_id = value.to_string(),
                "started_at" => r.started_at = Some(value.to_string()),
                "completed_at" => r.completed_at = Some(value.to_string()),
                _ if set.item(name).is_some() => {
                    let v: i64 = value
                        .parse()
                        .map_err(|_| SurveyError::Parse(format!("row {}: {name} = {value:?} is not an integer", row_no + 1)))?;
                    set.validate_answer(name, v)?;
                    r.answers.insert(name.to_string(), v as u8);
                }
                _ if set.demographics.iter().any(|f| f.id == name) => {
                    r.demographics.insert(name.to_string(), value.to_string());
                }
                _ => {}
            }
        }
        out.push(r);
    }
    Ok(out)
}
