//! Likert instruments, construct scoring, SUS, Cronbach's alpha and response
//! summaries for the analyst study.

mod alpha;
mod export;
mod scoring;

pub use alpha::{alpha_report, cronbach_alpha, item_matrix, AlphaReport, AlphaStats, ConstructAlpha};
pub use export::{export_csv, likert_summary, parse_responses_csv, trait_distributions, ItemDistribution, TraitDistribution};
pub use scoring::{adjusted_response, reverse_score, score_all, score_construct, sus_score, ConstructScore};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SurveyError {
    #[error("response {value} for item {item} is outside 1..={scale_max}")]
    OutOfScale { item: String, value: i64, scale_max: u8 },
    #[error("unknown item {0}")]
    UnknownItem(String),
    #[error("unanswered items: {}", .0.join(", "))]
    IncompleteResponse(Vec<String>),
    #[error("expected {expected} items, got {found}")]
    WrongItemCount { expected: usize, found: usize },
    #[error("total scores have zero variance")]
    ZeroTotalVariance,
    #[error("need at least 2 respondents and 2 items, got {respondents} and {items}")]
    InsufficientData { respondents: usize, items: usize },
    #[error("invalid instrument: {0}")]
    InvalidInstrument(String),
    #[error("response file: {0}")]
    Parse(String),
}

/// What an item measures: a post-interaction construct or a personality trait.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Construct {
    Trust,
    Reliability,
    Usability,
    HonestyHumility,
    Emotionality,
    Extraversion,
    Agreeableness,
    Conscientiousness,
    Openness,
}

impl Construct {
    pub const TRAITS: [Construct; 6] = [
        Construct::HonestyHumility,
        Construct::Emotionality,
        Construct::Extraversion,
        Construct::Agreeableness,
        Construct::Conscientiousness,
        Construct::Openness,
    ];

    pub fn is_trait(self) -> bool {
        Self::TRAITS.contains(&self)
    }

    pub fn label(self) -> &'static str {
        match self {
            Construct::Trust => "Trust",
            Construct::Reliability => "Reliability",
            Construct::Usability => "System Usability",
            Construct::HonestyHumility => "Honesty-Humility",
            Construct::Emotionality => "Emotionality",
            Construct::Extraversion => "Extraversion",
            Construct::Agreeableness => "Agreeableness",
            Construct::Conscientiousness => "Conscientiousness",
            Construct::Openness => "Openness",
        }
    }
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

fn default_scale_max() -> u8 {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikertItem {
    pub id: String,
    pub construct: Construct,
    pub prompt: String,
    #[serde(default)]
    pub reverse_keyed: bool,
    #[serde(default = "default_scale_max")]
    pub scale_max: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyInstrument {
    pub id: String,
    pub title: String,
    pub items: Vec<LikertItem>,
}

impl SurveyInstrument {
    /// Constructs in order of first appearance with their item ids.
    pub fn constructs(&self) -> Vec<(Construct, Vec<&str>)> {
        let mut out: Vec<(Construct, Vec<&str>)> = Vec::new();
        for item in &self.items {
            match out.iter_mut().find(|(c, _)| *c == item.construct) {
                Some((_, ids)) => ids.push(&item.id),
                None => out.push((item.construct, vec![&item.id])),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicField {
    pub id: String,
    pub label: String,
    pub options: Vec<String>,
}

/// Every instrument administered in a session plus the demographics form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentSet {
    pub demographics: Vec<DemographicField>,
    pub instruments: Vec<SurveyInstrument>,
}

const DEFAULT_INSTRUMENTS: &str = include_str!("../../assets/instruments.json");

/// Items per trait in the Mini-IPIP6.
pub const MINI_IPIP6_ITEMS_PER_TRAIT: usize = 4;

impl Default for InstrumentSet {
    fn default() -> Self {
        Self::from_json(DEFAULT_INSTRUMENTS).expect("bundled instrument definition is valid")
    }
}

impl InstrumentSet {
    pub fn from_json(text: &str) -> Result<Self, SurveyError> {
        let set: Self = serde_json::from_str(text).map_err(|e| SurveyError::InvalidInstrument(e.to_string()))?;
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<(), SurveyError> {
        let mut ids = BTreeSet::new();
        for item in self.items() {
            if !ids.insert(item.id.as_str()) {
                return Err(SurveyError::InvalidInstrument(format!("duplicate item id {}", item.id)));
            }
            if item.scale_max < 2 {
                return Err(SurveyError::InvalidInstrument(format!("item {} has scale_max {}", item.id, item.scale_max)));
            }
        }
        let mut fields = BTreeSet::new();
        for field in &self.demographics {
            if !fields.insert(field.id.as_str()) || field.options.is_empty() {
                return Err(SurveyError::InvalidInstrument(format!("demographic field {}", field.id)));
            }
        }
        for t in Construct::TRAITS {
            let n = self.items().filter(|i| i.construct == t).count();
            if n != 0 && n != MINI_IPIP6_ITEMS_PER_TRAIT {
                return Err(SurveyError::InvalidInstrument(format!("trait {t} has {n} items, expected {MINI_IPIP6_ITEMS_PER_TRAIT}")));
            }
        }
        Ok(())
    }

    pub fn items(&self) -> impl Iterator<Item = &LikertItem> {
        self.instruments.iter().flat_map(|i| i.items.iter())
    }

    pub fn item(&self, id: &str) -> Option<&LikertItem> {
        self.items().find(|i| i.id == id)
    }

    pub fn construct_items(&self, construct: Construct) -> Vec<&LikertItem> {
        self.items().filter(|i| i.construct == construct).collect()
    }

    /// Constructs in order of first appearance across instruments.
    pub fn constructs(&self) -> Vec<Construct> {
        let mut out = Vec::new();
        for item in self.items() {
            if !out.contains(&item.construct) {
                out.push(item.construct);
            }
        }
        out
    }

    /// Checks one answer against the instrument definition.
    pub fn validate_answer(&self, item_id: &str, value: i64) -> Result<(), SurveyError> {
        let item = self.item(item_id).ok_or_else(|| SurveyError::UnknownItem(item_id.to_string()))?;
        if value < 1 || value > item.scale_max as i64 {
            return Err(SurveyError::OutOfScale { item: item_id.to_string(), value, scale_max: item.scale_max });
        }
        Ok(())
    }

    /// Checks a demographic answer against the field's options.
    pub fn validate_demographic(&self, field: &str, value: &str) -> Result<(), SurveyError> {
        let def = self
            .demographics
            .iter()
            .find(|f| f.id == field)
            .ok_or_else(|| SurveyError::UnknownItem(field.to_string()))?;
        if def.options.iter().any(|o| o == value) {
            Ok(())
        } else {
            Err(SurveyError::InvalidInstrument(format!("{value:?} is not an option for {field}")))
        }
    }
}

/// One participant's answers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub session_id: String,
    #[serde(default)]
    pub demographics: BTreeMap<String, String>,
    /// Item id → raw response (1..=scale_max).
    #[serde(default)]
    pub answers: BTreeMap<String, u8>,
    #[serde(default)]
    pub started_at: Option<String>,
    #[serde(default)]
    pub completed_at: Option<String>,
}

impl SurveyResponse {
    /// Item ids of `set` that have no answer.
    pub fn missing_items(&self, set: &InstrumentSet) -> Vec<String> {
        set.items().filter(|i| !self.answers.contains_key(&i.id)).map(|i| i.id.clone()).collect()
    }

    pub fn is_complete(&self, set: &InstrumentSet) -> bool {
        self.missing_items(set).is_empty()
    }
}
