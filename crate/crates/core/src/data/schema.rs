use serde::{Deserialize, Serialize};
use std::fmt;

use super::DataError;

/// Number of connection features in an NSL-KDD record.
pub const NUM_FEATURES: usize = 41;
/// Fields per line: 41 features, attack label, difficulty score.
pub const NUM_FIELDS: usize = 43;

const NSL_KDD_FEATURES: [(&str, FeatureKind); NUM_FEATURES] = [
    ("duration", FeatureKind::Numeric),
    ("protocol_type", FeatureKind::Categorical),
    ("service", FeatureKind::Categorical),
    ("flag", FeatureKind::Categorical),
    ("src_bytes", FeatureKind::Numeric),
    ("dst_bytes", FeatureKind::Numeric),
    ("land", FeatureKind::Numeric),
    ("wrong_fragment", FeatureKind::Numeric),
    ("urgent", FeatureKind::Numeric),
    ("hot", FeatureKind::Numeric),
    ("num_failed_logins", FeatureKind::Numeric),
    ("logged_in", FeatureKind::Numeric),
    ("num_compromised", FeatureKind::Numeric),
    ("root_shell", FeatureKind::Numeric),
    ("su_attempted", FeatureKind::Numeric),
    ("num_root", FeatureKind::Numeric),
    ("num_file_creations", FeatureKind::Numeric),
    ("num_shells", FeatureKind::Numeric),
    ("num_access_files", FeatureKind::Numeric),
    ("num_outbound_cmds", FeatureKind::Numeric),
    ("is_host_login", FeatureKind::Numeric),
    ("is_guest_login", FeatureKind::Numeric),
    ("count", FeatureKind::Numeric),
    ("srv_count", FeatureKind::Numeric),
    ("serror_rate", FeatureKind::Numeric),
    ("srv_serror_rate", FeatureKind::Numeric),
    ("rerror_rate", FeatureKind::Numeric),
    ("srv_rerror_rate", FeatureKind::Numeric),
    ("same_srv_rate", FeatureKind::Numeric),
    ("diff_srv_rate", FeatureKind::Numeric),
    ("srv_diff_host_rate", FeatureKind::Numeric),
    ("dst_host_count", FeatureKind::Numeric),
    ("dst_host_srv_count", FeatureKind::Numeric),
    ("dst_host_same_srv_rate", FeatureKind::Numeric),
    ("dst_host_diff_srv_rate", FeatureKind::Numeric),
    ("dst_host_same_src_port_rate", FeatureKind::Numeric),
    ("dst_host_srv_diff_host_rate", FeatureKind::Numeric),
    ("dst_host_serror_rate", FeatureKind::Numeric),
    ("dst_host_srv_serror_rate", FeatureKind::Numeric),
    ("dst_host_rerror_rate", FeatureKind::Numeric),
    ("dst_host_srv_rerror_rate", FeatureKind::Numeric),
];

/// Names of the 41 features in file order.
pub fn feature_names() -> Vec<&'static str> {
    NSL_KDD_FEATURES.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FeatureKind,
}

/// Column layout of an NSL-KDD file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureDef>,
    pub label_position: usize,
    pub difficulty_position: usize,
}

impl FeatureSchema {
    pub fn nsl_kdd() -> Self {
        Self {
            features: NSL_KDD_FEATURES
                .iter()
                .map(|(name, kind)| FeatureDef { name: (*name).to_string(), kind: *kind })
                .collect(),
            label_position: NUM_FEATURES,
            difficulty_position: NUM_FEATURES + 1,
        }
    }

    /// Checks the 41-feature / 3-categorical / unique-name invariants.
    pub fn validate(&self) -> Result<(), DataError> {
        if self.features.len() != NUM_FEATURES {
            return Err(DataError::InvalidSchema(format!(
                "expected {NUM_FEATURES} features, found {}",
                self.features.len()
            )));
        }
        let mut names: Vec<&str> = self.features.iter().map(|f| f.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(DataError::InvalidSchema("duplicate feature name".into()));
        }
        let mut categorical: Vec<&str> = self.categorical_indices().map(|i| self.features[i].name.as_str()).collect();
        categorical.sort_unstable();
        if categorical != ["flag", "protocol_type", "service"] {
            return Err(DataError::InvalidSchema(format!(
                "categorical features must be protocol_type, service, flag; found {categorical:?}"
            )));
        }
        Ok(())
    }

    pub fn categorical_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FeatureKind::Categorical)
            .map(|(i, _)| i)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }
}

/// Five-way attack family. Integer codes are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttackClass {
    DoS = 0,
    Probe = 1,
    R2L = 2,
    U2R = 3,
    Normal = 4,
}

impl AttackClass {
    pub const COUNT: usize = 5;
    pub const ALL: [AttackClass; 5] =
        [AttackClass::DoS, AttackClass::Probe, AttackClass::R2L, AttackClass::U2R, AttackClass::Normal];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackClass::DoS => "DoS",
            AttackClass::Probe => "Probe",
            AttackClass::R2L => "R2L",
            AttackClass::U2R => "U2R",
            AttackClass::Normal => "Normal",
        }
    }
}

impl fmt::Display for AttackClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps one of the 23 training labels onto its attack family.
pub fn map_attack_label(label: &str) -> Result<AttackClass, DataError> {
    use AttackClass::*;
    let class = match label {
        "back" | "land" | "neptune" | "pod" | "smurf" | "teardrop" => DoS,
        "ipsweep" | "nmap" | "portsweep" | "satan" => Probe,
        "ftp_write" | "guess_passwd" | "imap" | "multihop" | "phf" | "spy" | "warezclient"
        | "warezmaster" => R2L,
        "buffer_overflow" | "loadmodule" | "perl" | "rootkit" => U2R,
        "normal" => Normal,
        other => return Err(DataError::UnknownAttackLabel(other.to_string())),
    };
    Ok(class)
}
