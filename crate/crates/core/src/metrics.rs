//! Multiclass evaluation: confusion matrix, per-class TP/FP/FN/TN,
//! precision/recall/F1 with macro and weighted averages, and one-vs-rest ROC.

use std::fmt::Write as _;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::AttackClass;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("label {label} outside 0..{classes}")]
    InvalidLabel { label: usize, classes: usize },
    #[error("ROC for class {0} is undefined: samples contain only one side of the split")]
    SingleClassOnly(usize),
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion_matrix(truth: &[usize], pred: &[usize], classes: usize) -> Result<ConfusionMatrix, MetricsError> {
    if truth.len() != pred.len() {
        return Err(MetricsError::LengthMismatch { truth: truth.len(), pred: pred.len() });
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (&t, &p) in truth.iter().zip(pred) {
        for label in [t, p] {
            if label >= classes {
                return Err(MetricsError::InvalidLabel { label, classes });
            }
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

pub fn per_class_counts(cm: &ConfusionMatrix) -> Vec<ClassCounts> {
    let total = cm.total();
    (0..cm.classes())
        .map(|c| {
            let tp = cm.counts[c][c];
            let row: u64 = cm.counts[c].iter().sum();
            let col: u64 = cm.counts.iter().map(|r| r[c]).sum();
            let fp = col - tp;
            let fn_ = row - tp;
            ClassCounts { tp, fp, fn_, tn: total - tp - fp - fn_ }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when any of the three ratios was 0/0 and reported as 0.
    pub zero_division: bool,
}

fn ratio(num: u64, den: u64, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 per class; undefined ratios are 0 and flagged.
pub fn class_report(counts: &[ClassCounts]) -> Vec<ClassMetrics> {
    counts
        .iter()
        .map(|c| {
            let mut zero_division = false;
            let precision = ratio(c.tp, c.tp + c.fp, &mut zero_division);
            let recall = ratio(c.tp, c.tp + c.fn_, &mut zero_division);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                zero_division = true;
                0.0
            };
            ClassMetrics { precision, recall, f1, support: c.tp + c.fn_, zero_division }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub total: u64,
}

/// Accuracy plus unweighted (macro) and support-weighted class means.
pub fn aggregate(report: &[ClassMetrics], cm: &ConfusionMatrix) -> AggregateReport {
    let total = cm.total();
    let k = report.len().max(1) as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| report.iter().map(f).sum::<f64>() / k;
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        if total == 0 {
            0.0
        } else {
            report.iter().map(|m| f(m) * m.support as f64).sum::<f64>() / total as f64
        }
    };
    AggregateReport {
        accuracy: if total == 0 { 0.0 } else { cm.trace() as f64 / total as f64 },
        macro_avg: Averages { precision: mean(|m| m.precision), recall: mean(|m| m.recall), f1: mean(|m| m.f1) },
        weighted_avg: Averages {
            precision: weighted(|m| m.precision),
            recall: weighted(|m| m.recall),
            f1: weighted(|m| m.f1),
        },
        total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Score threshold (`score >= threshold` is positive); `None` for the origin.
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// ROC from (score, is_positive) pairs, sweeping unique thresholds downward.
fn roc_from_pairs(mut pairs: Vec<(f64, bool)>, class: usize) -> Result<RocCurve, MetricsError> {
    let positives = pairs.iter().filter(|p| p.1).count();
    let negatives = pairs.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClassOnly(class));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0, threshold: None }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < pairs.len() {
        let threshold = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == threshold {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold: Some(threshold),
        });
    }
    Ok(RocCurve { points })
}

/// One-vs-rest ROC for `class` using column `class` of `scores`.
pub fn roc_curve(scores: ArrayView2<'_, f64>, truth: &[usize], class: usize) -> Result<RocCurve, MetricsError> {
    if scores.nrows() != truth.len() {
        return Err(MetricsError::LengthMismatch { truth: truth.len(), pred: scores.nrows() });
    }
    if class >= scores.ncols() {
        return Err(MetricsError::InvalidLabel { label: class, classes: scores.ncols() });
    }
    let pairs = scores.column(class).iter().zip(truth).map(|(&s, &t)| (s, t == class)).collect();
    roc_from_pairs(pairs, class)
}

/// Micro-averaged ROC: every (sample, class) score is one binary decision.
pub fn roc_curve_micro(scores: ArrayView2<'_, f64>, truth: &[usize]) -> Result<RocCurve, MetricsError> {
    if scores.nrows() != truth.len() {
        return Err(MetricsError::LengthMismatch { truth: truth.len(), pred: scores.nrows() });
    }
    let pairs = scores
        .rows()
        .into_iter()
        .zip(truth)
        .flat_map(|(row, &t)| row.iter().enumerate().map(move |(c, &s)| (s, c == t)).collect::<Vec<_>>())
        .collect();
    roc_from_pairs(pairs, usize::MAX)
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve.points.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum()
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr,threshold\n");
        for p in &self.points {
            let threshold = p.threshold.map(|t| t.to_string()).unwrap_or_else(|| "inf".into());
            let _ = writeln!(out, "{},{},{}", p.fpr, p.tpr, threshold);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub class: String,
    #[serde(flatten)]
    pub metrics: ClassMetrics,
    #[serde(flatten)]
    pub counts: ClassCounts,
    pub auc: Option<f64>,
}

/// Everything `evaluate` reports for one model on one partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model: String,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassEntry>,
    pub aggregate: AggregateReport,
    pub micro_auc: Option<f64>,
}

/// Builds the full report for five-class predictions and their probabilities.
pub fn evaluate(model: &str, truth: &[usize], scores: ArrayView2<'_, f64>, pred: &[usize]) -> Result<(EvaluationReport, Vec<Option<RocCurve>>), MetricsError> {
    let cm = confusion_matrix(truth, pred, AttackClass::COUNT)?;
    let counts = per_class_counts(&cm);
    let report = class_report(&counts);
    let aggregate = aggregate(&report, &cm);
    let curves: Vec<Option<RocCurve>> = (0..AttackClass::COUNT).map(|c| roc_curve(scores, truth, c).ok()).collect();
    let micro = roc_curve_micro(scores, truth).ok();
    let per_class = AttackClass::ALL
        .iter()
        .zip(report.iter().zip(&counts))
        .zip(&curves)
        .map(|((class, (m, c)), curve)| ClassEntry {
            class: class.name().to_string(),
            metrics: *m,
            counts: *c,
            auc: curve.as_ref().map(auc),
        })
        .collect();
    let report = EvaluationReport { model: model.to_string(), confusion: cm, per_class, aggregate, micro_auc: micro.as_ref().map(auc) };
    let mut all = curves;
    all.push(micro);
    Ok((report, all))
}

impl EvaluationReport {
    /// Overall table: accuracy, macro and weighted precision/recall/F1.
    pub fn overall_table(reports: &[&EvaluationReport]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:>8} | {:>9} {:>9} {:>9} | {:>9} {:>9} {:>9}", "Model", "Accuracy", "Macro P", "Macro R", "Macro F1", "Wtd P", "Wtd R", "Wtd F1");
        for r in reports {
            let a = &r.aggregate;
            let _ = writeln!(
                out,
                "{:<8} {:>8.4} | {:>9.4} {:>9.4} {:>9.4} | {:>9.4} {:>9.4} {:>9.4}",
                r.model, a.accuracy, a.macro_avg.precision, a.macro_avg.recall, a.macro_avg.f1, a.weighted_avg.precision, a.weighted_avg.recall, a.weighted_avg.f1
            );
        }
        out
    }

    /// Per-attack-type table: precision, recall, F1, support, AUC.
    pub fn per_class_table(reports: &[&EvaluationReport]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:<8} {:>9} {:>9} {:>9} {:>9} {:>8}", "Model", "Class", "Precision", "Recall", "F1", "Support", "AUC");
        for r in reports {
            for (i, e) in r.per_class.iter().enumerate() {
                let model = if i == 0 { r.model.as_str() } else { "" };
                let auc = e.auc.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
                let flag = if e.metrics.zero_division { " *" } else { "" };
                let _ = writeln!(
                    out,
                    "{:<8} {:<8} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>8}{}",
                    model, e.class, e.metrics.precision, e.metrics.recall, e.metrics.f1, e.metrics.support, auc, flag
                );
            }
        }
        if reports.iter().any(|r| r.per_class.iter().any(|e| e.metrics.zero_division)) {
            out.push_str("* undefined ratio (0/0) reported as 0\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn perfect_predictions_are_diagonal() {
        let labels = [0, 1, 2, 3, 4, 4, 0];
        let cm = confusion_matrix(&labels, &labels, 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(cm.counts[i][j], 0);
                }
            }
        }
        assert!(per_class_counts(&cm).iter().all(|c| c.fp == 0 && c.fn_ == 0));
    }

    #[test]
    fn hand_counted_cells() {
        let cm = confusion_matrix(&[0, 0, 1], &[0, 1, 1], 5).unwrap();
        assert_eq!(cm.counts[0][0], 1);
        assert_eq!(cm.counts[0][1], 1);
        assert_eq!(cm.counts[1][1], 1);
        assert_eq!(cm.total(), 3);
    }

    #[test]
    fn errors() {
        assert_eq!(confusion_matrix(&[0], &[0, 1], 5), Err(MetricsError::LengthMismatch { truth: 1, pred: 2 }));
        assert_eq!(confusion_matrix(&[0], &[5], 5), Err(MetricsError::InvalidLabel { label: 5, classes: 5 }));
    }

    #[test]
    fn two_class_counts() {
        let cm = ConfusionMatrix { counts: vec![vec![3, 1], vec![2, 4]] };
        let c = per_class_counts(&cm);
        assert_eq!(c[0], ClassCounts { tp: 3, fp: 2, fn_: 1, tn: 4 });
        assert_eq!(c[1], ClassCounts { tp: 4, fp: 1, fn_: 2, tn: 3 });
    }

    #[test]
    fn precision_recall_f1() {
        let m = class_report(&[ClassCounts { tp: 9, fp: 1, fn_: 1, tn: 89 }])[0];
        assert!((m.precision - 0.9).abs() < 1e-15);
        assert!((m.recall - 0.9).abs() < 1e-15);
        assert!((m.f1 - 0.9).abs() < 1e-15);
        assert!(!m.zero_division);

        let empty = class_report(&[ClassCounts { tp: 0, fp: 0, fn_: 0, tn: 10 }])[0];
        assert_eq!((empty.precision, empty.recall, empty.f1), (0.0, 0.0, 0.0));
        assert!(empty.zero_division);
    }

    #[test]
    fn roc_extremes() {
        let scores = array![[0.9, 0.1], [0.8, 0.2], [0.3, 0.7], [0.1, 0.9]];
        let truth = [0, 0, 1, 1];
        let curve = roc_curve(scores.view(), &truth, 0).unwrap();
        assert_eq!(auc(&curve), 1.0);
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));

        let flat = Array2::from_elem((4, 2), 0.5);
        assert_eq!(auc(&roc_curve(flat.view(), &truth, 0).unwrap()), 0.5);

        assert_eq!(roc_curve(scores.view(), &[1, 1, 1, 1], 0), Err(MetricsError::SingleClassOnly(0)));
    }

    #[test]
    fn csv_export() {
        let scores = array![[0.9], [0.2]];
        let curve = roc_curve(scores.view(), &[0, 1], 0).unwrap();
        assert_eq!(curve.to_csv(), "fpr,tpr,threshold\n0,0,inf\n0,1,0.9\n1,1,0.2\n");
    }

    #[test]
    fn report_tables_render() {
        let truth = [0, 1, 2, 3, 4, 4];
        let pred = [0, 1, 2, 4, 4, 4];
        let scores = Array2::from_shape_fn((6, 5), |(i, c)| if pred[i] == c { 0.9 } else { 0.025 });
        let (report, curves) = evaluate("cnn", &truth, scores.view(), &pred).unwrap();
        assert_eq!(curves.len(), 6);
        let table = EvaluationReport::per_class_table(&[&report]);
        assert!(table.contains("U2R"));
        assert!(table.contains("undefined ratio"));
        let overall = EvaluationReport::overall_table(&[&report]);
        assert!(overall.lines().nth(1).unwrap().starts_with("cnn"));
        let json = serde_json::to_string(&report).unwrap();
        assert_eq!(serde_json::from_str::<EvaluationReport>(&json).unwrap(), report);
    }
}
