//! Confusion matrix, threshold metrics, ranking metrics and the normalized
//! Gini coefficient.
//!
//! Positive = 1 = claim. Precision, recall and F1 return 0 when their
//! denominator is 0, so an all-negative predictor is representable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        precision_recall_f1(self).2
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn check_labels(truth: &[u8]) -> Result<()> {
    match truth.iter().find(|&&y| y > 1) {
        Some(&bad) => Err(Error::InvalidLabel(bad)),
        None => Ok(()),
    }
}

pub fn confusion_matrix(truth: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            what: "true vs predicted labels",
            left: truth.len(),
            right: predicted.len(),
        });
    }
    check_labels(truth)?;
    check_labels(predicted)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// `(precision, recall, f1)` with the zero-denominator convention. F1 is
/// taken straight from counts, `2tp / (2tp + fp + fn)`, the harmonic mean
/// of precision and recall without their rounding.
pub fn precision_recall_f1(cm: &ConfusionMatrix) -> (f64, f64, f64) {
    let f1 = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_);
    (cm.precision(), cm.recall(), f1)
}

fn check_scores(truth: &[u8], scores: &[f64]) -> Result<()> {
    if truth.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "labels vs scores",
            left: truth.len(),
            right: scores.len(),
        });
    }
    check_labels(truth)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    Ok(())
}

/// Sort permutation by ascending score.
fn order_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    idx
}

/// ROC AUC via the Mann-Whitney rank-sum with midranks for ties.
pub fn roc_auc(truth: &[u8], scores: &[f64]) -> Result<f64> {
    check_scores(truth, scores)?;
    let n_pos = truth.iter().filter(|&&y| y == 1).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let order = order_by_score(scores);
    // Sum of (doubled) midranks of positives keeps everything integral.
    let mut rank_sum_x2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1, midrank*2 = i+j+2
        let mid_x2 = (i + j + 2) as u128;
        let pos_in_block = order[i..=j].iter().filter(|&&k| truth[k] == 1).count() as u128;
        rank_sum_x2 += mid_x2 * pos_in_block;
        i = j + 1;
    }
    let n_pos_u = n_pos as u128;
    let u_x2 = rank_sum_x2 - n_pos_u * (n_pos_u + 1);
    Ok(u_x2 as f64 / 2.0 / (n_pos as f64 * n_neg as f64))
}

/// Average precision: step-wise sum of `(R_n - R_{n-1}) * P_n` over
/// descending score thresholds, each block of tied scores forming one
/// threshold.
pub fn pr_auc(truth: &[u8], scores: &[f64]) -> Result<f64> {
    check_scores(truth, scores)?;
    let n_pos = truth.iter().filter(|&&y| y == 1).count();
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }
    let mut order = order_by_score(scores);
    order.reverse();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            if truth[k] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    Ok(ap)
}

/// Normalized Gini coefficient, `2 * auc - 1`.
pub fn gini(auc: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&auc) {
        return Err(Error::InvalidParameter(format!("AUC {auc} outside [0, 1]")));
    }
    Ok(2.0 * auc - 1.0)
}

/// One result-table row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub auc: f64,
    pub auprc: f64,
    pub gini: f64,
}

impl MetricsReport {
    pub const CSV_HEADER: [&'static str; 7] = [
        "accuracy",
        "f1",
        "precision",
        "recall",
        "auc",
        "auprc",
        "gini",
    ];

    pub fn csv_values(&self) -> [f64; 7] {
        [
            self.accuracy,
            self.f1,
            self.precision,
            self.recall,
            self.auc,
            self.auprc,
            self.gini,
        ]
    }

    /// Header line plus one data line, values at full precision.
    pub fn to_csv(&self) -> String {
        let vals: Vec<String> = self.csv_values().iter().map(|v| v.to_string()).collect();
        format!("{}\n{}\n", Self::CSV_HEADER.join(","), vals.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub threshold: f64,
    pub metrics: MetricsReport,
    pub confusion: ConfusionMatrix,
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Hard predictions `score >= threshold`.
pub fn threshold_predictions(scores: &[f64], threshold: f64) -> Vec<u8> {
    scores.iter().map(|&s| u8::from(s >= threshold)).collect()
}

pub fn full_report(truth: &[u8], scores: &[f64], threshold: f64) -> Result<Evaluation> {
    check_scores(truth, scores)?;
    let predicted = threshold_predictions(scores, threshold);
    let confusion = confusion_matrix(truth, &predicted)?;
    let (precision, recall, f1) = precision_recall_f1(&confusion);
    let auc = roc_auc(truth, scores)?;
    let auprc = pr_auc(truth, scores)?;
    Ok(Evaluation {
        threshold,
        metrics: MetricsReport {
            accuracy: confusion.accuracy(),
            f1,
            precision,
            recall,
            auc,
            auprc,
            gini: gini(auc)?,
        },
        confusion,
    })
}
