//! Evaluation mathematics: accuracy splits, per-label precision/recall/F1,
//! Pearson and Spearman correlation, cumulative level-usage curves,
//! trapezoidal AUC, empirical CDFs, and level-or-above consistency accuracy.
//!
//! Stopword and punctuation positions are excluded from accuracy and F1:
//! the gold marks them categorically, so scoring them would only inflate
//! agreement. `N/A` is scored as a real label.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cefr::{Ambiguity, CefrLevel, WordLabel};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("correlation undefined for a constant vector")]
    ConstantVector,
    #[error("empty group {0}")]
    EmptyGroup(String),
    #[error("no occurrences qualify for threshold {0}")]
    NoQualifyingOccurrences(CefrLevel),
}

/// Exact-match accuracy over one subset of tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

impl SplitScore {
    fn from_counts(correct: usize, total: usize) -> SplitScore {
        SplitScore {
            correct,
            total,
            accuracy: if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            },
        }
    }
}

/// Accuracy overall and split by ambiguity. Unknown-ambiguity tokens (absent
/// from the lexicon) count toward the non-ambiguous split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub all: SplitScore,
    pub ambiguous: SplitScore,
    pub non_ambiguous: SplitScore,
}

/// Exact-match rate over the scored alphabet {A1..C2, N/A}, overall and per
/// ambiguity split. `S`/`P` gold positions are skipped.
pub fn word_accuracy(
    pred: &[WordLabel],
    gold: &[WordLabel],
    ambiguity: &[Ambiguity],
) -> Result<AccuracyReport, MetricsError> {
    if pred.len() != gold.len() || pred.len() != ambiguity.len() {
        return Err(MetricsError::LengthMismatch {
            left: pred.len(),
            right: gold.len().max(ambiguity.len()),
        });
    }
    let mut counts = [(0usize, 0usize); 3]; // all, ambiguous, non-ambiguous
    for ((p, g), a) in pred.iter().zip(gold).zip(ambiguity) {
        if !g.is_scored() {
            continue;
        }
        let hit = (p == g) as usize;
        counts[0].0 += hit;
        counts[0].1 += 1;
        let split = if *a == Ambiguity::Ambiguous { 1 } else { 2 };
        counts[split].0 += hit;
        counts[split].1 += 1;
    }
    Ok(AccuracyReport {
        all: SplitScore::from_counts(counts[0].0, counts[0].1),
        ambiguous: SplitScore::from_counts(counts[1].0, counts[1].1),
        non_ambiguous: SplitScore::from_counts(counts[2].0, counts[2].1),
    })
}

/// One-vs-rest precision/recall/F1 for one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPrf {
    pub label: WordLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences of the label.
    pub support: usize,
    /// Predicted occurrences of the label.
    pub predicted: usize,
    pub true_positives: usize,
    /// False when the label occurs in neither gold nor predictions.
    pub supported: bool,
}

/// Per-label precision/recall/F1 over {N/A, A1..C2}, in that report order.
/// F1 is 0 by convention when precision + recall is 0.
pub fn per_level_f1(pred: &[WordLabel], gold: &[WordLabel]) -> Result<Vec<LabelPrf>, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::LengthMismatch {
            left: pred.len(),
            right: gold.len(),
        });
    }
    let mut rows = Vec::new();
    for label in WordLabel::scored_labels() {
        let mut tp = 0usize;
        let mut predicted = 0usize;
        let mut support = 0usize;
        for (p, g) in pred.iter().zip(gold) {
            if !g.is_scored() {
                continue;
            }
            if *p == label {
                predicted += 1;
            }
            if *g == label {
                support += 1;
                if *p == label {
                    tp += 1;
                }
            }
        }
        let precision = if predicted == 0 {
            0.0
        } else {
            tp as f64 / predicted as f64
        };
        let recall = if support == 0 {
            0.0
        } else {
            tp as f64 / support as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        rows.push(LabelPrf {
            label,
            precision,
            recall,
            f1,
            support,
            predicted,
            true_positives: tp,
            supported: support > 0 || predicted > 0,
        });
    }
    Ok(rows)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Pearson product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(MetricsError::TooFewValues {
            needed: 3,
            got: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ConstantVector);
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("no NaN ranks"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average-ranked data.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// One cumulative level-usage curve: proportions accumulated along the
/// reversed level axis C2 -> A1, so a point reads "share of words at this
/// level or above".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    /// Essay-level group the curve describes.
    pub group: CefrLevel,
    /// The reversed axis C2, C1, B2, B1, A2, A1.
    pub x: Vec<CefrLevel>,
    pub y: Vec<f64>,
    pub auc: f64,
    /// Documents contributing to the group mean.
    pub documents: usize,
}

/// Reverse-cumulate a single 6-vector of per-level proportions (A1..C2
/// indexed) into the C2->A1 curve.
pub fn cumulative_curve(proportions: &[f64; 6]) -> [f64; 6] {
    let mut out = [0.0; 6];
    let mut running = 0.0;
    for (i, level) in CefrLevel::ALL.iter().rev().enumerate() {
        running += proportions[level.index()];
        out[i] = running;
    }
    out
}

/// Group-mean cumulative curves: per essay-level group, the mean over
/// documents of per-document level proportions, cumulated along the
/// reversed axis. Returns one series per group in ascending level order.
pub fn cumulative_level_distribution(
    groups: &BTreeMap<CefrLevel, Vec<[f64; 6]>>,
) -> Result<Vec<CurveSeries>, MetricsError> {
    let mut series = Vec::new();
    for (&group, docs) in groups {
        if docs.is_empty() {
            return Err(MetricsError::EmptyGroup(group.to_string()));
        }
        let mut mean_props = [0.0f64; 6];
        for props in docs {
            for (slot, value) in mean_props.iter_mut().zip(props) {
                *slot += value;
            }
        }
        for slot in &mut mean_props {
            *slot /= docs.len() as f64;
        }
        let y = cumulative_curve(&mean_props).to_vec();
        let auc = auc_trapezoid(&y)?;
        series.push(CurveSeries {
            group,
            x: CefrLevel::ALL.iter().rev().copied().collect(),
            y,
            auc,
            documents: docs.len(),
        });
    }
    Ok(series)
}

/// Trapezoidal area under `y` sampled on a unit-spaced axis normalized to
/// [0, 1].
pub fn auc_trapezoid(y: &[f64]) -> Result<f64, MetricsError> {
    if y.len() < 2 {
        return Err(MetricsError::TooFewValues {
            needed: 2,
            got: y.len(),
        });
    }
    let dx = 1.0 / (y.len() - 1) as f64;
    let mut area = 0.0;
    for window in y.windows(2) {
        area += (window[0] + window[1]) / 2.0 * dx;
    }
    Ok(area)
}

/// Empirical CDF: sorted (value, fraction ≤ value) step points, one per
/// distinct value, ending at 1.
pub fn ecdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN values"));
    let n = sorted.len();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let fraction = (i + 1) as f64 / n as f64;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = fraction,
            _ => out.push((v, fraction)),
        }
    }
    out
}

/// Level-or-above consistency: among occurrences whose predicted level is at
/// least `threshold`, the fraction appearing in essays at or above that
/// predicted level. Occurrences are (predicted level, essay level) pairs.
pub fn consistency_accuracy(
    occurrences: &[(CefrLevel, CefrLevel)],
    threshold: CefrLevel,
) -> Result<f64, MetricsError> {
    let qualifying: Vec<_> = occurrences
        .iter()
        .filter(|(pred, _)| *pred >= threshold)
        .collect();
    if qualifying.is_empty() {
        return Err(MetricsError::NoQualifyingOccurrences(threshold));
    }
    let correct = qualifying
        .iter()
        .filter(|(pred, essay)| essay >= pred)
        .count();
    Ok(correct as f64 / qualifying.len() as f64)
}
