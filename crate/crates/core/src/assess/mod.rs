//! Essay-level assessment: per-level proportion features, the naive weighted
//! composite score, and SVR-based score prediction with cross-validation.

mod cv;
mod svr;

pub use cv::{cross_validate, CvOutcome, CvPlan};
pub use svr::{fit_svr, SvrModel, SvrParams};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::WordAnnotation;
use crate::cefr::{CefrLevel, WordLabel};
use crate::metrics::{pearson, spearman, MetricsError};

#[derive(Debug, Error)]
pub enum AssessError {
    #[error("document {0} has no countable tokens")]
    ZeroDenominator(String),
    #[error("feature and score lists differ in length: {features} vs {scores}")]
    LengthMismatch { features: usize, scores: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("SVR did not converge within {max_iter} iterations (violation {violation:.3e})")]
    NonConvergence { max_iter: usize, violation: f64 },
    #[error("fold {fold} leaves fewer than 2 training samples")]
    FoldTooSmall { fold: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// How the proportion denominator is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMode {
    /// Every non-punctuation token (stopwords and N/A included). This reads
    /// "total essay length" as word count; punctuation is not a word.
    NonPunctuation,
    /// Content tokens only (stopwords excluded as well).
    ContentOnly,
}

/// Feature extraction configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub denominator: DenominatorMode,
    /// Append na_proportion as a seventh regression feature.
    pub include_na_feature: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            denominator: DenominatorMode::NonPunctuation,
            include_na_feature: false,
        }
    }
}

/// Per-essay level-proportion features and the weighted composite score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssayFeatures {
    pub doc_id: String,
    /// Proportion of countable tokens predicted at each level, A1..C2.
    pub proportions: [f64; 6],
    pub na_proportion: f64,
    pub denominator: usize,
    /// Σ proportions[level] × level ordinal, in [0, 6].
    pub composite: f64,
}

impl EssayFeatures {
    /// The regression feature vector under `config`.
    pub fn vector(&self, config: &FeatureConfig) -> Vec<f64> {
        let mut v = self.proportions.to_vec();
        if config.include_na_feature {
            v.push(self.na_proportion);
        }
        v
    }
}

/// Count one document's annotations into proportions and the composite.
pub fn level_proportions(
    annotations: &[WordAnnotation],
    config: &FeatureConfig,
) -> Result<EssayFeatures, AssessError> {
    let doc_id = annotations
        .first()
        .map(|a| a.doc_id.clone())
        .unwrap_or_default();
    let mut level_counts = [0usize; 6];
    let mut na_count = 0usize;
    let mut denominator = 0usize;
    for annotation in annotations {
        let countable = match config.denominator {
            DenominatorMode::NonPunctuation => annotation.label != WordLabel::Punctuation,
            DenominatorMode::ContentOnly => annotation.label.is_scored(),
        };
        if !countable {
            continue;
        }
        denominator += 1;
        match annotation.label {
            WordLabel::Level(level) => level_counts[level.index()] += 1,
            WordLabel::NotInLexicon => na_count += 1,
            _ => {}
        }
    }
    if denominator == 0 {
        return Err(AssessError::ZeroDenominator(doc_id));
    }
    let mut proportions = [0.0f64; 6];
    for (slot, &count) in proportions.iter_mut().zip(&level_counts) {
        *slot = count as f64 / denominator as f64;
    }
    // Composite from integer counts, so worked examples come out exact.
    let weighted: usize = CefrLevel::ALL
        .iter()
        .map(|&l| level_counts[l.index()] * l.ordinal() as usize)
        .sum();
    Ok(EssayFeatures {
        doc_id,
        proportions,
        na_proportion: na_count as f64 / denominator as f64,
        denominator,
        composite: weighted as f64 / denominator as f64,
    })
}

/// Correlation between two aligned score lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub pcc: f64,
    pub src: f64,
    pub n: usize,
}

/// The naive weighted classifier: correlate composite scores against human
/// scores.
pub fn naive_score(
    features: &[EssayFeatures],
    human_scores: &[f64],
) -> Result<CorrelationPair, AssessError> {
    if features.len() != human_scores.len() {
        return Err(AssessError::LengthMismatch {
            features: features.len(),
            scores: human_scores.len(),
        });
    }
    if features.len() < 3 {
        return Err(AssessError::TooFewSamples {
            needed: 3,
            got: features.len(),
        });
    }
    let composites: Vec<f64> = features.iter().map(|f| f.composite).collect();
    Ok(CorrelationPair {
        pcc: pearson(&composites, human_scores)?,
        src: spearman(&composites, human_scores)?,
        n: features.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::Method;
    use crate::cefr::Ambiguity;

    pub(crate) fn annotation(doc_id: &str, index: usize, label: WordLabel) -> WordAnnotation {
        WordAnnotation {
            doc_id: doc_id.to_string(),
            sentence_index: 0,
            token_index: index,
            surface: format!("w{index}"),
            lemma: format!("w{index}"),
            label,
            entry_id: None,
            method: Method::Pos,
            probs: None,
            ambiguity: Ambiguity::Unknown,
        }
    }

    fn labels_to_annotations(labels: &[&str]) -> Vec<WordAnnotation> {
        labels
            .iter()
            .enumerate()
            .map(|(i, l)| annotation("d", i, l.parse().unwrap()))
            .collect()
    }

    #[test]
    fn worked_example_composite() {
        // 10 countable tokens: 5 at A1, 3 at B1, 2 N/A.
        let annotations = labels_to_annotations(&[
            "A1", "A1", "A1", "A1", "A1", "B1", "B1", "B1", "N/A", "N/A",
        ]);
        let features = level_proportions(&annotations, &FeatureConfig::default()).unwrap();
        assert_eq!(features.denominator, 10);
        assert_eq!(features.proportions[CefrLevel::A1.index()], 0.5);
        assert_eq!(features.proportions[CefrLevel::B1.index()], 0.3);
        assert_eq!(features.na_proportion, 0.2);
        assert_eq!(features.composite, 1.4);
    }

    #[test]
    fn composite_bounds() {
        let all_na = labels_to_annotations(&["N/A", "N/A", "S"]);
        let f = level_proportions(&all_na, &FeatureConfig::default()).unwrap();
        assert_eq!(f.composite, 0.0);
        let all_c2 = labels_to_annotations(&["C2", "C2"]);
        let f = level_proportions(&all_c2, &FeatureConfig::default()).unwrap();
        assert_eq!(f.composite, 6.0);
    }

    #[test]
    fn punctuation_never_counts() {
        let annotations = labels_to_annotations(&["A1", "P", "P", "S"]);
        let f = level_proportions(&annotations, &FeatureConfig::default()).unwrap();
        assert_eq!(f.denominator, 2); // A1 + S
        let content_only = FeatureConfig {
            denominator: DenominatorMode::ContentOnly,
            ..FeatureConfig::default()
        };
        let f = level_proportions(&annotations, &content_only).unwrap();
        assert_eq!(f.denominator, 1);
    }

    #[test]
    fn zero_denominator_is_error() {
        let annotations = labels_to_annotations(&["P", "P"]);
        assert!(matches!(
            level_proportions(&annotations, &FeatureConfig::default()),
            Err(AssessError::ZeroDenominator(_))
        ));
    }

    #[test]
    fn naive_score_identity_and_reversal() {
        let features: Vec<EssayFeatures> = [1.0, 2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &c)| EssayFeatures {
                doc_id: format!("d{i}"),
                proportions: [0.0; 6],
                na_proportion: 0.0,
                denominator: 1,
                composite: c,
            })
            .collect();
        let same = naive_score(&features, &[1.0, 2.0, 3.0]).unwrap();
        assert!((same.pcc - 1.0).abs() < 1e-12);
        assert!((same.src - 1.0).abs() < 1e-12);
        let reversed = naive_score(&features, &[3.0, 2.0, 1.0]).unwrap();
        assert!((reversed.pcc + 1.0).abs() < 1e-12);
        assert!((reversed.src + 1.0).abs() < 1e-12);
        let constant = naive_score(&features, &[2.0, 2.0, 2.0]);
        assert!(matches!(
            constant,
            Err(AssessError::Metrics(MetricsError::ConstantVector))
        ));
    }
}
