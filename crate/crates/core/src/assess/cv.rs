//! K-fold cross-validation for SVR score prediction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::{pearson, spearman};

use super::{fit_svr, AssessError, SvrParams};

/// Fold assignment per sample. Folds partition the samples and differ in
/// size by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub k: usize,
    pub seed: u64,
    /// folds[i] is the fold index of sample i.
    pub folds: Vec<usize>,
}

impl CvPlan {
    /// Unstratified shuffled folds.
    pub fn new(samples: usize, k: usize, seed: u64) -> CvPlan {
        let mut order: Vec<usize> = (0..samples).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut folds = vec![0usize; samples];
        for (position, &sample) in order.iter().enumerate() {
            folds[sample] = position % k.max(1);
        }
        CvPlan { k: k.max(1), seed, folds }
    }

    /// Folds stratified by target value: samples are ordered by target and
    /// dealt round-robin, with ties shuffled by the seeded generator.
    pub fn stratified(targets: &[f64], k: usize, seed: u64) -> CvPlan {
        let mut order: Vec<usize> = (0..targets.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        order.sort_by(|&a, &b| targets[a].partial_cmp(&targets[b]).expect("no NaN targets"));
        let mut folds = vec![0usize; targets.len()];
        for (position, &sample) in order.iter().enumerate() {
            folds[sample] = position % k.max(1);
        }
        CvPlan { k: k.max(1), seed, folds }
    }

    fn validate(&self, samples: usize) -> Result<(), AssessError> {
        if self.folds.len() != samples {
            return Err(AssessError::LengthMismatch {
                features: samples,
                scores: self.folds.len(),
            });
        }
        Ok(())
    }
}

/// Out-of-fold predictions plus their correlation against the targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub predictions: Vec<f64>,
    pub pcc: f64,
    pub src: f64,
}

/// Train one model per fold on the remaining samples and predict the fold;
/// every sample is predicted exactly once by a model not trained on it.
pub fn cross_validate(
    x: &[Vec<f64>],
    y: &[f64],
    plan: &CvPlan,
    params: &SvrParams,
) -> Result<CvOutcome, AssessError> {
    plan.validate(x.len())?;
    let mut predictions = vec![f64::NAN; x.len()];
    for fold in 0..plan.k {
        let test: Vec<usize> = (0..x.len()).filter(|&i| plan.folds[i] == fold).collect();
        if test.is_empty() {
            continue;
        }
        let train: Vec<usize> = (0..x.len()).filter(|&i| plan.folds[i] != fold).collect();
        if train.len() < 2 {
            return Err(AssessError::FoldTooSmall { fold });
        }
        let train_x: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let train_y: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let model = fit_svr(&train_x, &train_y, params)?;
        let test_x: Vec<Vec<f64>> = test.iter().map(|&i| x[i].clone()).collect();
        for (&i, value) in test.iter().zip(model.predict(&test_x)?) {
            predictions[i] = value;
        }
    }
    let pcc = pearson(&predictions, y)?;
    let src = spearman(&predictions, y)?;
    Ok(CvOutcome {
        predictions,
        pcc,
        src,
    })
}
