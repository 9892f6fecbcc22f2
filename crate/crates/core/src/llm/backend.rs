//! The backend contract and the offline mock backends.

use std::collections::{BTreeMap, HashMap};
use std::sync::RwLock;

use super::{LlmError, OptionId, ScoreRequest};

/// Scores one rendered prompt, returning a log-probability per label for the
/// first output position. Implementations may omit labels they cannot see
/// (the scorer floors them); an empty map is an error.
pub trait Backend: Send + Sync {
    /// Stable identity string recorded in manifests and cache keys.
    fn identity(&self) -> String;

    fn score(&self, req: &ScoreRequest<'_>) -> Result<BTreeMap<String, f64>, LlmError>;
}

impl<B: Backend> Backend for std::sync::Arc<B> {
    fn identity(&self) -> String {
        (**self).identity()
    }

    fn score(&self, req: &ScoreRequest<'_>) -> Result<BTreeMap<String, f64>, LlmError> {
        (**self).score(req)
    }
}

/// Equal log-probability for every label.
#[derive(Debug, Default, Clone, Copy)]
pub struct MockUniform;

impl Backend for MockUniform {
    fn identity(&self) -> String {
        "mock-uniform".to_string()
    }

    fn score(&self, req: &ScoreRequest<'_>) -> Result<BTreeMap<String, f64>, LlmError> {
        let lp = (1.0 / req.labels.len() as f64).ln();
        Ok(req.labels.iter().map(|l| (l.clone(), lp)).collect())
    }
}

/// Probability mass concentrated on the first-position label, mimicking
/// positional bias.
#[derive(Debug, Clone, Copy)]
pub struct MockPositional {
    /// Probability assigned to the first label; the rest share the remainder.
    pub first_mass: f64,
}

impl Default for MockPositional {
    fn default() -> Self {
        MockPositional { first_mass: 0.9 }
    }
}

impl Backend for MockPositional {
    fn identity(&self) -> String {
        "mock-positional".to_string()
    }

    fn score(&self, req: &ScoreRequest<'_>) -> Result<BTreeMap<String, f64>, LlmError> {
        let n = req.labels.len();
        if n == 1 {
            return Ok(BTreeMap::from([(req.labels[0].clone(), 0.0)]));
        }
        let rest = (1.0 - self.first_mass) / (n - 1) as f64;
        Ok(req
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let p = if i == 0 { self.first_mass } else { rest };
                (l.clone(), p.ln())
            })
            .collect())
    }
}

/// Oracle keyed to gold entries: answers are registered per task key before
/// scoring, and the matching option gets almost all the mass. Task keys never
/// reach prompts or caches, so the oracle stays invisible to real backends.
#[derive(Debug, Default)]
pub struct MockOracle {
    answers: RwLock<HashMap<String, OptionId>>,
}

impl MockOracle {
    pub fn new() -> MockOracle {
        MockOracle::default()
    }

    pub fn register(&self, task_key: impl Into<String>, answer: OptionId) {
        self.answers.write().unwrap().insert(task_key.into(), answer);
    }

    pub fn registered(&self) -> usize {
        self.answers.read().unwrap().len()
    }
}

impl Backend for MockOracle {
    fn identity(&self) -> String {
        "mock-oracle".to_string()
    }

    fn score(&self, req: &ScoreRequest<'_>) -> Result<BTreeMap<String, f64>, LlmError> {
        let n = req.labels.len();
        let answer = req
            .task_key
            .and_then(|key| self.answers.read().unwrap().get(key).cloned());
        let target_position = answer
            .and_then(|id| req.options.iter().position(|o| *o == id));
        match target_position {
            Some(at) if n > 1 => {
                let rest = 0.02 / (n - 1) as f64;
                Ok(req
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| {
                        let p = if i == at { 0.98 } else { rest };
                        (l.clone(), p.ln())
                    })
                    .collect())
            }
            // Unregistered task or single label: fall back to uniform.
            _ => MockUniform.score(req),
        }
    }
}

/// Test backend returning fixed logits by prompt position.
#[derive(Debug, Clone)]
pub struct FixedLogprobs {
    values: Vec<f64>,
}

impl FixedLogprobs {
    pub fn new(values: Vec<f64>) -> FixedLogprobs {
        FixedLogprobs { values }
    }
}

impl Backend for FixedLogprobs {
    fn identity(&self) -> String {
        "fixed-logprobs".to_string()
    }

    fn score(&self, req: &ScoreRequest<'_>) -> Result<BTreeMap<String, f64>, LlmError> {
        Ok(req
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), self.values.get(i).copied().unwrap_or(-30.0)))
            .collect())
    }
}
