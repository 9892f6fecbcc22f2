//! Multiple-choice scoring over a pluggable LLM backend.
//!
//! A [`McqTask`] holds the context, the target word, and the candidate
//! senses. Scoring renders the task once per option ordering, extracts a
//! log-probability per label from the backend, applies a softmax, maps the
//! per-position probabilities back to option ids, and averages across
//! orderings. The option with the highest averaged probability wins;
//! ties break toward the lowest canonical option index.

mod backend;
mod cache;
mod http;
mod prompt;

pub use backend::{Backend, FixedLogprobs, MockOracle, MockPositional, MockUniform};
pub use cache::Cache;
pub use http::{HttpBackend, HttpConfig, RetryPolicy};
pub use prompt::{build_prompt, build_semantic_prompt, build_wordlevel_prompt};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cefr::Pos;
use crate::lexicon::LexEntry;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("a multiple-choice task needs at least 2 options, got {0}")]
    TooFewOptions(usize),
    #[error("{0} options exceed the letter label alphabet (max 26)")]
    TooManyOptions(usize),
    #[error("full permutation enumeration is limited to {max} options, got {got}")]
    FullEnumerationTooLarge { max: usize, got: usize },
    #[error("target {target:?} not found in context")]
    TargetNotFound { target: String },
    #[error("backend {backend}: {message}")]
    Backend { backend: String, message: String },
    #[error("backend {backend} returned no log-probability data")]
    MissingLogprobs { backend: String },
    #[error("cache io error: {0}")]
    CacheIo(#[from] std::io::Error),
}

/// Identifier of one option: a lexicon entry id, or the "None of the other
/// options" sentinel.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OptionId {
    Entry(String),
    None,
}

impl OptionId {
    pub fn as_str(&self) -> &str {
        match self {
            OptionId::Entry(id) => id,
            OptionId::None => "NONE",
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, OptionId::None)
    }
}

impl fmt::Display for OptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for OptionId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for OptionId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(if s == "NONE" {
            OptionId::None
        } else {
            OptionId::Entry(s)
        })
    }
}

/// One rendered option: definition plus the "additional information" string
/// and, for word-level tasks, the PoS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McqOption {
    pub id: OptionId,
    pub definition: String,
    #[serde(default)]
    pub info: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Pos>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Semantic,
    WordLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    Sentence,
    Essay,
}

/// How labels are rendered: numbers per the word-level template, letters per
/// the semantic template (and as a fallback when a backend cannot emit
/// multi-digit labels as single tokens).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelStyle {
    Numbers,
    Letters,
}

fn letter_labels(n: usize) -> Result<Vec<String>, LlmError> {
    if n > 26 {
        return Err(LlmError::TooManyOptions(n));
    }
    Ok((0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect())
}

fn number_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// A rendered multiple-choice task over candidate senses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McqTask {
    /// Sentence or essay text. Word-level contexts already carry the target
    /// highlighted in square brackets.
    pub context: String,
    pub target: String,
    /// Options in canonical order. Word-level tasks end with the NONE option.
    pub options: Vec<McqOption>,
    pub labels: Vec<String>,
    pub template: Template,
    pub context_mode: ContextMode,
}

impl McqTask {
    /// A semantic-understanding task: real senses only, letter labels.
    pub fn semantic(
        context: impl Into<String>,
        target: impl Into<String>,
        entries: &[&LexEntry],
    ) -> Result<McqTask, LlmError> {
        if entries.len() < 2 {
            return Err(LlmError::TooFewOptions(entries.len()));
        }
        let options: Vec<McqOption> = entries
            .iter()
            .map(|e| McqOption {
                id: OptionId::Entry(e.id.clone()),
                definition: e.definition.clone(),
                info: e.info(),
                pos: Some(e.pos),
            })
            .collect();
        Ok(McqTask {
            context: context.into(),
            target: target.into(),
            labels: letter_labels(options.len())?,
            options,
            template: Template::Semantic,
            context_mode: ContextMode::Sentence,
        })
    }

    /// A word-level task for the token at `target_index` within `tokens`.
    /// The context is the token sequence joined with spaces and the target
    /// wrapped in square brackets; a NONE option is appended last.
    pub fn word_level(
        tokens: &[&str],
        target_index: usize,
        entries: &[&LexEntry],
        context_mode: ContextMode,
        label_style: LabelStyle,
    ) -> Result<McqTask, LlmError> {
        if entries.is_empty() {
            return Err(LlmError::TooFewOptions(0));
        }
        let target = tokens
            .get(target_index)
            .ok_or_else(|| LlmError::TargetNotFound {
                target: format!("token #{target_index}"),
            })?
            .to_string();
        let context = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                if i == target_index {
                    format!("[{t}]")
                } else {
                    t.to_string()
                }
            })
            .collect::<Vec<_>>()
            .join(" ");
        Self::word_level_from_parts(context, target, entries, context_mode, label_style)
    }

    /// A word-level task from raw text: the first standalone occurrence of
    /// `target` is highlighted. Errors when the target does not occur.
    pub fn word_level_from_text(
        context: &str,
        target: &str,
        entries: &[&LexEntry],
        context_mode: ContextMode,
        label_style: LabelStyle,
    ) -> Result<McqTask, LlmError> {
        let mut found = None;
        let mut start = 0usize;
        while let Some(at) = context[start..].find(target) {
            let begin = start + at;
            let end = begin + target.len();
            let left_ok = begin == 0
                || !context[..begin].chars().next_back().unwrap().is_alphanumeric();
            let right_ok = end == context.len()
                || !context[end..].chars().next().unwrap().is_alphanumeric();
            if left_ok && right_ok {
                found = Some((begin, end));
                break;
            }
            start = end;
        }
        let (begin, end) = found.ok_or_else(|| LlmError::TargetNotFound {
            target: target.to_string(),
        })?;
        let highlighted = format!("{}[{}]{}", &context[..begin], target, &context[end..]);
        Self::word_level_from_parts(
            highlighted,
            target.to_string(),
            entries,
            context_mode,
            label_style,
        )
    }

    fn word_level_from_parts(
        context: String,
        target: String,
        entries: &[&LexEntry],
        context_mode: ContextMode,
        label_style: LabelStyle,
    ) -> Result<McqTask, LlmError> {
        let mut options: Vec<McqOption> = entries
            .iter()
            .map(|e| McqOption {
                id: OptionId::Entry(e.id.clone()),
                definition: e.definition.clone(),
                info: e.info(),
                pos: Some(e.pos),
            })
            .collect();
        options.push(McqOption {
            id: OptionId::None,
            definition: "None of the other options".to_string(),
            info: String::new(),
            pos: None,
        });
        let labels = match label_style {
            LabelStyle::Numbers => number_labels(options.len()),
            LabelStyle::Letters => letter_labels(options.len())?,
        };
        Ok(McqTask {
            context,
            target,
            options,
            labels,
            template: Template::WordLevel,
            context_mode,
        })
    }

    pub fn option_ids(&self) -> Vec<OptionId> {
        self.options.iter().map(|o| o.id.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationMode {
    Full,
    Sample,
    None,
}

/// How option orderings are enumerated for a task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationPolicy {
    pub mode: PermutationMode,
    pub sample_size: usize,
    pub seed: u64,
}

/// Full enumeration is capped here; beyond this, sampling is the tool.
pub const FULL_ENUMERATION_MAX: usize = 6;

impl PermutationPolicy {
    pub fn full() -> PermutationPolicy {
        PermutationPolicy {
            mode: PermutationMode::Full,
            sample_size: 10,
            seed: 0,
        }
    }

    pub fn sample(sample_size: usize, seed: u64) -> PermutationPolicy {
        PermutationPolicy {
            mode: PermutationMode::Sample,
            sample_size,
            seed,
        }
    }

    pub fn none() -> PermutationPolicy {
        PermutationPolicy {
            mode: PermutationMode::None,
            sample_size: 10,
            seed: 0,
        }
    }

    /// The orderings to score for a task with `n` options. Each ordering maps
    /// prompt position -> canonical option index.
    pub fn orderings(&self, n: usize) -> Result<Vec<Vec<usize>>, LlmError> {
        let identity: Vec<usize> = (0..n).collect();
        match self.mode {
            PermutationMode::None => Ok(vec![identity]),
            PermutationMode::Full => {
                if n > FULL_ENUMERATION_MAX {
                    return Err(LlmError::FullEnumerationTooLarge {
                        max: FULL_ENUMERATION_MAX,
                        got: n,
                    });
                }
                Ok(enumerate_permutations(n))
            }
            PermutationMode::Sample => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                if n <= 7 {
                    // Factorial is small: enumerate, then draw without
                    // replacement.
                    let mut all = enumerate_permutations(n);
                    all.shuffle(&mut rng);
                    all.truncate(self.sample_size.max(1));
                    all.sort();
                    Ok(all)
                } else {
                    let mut seen = std::collections::HashSet::new();
                    let mut out = Vec::new();
                    while out.len() < self.sample_size.max(1) {
                        let mut perm = identity.clone();
                        perm.shuffle(&mut rng);
                        if seen.insert(perm.clone()) {
                            out.push(perm);
                        }
                    }
                    out.sort();
                    Ok(out)
                }
            }
        }
    }
}

fn enumerate_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    fn recurse(n: usize, current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for i in 0..n {
            if !used[i] {
                used[i] = true;
                current.push(i);
                recurse(n, current, used, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    recurse(n, &mut current, &mut used, &mut out);
    out
}

/// Numerically stable softmax.
pub fn softmax(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / sum).collect()
}

/// Log-probabilities extracted for one scored prompt, one per permutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationRecord {
    /// Prompt position -> canonical option index.
    pub ordering: Vec<usize>,
    pub label_logprobs: BTreeMap<String, f64>,
}

/// Permutation-averaged probability over a task's options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionDistribution {
    /// Canonical option order (mirrors the task).
    pub options: Vec<OptionId>,
    /// Mean probability per option, aligned with `options`.
    pub probs: Vec<f64>,
    pub permutations_used: usize,
    pub raw: Vec<PermutationRecord>,
}

impl OptionDistribution {
    pub fn prob(&self, id: &OptionId) -> Option<f64> {
        self.options
            .iter()
            .position(|o| o == id)
            .map(|i| self.probs[i])
    }

    pub fn to_map(&self) -> BTreeMap<OptionId, f64> {
        self.options
            .iter()
            .cloned()
            .zip(self.probs.iter().copied())
            .collect()
    }

    /// The argmax option id; exact ties break toward the lowest canonical
    /// index.
    pub fn select(&self) -> &OptionId {
        let mut best = 0usize;
        for i in 1..self.probs.len() {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        &self.options[best]
    }
}

/// A scoring request as a backend sees it: the rendered prompt, the label
/// alphabet, the option ids in prompt order, and an opaque task key that
/// only the oracle mock consults.
#[derive(Debug, Clone)]
pub struct ScoreRequest<'a> {
    pub prompt: &'a str,
    pub labels: &'a [String],
    pub options: &'a [OptionId],
    pub task_key: Option<&'a str>,
}

/// Backend plus optional response cache plus hit/miss accounting. All
/// scoring flows through here so that manifests can reconcile call counts.
pub struct Scorer {
    backend: Box<dyn Backend>,
    cache: Option<Cache>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl Scorer {
    pub fn new(backend: Box<dyn Backend>) -> Scorer {
        Scorer {
            backend,
            cache: None,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn with_cache(mut self, cache: Cache) -> Scorer {
        self.cache = Some(cache);
        self
    }

    pub fn backend_identity(&self) -> String {
        self.backend.identity()
    }

    /// (hits, misses) so far. hits + misses equals total scoring calls.
    pub fn cache_counts(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    /// Log-probability of each label at the first output position. Labels
    /// missing from the backend's top-k get floored at (min returned − 10).
    pub fn score_once(
        &self,
        req: &ScoreRequest<'_>,
    ) -> Result<BTreeMap<String, f64>, LlmError> {
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&self.backend.identity(), req.prompt, req.labels) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                return Ok(hit);
            }
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let returned = self.backend.score(req)?;
        if returned.is_empty() {
            return Err(LlmError::MissingLogprobs {
                backend: self.backend.identity(),
            });
        }
        let floor = returned.values().copied().fold(f64::INFINITY, f64::min) - 10.0;
        let mut out = BTreeMap::new();
        for label in req.labels {
            out.insert(label.clone(), returned.get(label).copied().unwrap_or(floor));
        }
        if let Some(cache) = &self.cache {
            cache.put(&self.backend.identity(), req.prompt, req.labels, &out)?;
        }
        Ok(out)
    }

    /// Score a task across the policy's orderings and average the per-option
    /// probabilities.
    pub fn score_with_permutations(
        &self,
        task: &McqTask,
        policy: &PermutationPolicy,
        task_key: Option<&str>,
    ) -> Result<OptionDistribution, LlmError> {
        let n = task.options.len();
        let orderings = policy.orderings(n)?;
        let canonical = task.option_ids();
        let mut sums = vec![0.0f64; n];
        let mut raw = Vec::with_capacity(orderings.len());
        for ordering in &orderings {
            let prompt = build_prompt(task, ordering)?;
            let prompt_options: Vec<OptionId> =
                ordering.iter().map(|&i| canonical[i].clone()).collect();
            let req = ScoreRequest {
                prompt: &prompt,
                labels: &task.labels,
                options: &prompt_options,
                task_key,
            };
            let logprobs = self.score_once(&req)?;
            let values: Vec<f64> = task.labels.iter().map(|l| logprobs[l]).collect();
            let probs = softmax(&values);
            for (position, &canonical_index) in ordering.iter().enumerate() {
                sums[canonical_index] += probs[position];
            }
            raw.push(PermutationRecord {
                ordering: ordering.clone(),
                label_logprobs: logprobs,
            });
        }
        let count = orderings.len() as f64;
        Ok(OptionDistribution {
            options: canonical,
            probs: sums.into_iter().map(|s| s / count).collect(),
            permutations_used: orderings.len(),
            raw,
        })
    }
}
