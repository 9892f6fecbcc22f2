//! Flag handling with layered precedence: built-in defaults, then the JSON
//! config file, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

use lexeval_core::annotate::Method;
use lexeval_core::assess::{DenominatorMode, FeatureConfig, SvrParams};
use lexeval_core::experiments::{BackendChoice, ExperimentConfig};
use lexeval_core::llm::{ContextMode, LabelStyle, PermutationPolicy};

/// Flags shared by every subcommand. Everything is optional here; defaults
/// are applied during the merge.
#[derive(Debug, Clone, Args)]
pub struct CommonOpts {
    /// Lexicon file (JSON lines).
    #[arg(long, value_name = "PATH")]
    pub lexicon: Option<PathBuf>,

    /// Input document, corpus file, or directory.
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// Gold corpus (pre-tokenized TSV).
    #[arg(long, value_name = "PATH")]
    pub gold: Option<PathBuf>,

    /// Held-out test corpus for the train/test essay protocol.
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,

    /// Scores table (TSV: doc_id, holistic, optional level + analytic columns).
    #[arg(long, value_name = "PATH")]
    pub scores: Option<PathBuf>,

    /// Annotation method(s), comma-separated: llm, pos, random.
    #[arg(long, value_name = "LIST")]
    pub method: Option<String>,

    /// Model identifier for the http backend.
    #[arg(long, value_name = "ID")]
    pub model: Option<String>,

    /// Base URL of the OpenAI-compatible endpoint.
    #[arg(long, value_name = "URL")]
    pub api_base: Option<String>,

    /// Backend: http, mock-uniform, mock-positional, mock-oracle.
    #[arg(long, value_name = "KIND")]
    pub backend: Option<String>,

    /// Permutation policy: full, sample:N, none.
    #[arg(long, value_name = "POLICY")]
    pub permutations: Option<String>,

    /// Scoring context: sentence or essay.
    #[arg(long, value_name = "MODE")]
    pub context: Option<String>,

    /// Option label style: numbers or letters.
    #[arg(long, value_name = "STYLE")]
    pub labels: Option<String>,

    /// Seed for sampling, shuffling, and the random baseline.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Response cache file (JSON lines, append-only).
    #[arg(long, value_name = "PATH")]
    pub cache: Option<PathBuf>,

    /// Worker threads for corpus processing.
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,

    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Report format: json, tsv, html.
    #[arg(long, value_name = "FMT")]
    pub format: Option<String>,

    /// Option-count buckets for semantic-eval, comma-separated.
    #[arg(long, value_name = "LIST")]
    pub buckets: Option<String>,

    /// Target words for consistency, comma-separated (default: the two most
    /// frequent multi-meaning lemmas).
    #[arg(long, value_name = "LIST")]
    pub words: Option<String>,

    /// Cross-validation fold count.
    #[arg(long, value_name = "K")]
    pub cv_folds: Option<usize>,

    /// Stratify cross-validation folds by target score.
    #[arg(long)]
    pub stratify: bool,

    /// Count only content tokens in the feature denominator.
    #[arg(long)]
    pub content_denominator: bool,

    /// Add the N/A proportion as a regression feature.
    #[arg(long)]
    pub na_feature: bool,

    /// SVR epsilon.
    #[arg(long, value_name = "E")]
    pub svr_epsilon: Option<f64>,

    /// SVR C.
    #[arg(long, value_name = "C")]
    pub svr_c: Option<f64>,

    /// SVR RBF gamma (default: 1 / feature count).
    #[arg(long, value_name = "G")]
    pub svr_gamma: Option<f64>,
}

/// Config-file schema: the same knobs as the flags.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defaults {
    pub lexicon: Option<PathBuf>,
    pub method: Option<String>,
    pub backend: Option<String>,
    pub model: Option<String>,
    pub api_base: Option<String>,
    pub permutations: Option<String>,
    pub context: Option<String>,
    pub labels: Option<String>,
    pub seed: Option<u64>,
    pub cache: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub buckets: Option<String>,
    pub words: Option<String>,
    pub cv_folds: Option<usize>,
    pub stratify: Option<bool>,
    pub content_denominator: Option<bool>,
    pub na_feature: Option<bool>,
    pub svr_epsilon: Option<f64>,
    pub svr_c: Option<f64>,
    pub svr_gamma: Option<f64>,
}

impl Defaults {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Defaults> {
        match path {
            None => Ok(Defaults::default()),
            Some(path) => {
                let body = std::fs::read_to_string(path)
                    .with_context(|| format!("failed to read config {}", path.display()))?;
                serde_json::from_str(&body)
                    .with_context(|| format!("invalid config file {}", path.display()))
            }
        }
    }

    /// Apply precedence: flags override the config file, which overrides the
    /// built-in defaults.
    pub fn merge(&self, flags: &CommonOpts) -> anyhow::Result<Merged> {
        let pick_path = |flag: &Option<PathBuf>, file: &Option<PathBuf>| {
            flag.clone().or_else(|| file.clone())
        };
        let pick_str = |flag: &Option<String>, file: &Option<String>| {
            flag.clone().or_else(|| file.clone())
        };
        let methods = parse_methods(
            &pick_str(&flags.method, &self.method).unwrap_or_else(|| "pos".to_string()),
        )?;
        let backend_kind =
            pick_str(&flags.backend, &self.backend).unwrap_or_else(|| "mock-uniform".to_string());
        let model = pick_str(&flags.model, &self.model).unwrap_or_else(|| "gpt-4o".to_string());
        let api_base = pick_str(&flags.api_base, &self.api_base)
            .unwrap_or_else(|| "https://api.openai.com".to_string());
        let backend = parse_backend(&backend_kind, &model, &api_base)?;
        let policy = parse_policy(
            &pick_str(&flags.permutations, &self.permutations)
                .unwrap_or_else(|| "none".to_string()),
            flags.seed.or(self.seed).unwrap_or(0),
        )?;
        let context = match pick_str(&flags.context, &self.context).as_deref() {
            None | Some("sentence") => ContextMode::Sentence,
            Some("essay") => ContextMode::Essay,
            Some(other) => bail!("unknown --context {other:?}; expected sentence or essay"),
        };
        let label_style = match pick_str(&flags.labels, &self.labels).as_deref() {
            None | Some("numbers") => LabelStyle::Numbers,
            Some("letters") => LabelStyle::Letters,
            Some(other) => bail!("unknown --labels {other:?}; expected numbers or letters"),
        };
        let buckets = match pick_str(&flags.buckets, &self.buckets) {
            None => vec![3, 4, 5, 6],
            Some(spec) => spec
                .split(',')
                .map(|b| b.trim().parse::<usize>())
                .collect::<Result<_, _>>()
                .with_context(|| format!("invalid --buckets {spec:?}"))?,
        };
        let words = pick_str(&flags.words, &self.words)
            .map(|spec| {
                spec.split(',')
                    .map(|w| w.trim().to_lowercase())
                    .filter(|w| !w.is_empty())
                    .collect()
            })
            .unwrap_or_default();
        let mut svr = SvrParams::default();
        svr.epsilon = flags.svr_epsilon.or(self.svr_epsilon).unwrap_or(svr.epsilon);
        svr.c = flags.svr_c.or(self.svr_c).unwrap_or(svr.c);
        svr.gamma = flags.svr_gamma.or(self.svr_gamma).or(svr.gamma);
        Ok(Merged {
            lexicon: pick_path(&flags.lexicon, &self.lexicon),
            input: flags.input.clone(),
            gold: flags.gold.clone(),
            test: flags.test.clone(),
            scores: flags.scores.clone(),
            methods,
            backend,
            policy,
            context,
            label_style,
            seed: flags.seed.or(self.seed).unwrap_or(0),
            cache: pick_path(&flags.cache, &self.cache),
            jobs: flags.jobs.or(self.jobs).unwrap_or(1),
            out: pick_path(&flags.out, &self.out),
            format: pick_str(&flags.format, &self.format),
            buckets,
            words,
            cv_folds: flags.cv_folds.or(self.cv_folds).unwrap_or(5),
            stratify: flags.stratify || self.stratify.unwrap_or(false),
            content_denominator: flags.content_denominator
                || self.content_denominator.unwrap_or(false),
            na_feature: flags.na_feature || self.na_feature.unwrap_or(false),
            svr,
        })
    }
}

/// Fully resolved options.
#[derive(Debug, Clone, Serialize)]
pub struct Merged {
    pub lexicon: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub backend: BackendChoice,
    pub policy: PermutationPolicy,
    pub context: ContextMode,
    pub label_style: LabelStyle,
    pub seed: u64,
    pub cache: Option<PathBuf>,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub buckets: Vec<usize>,
    pub words: Vec<String>,
    pub cv_folds: usize,
    pub stratify: bool,
    pub content_denominator: bool,
    pub na_feature: bool,
    pub svr: SvrParams,
}

impl Merged {
    pub fn needs_api_key(&self) -> bool {
        self.methods.contains(&Method::Llm)
            && matches!(self.backend, BackendChoice::HttpOpenAiCompatible { .. })
    }

    pub fn require_lexicon(&self) -> anyhow::Result<PathBuf> {
        self.lexicon
            .clone()
            .context("missing --lexicon <path> (or `lexicon` in the config file)")
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            denominator: if self.content_denominator {
                DenominatorMode::ContentOnly
            } else {
                DenominatorMode::NonPunctuation
            },
            include_na_feature: self.na_feature,
        }
    }

    pub fn to_experiment_config(&self, experiment: &str) -> anyhow::Result<ExperimentConfig> {
        let lexicon = self.require_lexicon()?;
        let out_dir = self
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("lexeval-out").join(experiment));
        let mut config = ExperimentConfig::new(experiment, lexicon, out_dir);
        let mut corpus = Vec::new();
        if let Some(input) = &self.input {
            corpus.push(input.clone());
        }
        if let Some(gold) = &self.gold {
            corpus.push(gold.clone());
        }
        config.corpus = corpus;
        if let Some(test) = &self.test {
            config.test_corpus = vec![test.clone()];
        }
        config.scores = self.scores.clone();
        config.methods = self.methods.clone();
        config.backend = self.backend.clone();
        config.policy = self.policy;
        config.context_mode = self.context;
        config.label_style = self.label_style;
        config.seed = self.seed;
        config.buckets = self.buckets.clone();
        config.jobs = self.jobs;
        config.cache = self.cache.clone();
        config.target_words = self.words.clone();
        config.svr = self.svr;
        config.cv_folds = self.cv_folds;
        config.stratify = self.stratify;
        config.features = self.feature_config();
        config.command_line = std::env::args().collect::<Vec<_>>().join(" ");
        Ok(config)
    }
}

fn parse_methods(spec: &str) -> anyhow::Result<Vec<Method>> {
    spec.split(',')
        .map(|m| match m.trim() {
            "llm" => Ok(Method::Llm),
            "pos" => Ok(Method::Pos),
            "random" => Ok(Method::Random),
            other => bail!("unknown method {other:?}; expected llm, pos, or random"),
        })
        .collect()
}

fn parse_backend(kind: &str, model: &str, api_base: &str) -> anyhow::Result<BackendChoice> {
    Ok(match kind {
        "http" | "http-openai-compatible" => BackendChoice::HttpOpenAiCompatible {
            model: model.to_string(),
            api_base: api_base.to_string(),
            parallelism: 4,
        },
        "mock-uniform" => BackendChoice::MockUniform,
        "mock-positional" => BackendChoice::MockPositional,
        "mock-oracle" => BackendChoice::MockOracle,
        other => bail!(
            "unknown --backend {other:?}; expected http, mock-uniform, mock-positional, or mock-oracle"
        ),
    })
}

fn parse_policy(spec: &str, seed: u64) -> anyhow::Result<PermutationPolicy> {
    if spec == "full" {
        let mut policy = PermutationPolicy::full();
        policy.seed = seed;
        return Ok(policy);
    }
    if spec == "none" {
        let mut policy = PermutationPolicy::none();
        policy.seed = seed;
        return Ok(policy);
    }
    if let Some(n) = spec.strip_prefix("sample:") {
        let sample_size: usize = n
            .parse()
            .with_context(|| format!("invalid sample size in --permutations {spec:?}"))?;
        return Ok(PermutationPolicy::sample(sample_size, seed));
    }
    if spec == "sample" {
        return Ok(PermutationPolicy::sample(10, seed));
    }
    bail!("unknown --permutations {spec:?}; expected full, sample:N, or none");
}
