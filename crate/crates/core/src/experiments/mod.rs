//! Reproducible experiment runners: semantic understanding, word-level
//! prediction, essay-level prediction, and lexicon consistency.
//!
//! Every runner reads its inputs from an [`ExperimentConfig`], writes a
//! structured results file, rendered tables, and plot data into the output
//! directory, and finishes with a run manifest recording the config hash,
//! seed, lexicon version, backend identity, and cache hit/miss counts.
//! Result files are byte-identical across reruns with the same inputs;
//! timestamps live only in the manifest.

mod consistency;
mod essay;
mod semantic;
mod wordlevel;

pub use consistency::{run_consistency, select_target_words, ConsistencyResult, ThresholdRow, WordConsistency};
pub use essay::{run_essay_eval, EssayEvalResult, EssayMethodResult, SplitRow};
pub use semantic::{
    enumerate_semantic_items, run_semantic_eval, BucketAccuracy, SemanticEvalResult, SemanticItem,
};
pub use wordlevel::{evaluate_method, run_wordlevel_eval, MethodEval, WordlevelEvalResult};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::{AnnotateError, Method};
use crate::assess::{AssessError, FeatureConfig, SvrParams};
use crate::cefr::CefrLevel;
use crate::lexicon::{Lexicon, LexiconError};
use crate::llm::{
    Backend, Cache, ContextMode, HttpBackend, HttpConfig, LabelStyle, LlmError, MockOracle,
    MockPositional, MockUniform, PermutationPolicy, Scorer,
};
use crate::metrics::MetricsError;
use crate::textproc::{Analyzer, RuleAnalyzer, TextError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error(transparent)]
    Assess(#[from] AssessError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Which backend the runners talk to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendChoice {
    HttpOpenAiCompatible {
        model: String,
        api_base: String,
        parallelism: usize,
    },
    MockUniform,
    MockPositional,
    MockOracle,
}

/// One fully specified experiment run.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub lexicon: PathBuf,
    pub corpus: Vec<PathBuf>,
    /// Held-out corpus for the train/test essay protocol.
    pub test_corpus: Vec<PathBuf>,
    pub scores: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub backend: BackendChoice,
    pub policy: PermutationPolicy,
    pub context_mode: ContextMode,
    pub label_style: LabelStyle,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Option-count buckets for the semantic experiment.
    pub buckets: Vec<usize>,
    pub jobs: usize,
    pub cache: Option<PathBuf>,
    pub keep_partial: bool,
    pub target_words: Vec<String>,
    pub thresholds: Vec<CefrLevel>,
    pub svr: SvrParams,
    pub cv_folds: usize,
    pub stratify: bool,
    pub features: FeatureConfig,
    /// Recorded verbatim in the manifest.
    pub command_line: String,
}

impl ExperimentConfig {
    pub fn new(
        experiment: impl Into<String>,
        lexicon: impl Into<PathBuf>,
        out_dir: impl Into<PathBuf>,
    ) -> ExperimentConfig {
        ExperimentConfig {
            experiment: experiment.into(),
            lexicon: lexicon.into(),
            corpus: Vec::new(),
            test_corpus: Vec::new(),
            scores: None,
            methods: vec![Method::Pos],
            backend: BackendChoice::MockUniform,
            policy: PermutationPolicy::none(),
            context_mode: ContextMode::Sentence,
            label_style: LabelStyle::Numbers,
            seed: 0,
            out_dir: out_dir.into(),
            buckets: vec![3, 4, 5, 6],
            jobs: 1,
            cache: None,
            keep_partial: false,
            target_words: Vec::new(),
            thresholds: vec![CefrLevel::A2, CefrLevel::B1, CefrLevel::B2],
            svr: SvrParams::default(),
            cv_folds: 5,
            stratify: false,
            features: FeatureConfig::default(),
            command_line: String::new(),
        }
    }

    pub fn hash(&self) -> String {
        let encoded = serde_json::to_string(self).expect("config serializes");
        crate::util::sha256_hex(&[encoded.as_bytes()])
    }
}

/// Scorer plus, when the backend is the oracle mock, a handle for
/// registering gold answers.
pub struct BuiltBackend {
    pub scorer: Scorer,
    pub oracle: Option<Arc<MockOracle>>,
}

/// Tagged union of every runner's result, as written to results.json.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentResult {
    Semantic(SemanticEvalResult),
    Wordlevel(WordlevelEvalResult),
    Essay(EssayEvalResult),
    Consistency(ConsistencyResult),
}

/// The annotation method a config selects, wired to its dependencies.
pub(crate) fn method_runner<'a>(
    method: Method,
    config: &ExperimentConfig,
    scorer: &'a crate::llm::Scorer,
) -> crate::annotate::AnnotateMethod<'a> {
    use crate::annotate::{AnnotateMethod, LlmOptions};
    match method {
        Method::Llm => AnnotateMethod::Llm {
            scorer,
            options: LlmOptions {
                policy: config.policy,
                context_mode: config.context_mode,
                label_style: config.label_style,
            },
        },
        Method::Pos => AnnotateMethod::PosBaseline,
        Method::Random => AnnotateMethod::Random { seed: config.seed },
    }
}

/// Outcome of a plain annotation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotateRunResult {
    pub documents: usize,
    pub tokens: usize,
    pub method: Method,
    pub output: PathBuf,
}

/// Annotate a corpus with the first configured method and write the
/// annotation file plus a manifest into the output directory.
pub fn run_annotate(config: &ExperimentConfig) -> Result<AnnotateRunResult, ExperimentError> {
    let context = RunContext::start(config);
    let lexicon = load_lexicon(config)?;
    let analyzer = default_analyzer();
    let docs = load_corpus(&config.corpus, &analyzer)?;
    if docs.is_empty() {
        return Err(ExperimentError::Config(
            "no input documents; pass --in <file-or-dir>".to_string(),
        ));
    }
    let built = build_backend(config)?;
    if let Some(oracle) = &built.oracle {
        wordlevel::register_oracle_for_corpus(oracle, &docs, &lexicon);
    }
    let method = config.methods.first().copied().unwrap_or(Method::Pos);
    let runner = method_runner(method, config, &built.scorer);
    let annotations =
        wordlevel::annotate_corpus(&docs, &lexicon, &runner, config.jobs, config.keep_partial)?;
    std::fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e))?;
    let output = config.out_dir.join(format!("annotations-{method}.jsonl"));
    wordlevel::write_annotations(&output, &annotations)?;
    context.finish(config, &lexicon, Some(&built.scorer))?;
    Ok(AnnotateRunResult {
        documents: docs.len(),
        tokens: annotations.iter().map(|d| d.len()).sum(),
        method,
        output,
    })
}

/// Construct the configured backend, cache, and scorer.
pub fn build_backend(config: &ExperimentConfig) -> Result<BuiltBackend, ExperimentError> {
    let (backend, oracle): (Box<dyn Backend>, Option<Arc<MockOracle>>) = match &config.backend {
        BackendChoice::MockUniform => (Box::new(MockUniform), None),
        BackendChoice::MockPositional => (Box::new(MockPositional::default()), None),
        BackendChoice::MockOracle => {
            let oracle = Arc::new(MockOracle::new());
            (Box::new(oracle.clone()), Some(oracle))
        }
        BackendChoice::HttpOpenAiCompatible {
            model,
            api_base,
            parallelism,
        } => {
            let api_key = std::env::var("LEXEVAL_API_KEY").map_err(|_| {
                ExperimentError::Config(
                    "the http backend requires the LEXEVAL_API_KEY environment variable; \
                     set it or pick a mock backend (--backend mock-uniform|mock-positional|mock-oracle)"
                        .to_string(),
                )
            })?;
            let mut http = HttpConfig::new(model.clone(), api_base.clone(), api_key);
            http.parallelism = *parallelism;
            (Box::new(HttpBackend::new(http)?), None)
        }
    };
    let mut scorer = Scorer::new(backend);
    if let Some(path) = &config.cache {
        scorer = scorer.with_cache(Cache::open(path)?);
    }
    Ok(BuiltBackend { scorer, oracle })
}

/// Written atomically at the end of every run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: String,
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub lexicon_version: String,
    pub backend_identity: String,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub started_at: String,
    pub finished_at: String,
    pub tool_version: String,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub(crate) struct RunContext {
    pub config_hash: String,
    pub started_at: String,
    pub notes: Vec<String>,
}

impl RunContext {
    pub fn start(config: &ExperimentConfig) -> RunContext {
        RunContext {
            config_hash: config.hash(),
            started_at: chrono::Utc::now().to_rfc3339(),
            notes: Vec::new(),
        }
    }

    pub fn finish(
        mut self,
        config: &ExperimentConfig,
        lexicon: &Lexicon,
        scorer: Option<&Scorer>,
    ) -> Result<RunManifest, ExperimentError> {
        let (hits, misses) = scorer.map(|s| s.cache_counts()).unwrap_or((0, 0));
        if config.label_style == LabelStyle::Numbers {
            // Multi-digit numeric labels may tokenize into several pieces on
            // some backends; surface that in the run metadata.
            self.notes.push(
                "labels=numbers: options beyond 9 render multi-digit labels; \
                 use --labels letters if the backend tokenizes digits separately"
                    .to_string(),
            );
        }
        let manifest = RunManifest {
            command_line: config.command_line.clone(),
            experiment: config.experiment.clone(),
            config_hash: self.config_hash,
            seed: config.seed,
            lexicon_version: lexicon.meta().version.clone(),
            backend_identity: scorer
                .map(|s| s.backend_identity())
                .unwrap_or_else(|| "none".to_string()),
            cache_hits: hits,
            cache_misses: misses,
            started_at: self.started_at,
            finished_at: chrono::Utc::now().to_rfc3339(),
            tool_version: crate::TOOL_VERSION.to_string(),
            notes: self.notes,
        };
        write_json_atomic(&config.out_dir.join("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}

pub(crate) fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let body = serde_json::to_string_pretty(value).expect("result serializes");
    write_text_atomic(path, &(body + "\n"))
}

pub(crate) fn write_text_atomic(path: &Path, body: &str) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, body).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Load a corpus: `.tsv`/`.gold` files parse as pre-tokenized gold
/// documents, anything else is analyzed as plain text. Directories expand
/// to their sorted file listing.
pub fn load_corpus(
    paths: &[PathBuf],
    analyzer: &dyn Analyzer,
) -> Result<Vec<crate::textproc::AnalyzedDocument>, ExperimentError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut listing: Vec<PathBuf> = std::fs::read_dir(path)
                .map_err(|e| io_err(path, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| {
                    matches!(
                        p.extension().and_then(|e| e.to_str()),
                        Some("tsv") | Some("gold") | Some("txt")
                    )
                })
                .collect();
            listing.sort();
            files.extend(listing);
        } else {
            files.push(path.clone());
        }
    }
    let mut docs = Vec::new();
    for file in files {
        match file.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("gold") => {
                docs.extend(crate::textproc::read_gold_file(&file)?);
            }
            _ => {
                let text = std::fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
                let doc_id = file
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("doc")
                    .to_string();
                docs.push(analyzer.analyze(&doc_id, &text)?);
            }
        }
    }
    Ok(docs)
}

/// Per-document numeric scores: a holistic column, optional named analytic
/// columns, and an optional `level` column carrying CEFR labels.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    pub holistic: BTreeMap<String, f64>,
    pub levels: BTreeMap<String, CefrLevel>,
    pub analytic: BTreeMap<String, BTreeMap<String, f64>>,
    pub analytic_order: Vec<String>,
}

/// Parse a tab-separated scores file with a header row. The first column is
/// `doc_id`; `holistic` is required; `level` is recognized specially.
pub fn load_scores(path: &Path) -> Result<ScoreTable, ExperimentError> {
    let body = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = body.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| ExperimentError::Config(format!("{}: empty scores file", path.display())))?
        .1;
    let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
    if columns.first() != Some(&"doc_id") {
        return Err(ExperimentError::Config(format!(
            "{}: scores header must start with doc_id",
            path.display()
        )));
    }
    let holistic_col = columns.iter().position(|c| *c == "holistic").ok_or_else(|| {
        ExperimentError::Config(format!("{}: missing score column `holistic`", path.display()))
    })?;
    let level_col = columns.iter().position(|c| *c == "level");
    let mut table = ScoreTable::default();
    for (i, column) in columns.iter().enumerate() {
        if i == 0 || i == holistic_col || Some(i) == level_col {
            continue;
        }
        table.analytic_order.push(column.to_string());
        table.analytic.insert(column.to_string(), BTreeMap::new());
    }
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(ExperimentError::Config(format!(
                "{}:{}: expected {} columns, found {}",
                path.display(),
                lineno + 1,
                columns.len(),
                cells.len()
            )));
        }
        let doc_id = cells[0].to_string();
        let holistic: f64 = cells[holistic_col].parse().map_err(|_| {
            ExperimentError::Config(format!(
                "{}:{}: invalid holistic score {:?}",
                path.display(),
                lineno + 1,
                cells[holistic_col]
            ))
        })?;
        table.holistic.insert(doc_id.clone(), holistic);
        if let Some(col) = level_col {
            let level: CefrLevel = cells[col].parse().map_err(|_| {
                ExperimentError::Config(format!(
                    "{}:{}: invalid level {:?}",
                    path.display(),
                    lineno + 1,
                    cells[col]
                ))
            })?;
            table.levels.insert(doc_id.clone(), level);
        }
        for (i, column) in columns.iter().enumerate() {
            if i == 0 || i == holistic_col || Some(i) == level_col {
                continue;
            }
            let value: f64 = cells[i].parse().map_err(|_| {
                ExperimentError::Config(format!(
                    "{}:{}: invalid {} score {:?}",
                    path.display(),
                    lineno + 1,
                    column,
                    cells[i]
                ))
            })?;
            table
                .analytic
                .get_mut(*column)
                .expect("column registered")
                .insert(doc_id.clone(), value);
        }
    }
    Ok(table)
}

/// Fill essay scores and levels from a score table where the documents do
/// not already carry them.
pub fn apply_scores(docs: &mut [crate::textproc::AnalyzedDocument], table: &ScoreTable) {
    for doc in docs {
        if doc.essay_score.is_none() {
            doc.essay_score = table.holistic.get(&doc.doc_id).copied();
        }
        if doc.essay_level.is_none() {
            doc.essay_level = table.levels.get(&doc.doc_id).copied();
        }
    }
}

/// The analyzer every runner uses for plain-text corpora and lexicon ingest.
pub fn default_analyzer() -> RuleAnalyzer {
    RuleAnalyzer::bundled()
}

/// Load the configured lexicon.
pub fn load_lexicon(config: &ExperimentConfig) -> Result<Lexicon, ExperimentError> {
    Ok(Lexicon::from_path(&config.lexicon)?)
}
