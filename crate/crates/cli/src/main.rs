//! lexeval — CEFR vocabulary assessment toolkit.
//!
//! Subcommands cover lexicon ingest and statistics, per-word annotation
//! (LLM, PoS baseline, random baseline), word-level evaluation against gold
//! corpora, the semantic-understanding experiment, essay features and
//! essay-level evaluation, level-usage distribution exports, lexicon
//! consistency, and report rendering.

mod opts;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use lexeval_core::annotate::WordAnnotation;
use lexeval_core::assess::{level_proportions, EssayFeatures};
use lexeval_core::experiments::{
    self, run_consistency, run_essay_eval, run_semantic_eval, ExperimentResult,
};
use lexeval_core::lexicon::Lexicon;
use lexeval_core::report;
use lexeval_core::textproc::read_gold_file;

use opts::{CommonOpts, Defaults, Merged};

#[derive(Parser)]
#[command(
    name = "lexeval",
    version,
    about = "Word-level CEFR vocabulary assessment against a graded lexicon",
    propagate_version = true
)]
struct Cli {
    /// Print the fully merged configuration (defaults < config file < flags)
    /// and exit.
    #[arg(long, global = true)]
    show_config: bool,

    /// JSON config file supplying defaults for the common flags.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a lexicon; optionally print polysemy statistics.
    Ingest(IngestArgs),
    /// Print polysemy statistics for a lexicon.
    Stats(PlainArgs),
    /// Annotate a document or corpus with per-word CEFR labels.
    Annotate(AnnotateArgs),
    /// Evaluate annotation files against a gold corpus (accuracy + F1).
    EvalWords(EvalWordsArgs),
    /// Semantic understanding: sense selection over lexicon examples.
    SemanticEval(PlainArgs),
    /// Turn an annotation file into per-essay proportion features.
    EssayFeatures(PlainArgs),
    /// Essay-level evaluation: naive composite, SVR CV, curves, eCDF.
    EssayEval(PlainArgs),
    /// Export cumulative level-usage curves and AUC eCDFs.
    Distribution(PlainArgs),
    /// Level-or-above consistency for target words.
    Consistency(PlainArgs),
    /// Re-render a results.json as json, tsv, or html.
    Report(ReportArgs),
}

#[derive(Args)]
struct PlainArgs {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Also print the polysemy statistics table.
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct AnnotateArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Keep going after scoring failures (failed tokens fall back to N/A).
    #[arg(long)]
    keep_partial: bool,
}

#[derive(Args)]
struct EvalWordsArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Annotation file (JSON lines) to score against the gold corpus.
    #[arg(long, value_name = "PATH")]
    pred: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Results file produced by a runner.
    #[arg(long, value_name = "PATH")]
    results: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let defaults = Defaults::load(cli.config.as_deref())?;
    let common = match &cli.command {
        Command::Ingest(a) => &a.common,
        Command::Stats(a) => &a.common,
        Command::Annotate(a) => &a.common,
        Command::EvalWords(a) => &a.common,
        Command::SemanticEval(a) => &a.common,
        Command::EssayFeatures(a) => &a.common,
        Command::EssayEval(a) => &a.common,
        Command::Distribution(a) => &a.common,
        Command::Consistency(a) => &a.common,
        Command::Report(a) => &a.common,
    };
    let merged = defaults.merge(common)?;
    if cli.show_config {
        println!("{}", serde_json::to_string_pretty(&merged)?);
        return Ok(ExitCode::SUCCESS);
    }
    // The http backend needs credentials; catch that before any work starts.
    if merged.needs_api_key() && std::env::var("LEXEVAL_API_KEY").is_err() {
        eprintln!(
            "error: --backend http requires the LEXEVAL_API_KEY environment variable.\n\
             Export an API key, or choose an offline backend:\n\
             --backend mock-uniform | mock-positional | mock-oracle"
        );
        return Ok(ExitCode::from(2));
    }

    match cli.command {
        Command::Ingest(args) => cmd_ingest(&merged, args.stats),
        Command::Stats(_) => cmd_ingest(&merged, true),
        Command::Annotate(args) => cmd_annotate(&merged, args.keep_partial),
        Command::EvalWords(args) => cmd_eval_words(&merged, &args.pred),
        Command::SemanticEval(_) => {
            let config = merged.to_experiment_config("semantic-eval")?;
            let result = run_semantic_eval(&config)?;
            print!("{}", report::render_semantic_table(&result));
            Ok(ExitCode::SUCCESS)
        }
        Command::EssayFeatures(_) => cmd_essay_features(&merged),
        Command::EssayEval(_) => {
            let config = merged.to_experiment_config("essay-eval")?;
            let result = run_essay_eval(&config)?;
            print!("{}", report::render_essay_tables(&result));
            Ok(ExitCode::SUCCESS)
        }
        Command::Distribution(_) => {
            // Distribution is the curve/eCDF slice of the essay pipeline;
            // correlation cells may come back NA on degenerate corpora.
            let config = merged.to_experiment_config("distribution")?;
            let result = run_essay_eval(&config)?;
            print!("{}", report::render_curves_tsv(&result));
            Ok(ExitCode::SUCCESS)
        }
        Command::Consistency(_) => {
            let config = merged.to_experiment_config("consistency")?;
            let result = run_consistency(&config)?;
            print!("{}", report::render_consistency_table(&result));
            Ok(ExitCode::SUCCESS)
        }
        Command::Report(args) => cmd_report(&merged, &args.results),
    }
}

fn cmd_ingest(merged: &Merged, stats: bool) -> anyhow::Result<ExitCode> {
    let lexicon_path = merged.require_lexicon()?;
    let lexicon = Lexicon::from_path(&lexicon_path)
        .with_context(|| format!("failed to ingest {}", lexicon_path.display()))?;
    println!(
        "ingested {}: {} entries, {} lemmas indexed (version {})",
        lexicon_path.display(),
        lexicon.entries().len(),
        lexicon.lemmas().count(),
        lexicon.meta().version
    );
    if let Some(out_dir) = &merged.out {
        std::fs::create_dir_all(out_dir)?;
        let canonical = out_dir.join("lexicon.jsonl");
        std::fs::write(&canonical, lexicon.to_jsonl())?;
        println!("canonical form written to {}", canonical.display());
    }
    if stats {
        let stats = lexicon.stats()?;
        print!("{}", report::render_stats_table(&stats));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_annotate(merged: &Merged, keep_partial: bool) -> anyhow::Result<ExitCode> {
    let mut config = merged.to_experiment_config("annotate")?;
    config.keep_partial = keep_partial;
    let result = experiments::run_annotate(&config)?;
    println!(
        "annotated {} documents ({} tokens) with method {} -> {}",
        result.documents,
        result.tokens,
        result.method,
        result.output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval_words(merged: &Merged, pred: &PathBuf) -> anyhow::Result<ExitCode> {
    let gold_path = merged
        .gold
        .clone()
        .or_else(|| merged.input.clone())
        .context("eval-words needs --gold <corpus.tsv>")?;
    let docs = read_gold_file(&gold_path)?;
    let body = std::fs::read_to_string(pred)
        .with_context(|| format!("failed to read {}", pred.display()))?;
    let mut by_doc: std::collections::BTreeMap<String, Vec<WordAnnotation>> = Default::default();
    let mut method = None;
    for line in body.lines().filter(|l| !l.trim().is_empty()) {
        let annotation: WordAnnotation = serde_json::from_str(line)?;
        method.get_or_insert(annotation.method);
        by_doc
            .entry(annotation.doc_id.clone())
            .or_default()
            .push(annotation);
    }
    let mut per_doc = Vec::new();
    for doc in &docs {
        let mut annotations = by_doc.remove(&doc.doc_id).unwrap_or_default();
        annotations.sort_by_key(|a| (a.sentence_index, a.token_index));
        per_doc.push(annotations);
    }
    let eval = experiments::evaluate_method(
        &docs,
        &per_doc,
        method.context("prediction file is empty")?,
    )?;
    let result = experiments::WordlevelEvalResult {
        methods: vec![eval],
        documents: docs.len(),
        tokens: docs.iter().map(|d| d.token_count()).sum(),
    };
    print!("{}", report::render_wordlevel_tables(&result));
    if let Some(out_dir) = &merged.out {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join("results.json");
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&ExperimentResult::Wordlevel(result))? + "\n",
        )?;
        println!("results written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_essay_features(merged: &Merged) -> anyhow::Result<ExitCode> {
    let input = merged
        .input
        .clone()
        .context("essay-features needs --in <annotations.jsonl>")?;
    let body = std::fs::read_to_string(&input)
        .with_context(|| format!("failed to read {}", input.display()))?;
    let mut by_doc: std::collections::BTreeMap<String, Vec<WordAnnotation>> = Default::default();
    for line in body.lines().filter(|l| !l.trim().is_empty()) {
        let annotation: WordAnnotation = serde_json::from_str(line)?;
        by_doc
            .entry(annotation.doc_id.clone())
            .or_default()
            .push(annotation);
    }
    if by_doc.is_empty() {
        bail!("{} holds no annotations", input.display());
    }
    let mut features: Vec<EssayFeatures> = Vec::new();
    for annotations in by_doc.values() {
        features.push(level_proportions(annotations, &merged.feature_config())?);
    }
    let mut out = String::new();
    for feature in &features {
        out.push_str(&serde_json::to_string(feature)?);
        out.push('\n');
    }
    match &merged.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join("features.jsonl");
            std::fs::write(&path, out)?;
            println!(
                "features for {} documents -> {}",
                features.len(),
                path.display()
            );
        }
        None => print!("{out}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(merged: &Merged, results: &PathBuf) -> anyhow::Result<ExitCode> {
    let body = std::fs::read_to_string(results)
        .with_context(|| format!("failed to read {}", results.display()))?;
    let parsed: ExperimentResult = serde_json::from_str(&body)
        .with_context(|| format!("{} is not a recognized results file", results.display()))?;
    let out_dir = merged.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    let format = merged.format.as_deref().unwrap_or("html");
    let written = match format {
        "json" => {
            let path = out_dir.join("report.json");
            std::fs::write(&path, serde_json::to_string_pretty(&parsed)? + "\n")?;
            path
        }
        "tsv" => {
            let path = out_dir.join("report.tsv");
            let body = match &parsed {
                ExperimentResult::Essay(result) => {
                    report::render_curves_tsv(result) + "\n" + &report::render_ecdf_tsv(result)
                }
                ExperimentResult::Wordlevel(result) => report::render_wordlevel_tables(result),
                ExperimentResult::Semantic(result) => report::render_semantic_table(result),
                ExperimentResult::Consistency(result) => {
                    report::render_consistency_table(result)
                }
            };
            std::fs::write(&path, body)?;
            path
        }
        "html" => {
            let path = out_dir.join("report.html");
            let body = match &parsed {
                ExperimentResult::Essay(result) => report::render_essay_html(result),
                ExperimentResult::Wordlevel(result) => report::render_wordlevel_html(result),
                ExperimentResult::Semantic(result) => report::render_semantic_html(result),
                ExperimentResult::Consistency(result) => {
                    report::render_consistency_html(result)
                }
            };
            std::fs::write(&path, body)?;
            path
        }
        other => bail!("unknown --format {other:?}; expected json, tsv, or html"),
    };
    println!("report written to {}", written.display());
    Ok(ExitCode::SUCCESS)
}
