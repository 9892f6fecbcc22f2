//! Word-level CEFR prediction over a gold corpus: annotate every document
//! with each requested method and report accuracy (ambiguous /
//! non-ambiguous / all) plus the per-level F1 breakdown.

use serde::{Deserialize, Serialize};

use crate::annotate::{annotate_document_keep_partial, AnnotateMethod, Method, WordAnnotation};
use crate::cefr::{Ambiguity, WordLabel};
use crate::lexicon::Lexicon;
use crate::llm::{MockOracle, OptionId};
use crate::metrics::{per_level_f1, word_accuracy, AccuracyReport, LabelPrf};
use crate::textproc::AnalyzedDocument;
use crate::util::parallel_map;

use super::{
    build_backend, default_analyzer, io_err, load_corpus, write_json_atomic, write_text_atomic,
    ExperimentConfig, ExperimentError, RunContext,
};

/// Evaluation of one method over the corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodEval {
    pub method: Method,
    pub accuracy: AccuracyReport,
    pub f1_all: Vec<LabelPrf>,
    pub f1_ambiguous: Vec<LabelPrf>,
    pub f1_non_ambiguous: Vec<LabelPrf>,
    pub scored_tokens: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordlevelEvalResult {
    pub methods: Vec<MethodEval>,
    pub documents: usize,
    pub tokens: usize,
}

/// Register oracle answers for every gold-labeled content token: the first
/// candidate at the gold level, or NONE when the gold label is N/A.
pub fn register_oracle_for_corpus(
    oracle: &MockOracle,
    docs: &[AnalyzedDocument],
    lexicon: &Lexicon,
) {
    for doc in docs {
        for (s, t, token) in doc.positions() {
            if token.klass != crate::cefr::TokenClass::Content {
                continue;
            }
            let Some(gold) = doc.gold_label(s, t) else {
                continue;
            };
            let candidates = lexicon.lookup(&token.lemma);
            if candidates.is_empty() {
                continue;
            }
            let answer = match gold {
                WordLabel::Level(level) => candidates
                    .iter()
                    .find(|e| e.level == level)
                    .map(|e| OptionId::Entry(e.id.clone())),
                WordLabel::NotInLexicon => Some(OptionId::None),
                _ => None,
            };
            if let Some(answer) = answer {
                oracle.register(crate::annotate::task_key(&doc.doc_id, s, t), answer);
            }
        }
    }
}

/// Score a method's annotations against the corpus gold labels.
pub fn evaluate_method(
    docs: &[AnalyzedDocument],
    annotations: &[Vec<WordAnnotation>],
    method: Method,
) -> Result<MethodEval, ExperimentError> {
    let mut pred = Vec::new();
    let mut gold = Vec::new();
    let mut ambiguity = Vec::new();
    for (doc, doc_annotations) in docs.iter().zip(annotations) {
        let labels = doc.gold_labels.as_ref().ok_or_else(|| {
            ExperimentError::Config(format!(
                "document {} carries no gold labels; word-level evaluation needs a gold corpus",
                doc.doc_id
            ))
        })?;
        let flat_gold: Vec<WordLabel> = labels.iter().flatten().copied().collect();
        if flat_gold.len() != doc_annotations.len() {
            return Err(ExperimentError::Config(format!(
                "document {}: {} annotations for {} gold labels",
                doc.doc_id,
                doc_annotations.len(),
                flat_gold.len()
            )));
        }
        for (annotation, g) in doc_annotations.iter().zip(flat_gold) {
            pred.push(annotation.label);
            gold.push(g);
            ambiguity.push(annotation.ambiguity);
        }
    }
    let accuracy = word_accuracy(&pred, &gold, &ambiguity)?;
    let subset = |keep: &dyn Fn(Ambiguity) -> bool| -> (Vec<WordLabel>, Vec<WordLabel>) {
        let mut p = Vec::new();
        let mut g = Vec::new();
        for i in 0..pred.len() {
            if keep(ambiguity[i]) {
                p.push(pred[i]);
                g.push(gold[i]);
            }
        }
        (p, g)
    };
    let f1_all = per_level_f1(&pred, &gold)?;
    let (pa, ga) = subset(&|a| a == Ambiguity::Ambiguous);
    let f1_ambiguous = per_level_f1(&pa, &ga)?;
    let (pn, gn) = subset(&|a| a != Ambiguity::Ambiguous);
    let f1_non_ambiguous = per_level_f1(&pn, &gn)?;
    Ok(MethodEval {
        method,
        accuracy,
        f1_all,
        f1_ambiguous,
        f1_non_ambiguous,
        scored_tokens: accuracy.all.total,
    })
}

/// Annotate a corpus with one method, documents in parallel.
pub(crate) fn annotate_corpus(
    docs: &[AnalyzedDocument],
    lexicon: &Lexicon,
    method: &AnnotateMethod<'_>,
    jobs: usize,
    keep_partial: bool,
) -> Result<Vec<Vec<WordAnnotation>>, ExperimentError> {
    parallel_map(docs, jobs, |_, doc| {
        annotate_document_keep_partial(doc, lexicon, method, keep_partial)
            .map(|run| run.annotations)
            .map_err(ExperimentError::from)
    })
}

pub(crate) fn write_annotations(
    path: &std::path::Path,
    annotations: &[Vec<WordAnnotation>],
) -> Result<(), ExperimentError> {
    let mut body = String::new();
    for doc in annotations {
        for annotation in doc {
            body.push_str(&serde_json::to_string(annotation).expect("annotation serializes"));
            body.push('\n');
        }
    }
    write_text_atomic(path, &body)
}

pub fn run_wordlevel_eval(
    config: &ExperimentConfig,
) -> Result<WordlevelEvalResult, ExperimentError> {
    let context = RunContext::start(config);
    let lexicon = super::load_lexicon(config)?;
    let analyzer = default_analyzer();
    let docs = load_corpus(&config.corpus, &analyzer)?;
    if docs.is_empty() {
        return Err(ExperimentError::Config("empty corpus".to_string()));
    }
    let built = build_backend(config)?;
    if let Some(oracle) = &built.oracle {
        register_oracle_for_corpus(oracle, &docs, &lexicon);
    }
    std::fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e))?;

    let mut methods = Vec::new();
    for &method in &config.methods {
        let runner = super::method_runner(method, config, &built.scorer);
        let annotations =
            annotate_corpus(&docs, &lexicon, &runner, config.jobs, config.keep_partial)?;
        write_annotations(
            &config.out_dir.join(format!("annotations-{method}.jsonl")),
            &annotations,
        )?;
        methods.push(evaluate_method(&docs, &annotations, method)?);
    }
    let result = WordlevelEvalResult {
        methods,
        documents: docs.len(),
        tokens: docs.iter().map(|d| d.token_count()).sum(),
    };
    write_json_atomic(
        &config.out_dir.join("results.json"),
        &super::ExperimentResult::Wordlevel(result.clone()),
    )?;
    write_text_atomic(
        &config.out_dir.join("tables.txt"),
        &crate::report::render_wordlevel_tables(&result),
    )?;
    context.finish(config, &lexicon, Some(&built.scorer))?;
    Ok(result)
}
