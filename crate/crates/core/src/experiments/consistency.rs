//! Lexicon consistency: reverse the prediction direction and ask whether
//! words predicted at a level actually appear in essays at that level or
//! above, per target word and threshold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotate::{Method, WordAnnotation};
use crate::cefr::{CefrLevel, TokenClass};
use crate::lexicon::Lexicon;
use crate::metrics::consistency_accuracy;
use crate::textproc::AnalyzedDocument;

use super::{
    apply_scores, build_backend, default_analyzer, io_err, load_corpus, load_scores,
    wordlevel::annotate_corpus, write_json_atomic, write_text_atomic, ExperimentConfig,
    ExperimentError, RunContext,
};

/// One threshold row of the consistency table. `accuracy` is absent when no
/// occurrence qualifies (rendered as "-").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub threshold: CefrLevel,
    pub accuracy: Option<f64>,
    pub qualifying: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordConsistency {
    pub word: String,
    pub occurrences: usize,
    pub rows: Vec<ThresholdRow>,
    /// Per essay level, the count of occurrences per predicted level.
    pub distribution: BTreeMap<String, BTreeMap<String, usize>>,
    /// Essays containing the word, per essay level.
    pub essays_by_level: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsistencyResult {
    pub method: Method,
    pub words: Vec<WordConsistency>,
}

/// The most frequent content-token lemmas with more than one lexicon
/// meaning, for picking consistency targets.
pub fn select_target_words(
    docs: &[AnalyzedDocument],
    lexicon: &Lexicon,
    count: usize,
) -> Vec<String> {
    let mut frequency: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        for (_, _, token) in doc.positions() {
            if token.klass == TokenClass::Content && lexicon.lookup(&token.lemma).len() > 1 {
                *frequency.entry(token.lemma.clone()).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(String, usize)> = frequency.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.into_iter().take(count).map(|(w, _)| w).collect()
}

fn word_report(
    word: &str,
    docs: &[AnalyzedDocument],
    annotations: &[Vec<WordAnnotation>],
    thresholds: &[CefrLevel],
) -> Result<WordConsistency, ExperimentError> {
    let mut occurrences: Vec<(CefrLevel, CefrLevel)> = Vec::new();
    let mut distribution: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut essays_by_level: BTreeMap<String, usize> = BTreeMap::new();
    for (doc, doc_annotations) in docs.iter().zip(annotations) {
        let Some(essay_level) = doc.essay_level else {
            return Err(ExperimentError::Config(format!(
                "document {} has no essay level; consistency needs per-essay CEFR levels",
                doc.doc_id
            )));
        };
        let mut seen_in_doc = false;
        for annotation in doc_annotations {
            if annotation.lemma != word {
                continue;
            }
            let Some(level) = annotation.label.level() else {
                continue;
            };
            seen_in_doc = true;
            occurrences.push((level, essay_level));
            *distribution
                .entry(essay_level.label().to_string())
                .or_default()
                .entry(level.label().to_string())
                .or_insert(0) += 1;
        }
        if seen_in_doc {
            *essays_by_level
                .entry(essay_level.label().to_string())
                .or_insert(0) += 1;
        }
    }
    if occurrences.is_empty() {
        return Err(ExperimentError::Config(format!(
            "target word {word:?} does not occur (with a predicted level) in the corpus"
        )));
    }
    let rows = thresholds
        .iter()
        .map(|&threshold| {
            let qualifying = occurrences
                .iter()
                .filter(|(pred, _)| *pred >= threshold)
                .count();
            ThresholdRow {
                threshold,
                accuracy: consistency_accuracy(&occurrences, threshold).ok(),
                qualifying,
            }
        })
        .collect();
    Ok(WordConsistency {
        word: word.to_string(),
        occurrences: occurrences.len(),
        rows,
        distribution,
        essays_by_level,
    })
}

pub fn run_consistency(config: &ExperimentConfig) -> Result<ConsistencyResult, ExperimentError> {
    let context = RunContext::start(config);
    let lexicon = super::load_lexicon(config)?;
    let analyzer = default_analyzer();
    let mut docs = load_corpus(&config.corpus, &analyzer)?;
    if docs.is_empty() {
        return Err(ExperimentError::Config("empty corpus".to_string()));
    }
    if let Some(path) = &config.scores {
        let table = load_scores(path)?;
        apply_scores(&mut docs, &table);
    }
    let method = config.methods.first().copied().unwrap_or(Method::Pos);
    let built = build_backend(config)?;
    let runner = super::method_runner(method, config, &built.scorer);
    let annotations = annotate_corpus(&docs, &lexicon, &runner, config.jobs, config.keep_partial)?;

    let words = if config.target_words.is_empty() {
        select_target_words(&docs, &lexicon, 2)
    } else {
        config.target_words.clone()
    };
    if words.is_empty() {
        return Err(ExperimentError::Config(
            "no target words: none given and no multi-meaning lemma occurs in the corpus"
                .to_string(),
        ));
    }
    let mut reports = Vec::new();
    for word in &words {
        reports.push(word_report(word, &docs, &annotations, &config.thresholds)?);
    }
    let result = ConsistencyResult {
        method,
        words: reports,
    };
    std::fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e))?;
    write_json_atomic(
        &config.out_dir.join("results.json"),
        &super::ExperimentResult::Consistency(result.clone()),
    )?;
    write_text_atomic(
        &config.out_dir.join("tables.txt"),
        &crate::report::render_consistency_table(&result),
    )?;
    context.finish(config, &lexicon, Some(&built.scorer))?;
    Ok(result)
}
