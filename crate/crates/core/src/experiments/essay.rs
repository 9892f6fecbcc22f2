//! Essay-level proficiency prediction: per-word annotations become
//! per-level proportion features, the naive weighted composite, SVR
//! cross-validation, cumulative level-usage curves, and per-level eCDFs of
//! document AUC values. With a held-out test corpus, one SVR trained on the
//! training holistic scores is evaluated against the test holistic and
//! every analytic column.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotate::{Method, WordAnnotation};
use crate::assess::{
    cross_validate, fit_svr, level_proportions, naive_score, CorrelationPair, CvPlan,
    EssayFeatures,
};
use crate::cefr::CefrLevel;
use crate::metrics::{
    auc_trapezoid, cumulative_curve, cumulative_level_distribution, pearson, spearman,
    CurveSeries,
};
use crate::textproc::AnalyzedDocument;

use super::{
    apply_scores, build_backend, default_analyzer, io_err, load_corpus, load_scores,
    wordlevel::{annotate_corpus, write_annotations},
    write_json_atomic, write_text_atomic, ExperimentConfig, ExperimentError, RunContext,
};

/// One correlation row of the train/test protocol (holistic or analytic).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitRow {
    pub name: String,
    pub pcc: Option<f64>,
    pub src: Option<f64>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EssayMethodResult {
    pub method: Method,
    pub naive: Option<CorrelationPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naive_error: Option<String>,
    pub svr_cv: Option<CorrelationPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svr_cv_error: Option<String>,
    pub curves: Vec<CurveSeries>,
    /// Per essay level, the eCDF over per-document AUC values.
    pub ecdf_by_level: BTreeMap<String, Vec<(f64, f64)>>,
    /// Train/test rows (holistic first, then analytic columns).
    pub test_rows: Vec<SplitRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EssayEvalResult {
    pub methods: Vec<EssayMethodResult>,
    pub documents: usize,
    pub test_documents: usize,
}

fn features_for(
    annotations: &[Vec<WordAnnotation>],
    config: &ExperimentConfig,
) -> Result<Vec<EssayFeatures>, ExperimentError> {
    annotations
        .iter()
        .map(|doc| Ok(level_proportions(doc, &config.features)?))
        .collect()
}

/// Holistic scores for every document. `Ok(None)` when the corpus carries no
/// scores at all (a curves-only run); an error when only some are scored.
fn holistic_scores(docs: &[AnalyzedDocument]) -> Result<Option<Vec<f64>>, ExperimentError> {
    let scored: Vec<f64> = docs.iter().filter_map(|d| d.essay_score).collect();
    if scored.is_empty() {
        return Ok(None);
    }
    if scored.len() != docs.len() {
        let missing = docs
            .iter()
            .find(|d| d.essay_score.is_none())
            .map(|d| d.doc_id.clone())
            .unwrap_or_default();
        return Err(ExperimentError::Config(format!(
            "document {missing} has no holistic score; provide --scores or `# essay_score` headers"
        )));
    }
    Ok(Some(scored))
}

fn correlation_cells(
    predictions: &[f64],
    targets: &[f64],
    name: &str,
) -> SplitRow {
    let pcc = pearson(predictions, targets);
    let src = spearman(predictions, targets);
    let error = pcc
        .as_ref()
        .err()
        .or(src.as_ref().err())
        .map(|e| e.to_string());
    SplitRow {
        name: name.to_string(),
        pcc: pcc.ok(),
        src: src.ok(),
        n: targets.len(),
        error,
    }
}

fn curves_and_ecdf(
    docs: &[AnalyzedDocument],
    features: &[EssayFeatures],
) -> Result<(Vec<CurveSeries>, BTreeMap<String, Vec<(f64, f64)>>), ExperimentError> {
    let mut grouped: BTreeMap<CefrLevel, Vec<[f64; 6]>> = BTreeMap::new();
    let mut aucs: BTreeMap<CefrLevel, Vec<f64>> = BTreeMap::new();
    for (doc, feature) in docs.iter().zip(features) {
        let Some(level) = doc.essay_level else {
            continue;
        };
        grouped.entry(level).or_default().push(feature.proportions);
        let curve = cumulative_curve(&feature.proportions);
        aucs.entry(level).or_default().push(auc_trapezoid(&curve)?);
    }
    let curves = if grouped.is_empty() {
        Vec::new()
    } else {
        cumulative_level_distribution(&grouped)?
    };
    let ecdf_by_level = aucs
        .into_iter()
        .map(|(level, values)| (level.label().to_string(), crate::metrics::ecdf(&values)))
        .collect();
    Ok((curves, ecdf_by_level))
}

pub fn run_essay_eval(config: &ExperimentConfig) -> Result<EssayEvalResult, ExperimentError> {
    let context = RunContext::start(config);
    let lexicon = super::load_lexicon(config)?;
    let analyzer = default_analyzer();
    let mut docs = load_corpus(&config.corpus, &analyzer)?;
    if docs.is_empty() {
        return Err(ExperimentError::Config("empty corpus".to_string()));
    }
    let mut test_docs = load_corpus(&config.test_corpus, &analyzer)?;
    let table = match &config.scores {
        Some(path) => Some(load_scores(path)?),
        None => None,
    };
    if let Some(table) = &table {
        apply_scores(&mut docs, table);
        apply_scores(&mut test_docs, table);
    }
    let built = build_backend(config)?;
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
        let features = features_for(&annotations, config)?;
        let mut features_body = String::new();
        for feature in &features {
            features_body.push_str(&serde_json::to_string(feature).expect("feature serializes"));
            features_body.push('\n');
        }
        write_text_atomic(
            &config.out_dir.join(format!("features-{method}.jsonl")),
            &features_body,
        )?;

        let vectors: Vec<Vec<f64>> = features.iter().map(|f| f.vector(&config.features)).collect();
        let targets = holistic_scores(&docs)?;
        let (naive, naive_error, svr_cv, svr_cv_error) = match &targets {
            None => {
                let note = "no holistic scores provided; curves only".to_string();
                (None, Some(note.clone()), None, Some(note))
            }
            Some(targets) => {
                let (naive, naive_error) = match naive_score(&features, targets) {
                    Ok(pair) => (Some(pair), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                let plan = if config.stratify {
                    CvPlan::stratified(targets, config.cv_folds, config.seed)
                } else {
                    CvPlan::new(targets.len(), config.cv_folds, config.seed)
                };
                let (svr_cv, svr_cv_error) =
                    match cross_validate(&vectors, targets, &plan, &config.svr) {
                        Ok(outcome) => (
                            Some(CorrelationPair {
                                pcc: outcome.pcc,
                                src: outcome.src,
                                n: targets.len(),
                            }),
                            None,
                        ),
                        Err(e) => (None, Some(e.to_string())),
                    };
                (naive, naive_error, svr_cv, svr_cv_error)
            }
        };
        let (curves, ecdf_by_level) = curves_and_ecdf(&docs, &features)?;

        // Train/test protocol: one model on training holistic scores,
        // evaluated against the test holistic and each analytic column.
        let mut test_rows = Vec::new();
        if !test_docs.is_empty() {
            let train_targets = targets.as_ref().ok_or_else(|| {
                ExperimentError::Config(
                    "the train/test protocol needs holistic scores on the training corpus"
                        .to_string(),
                )
            })?;
            let test_annotations = annotate_corpus(
                &test_docs,
                &lexicon,
                &runner,
                config.jobs,
                config.keep_partial,
            )?;
            let test_features = features_for(&test_annotations, config)?;
            let test_vectors: Vec<Vec<f64>> = test_features
                .iter()
                .map(|f| f.vector(&config.features))
                .collect();
            let model = fit_svr(&vectors, train_targets, &config.svr)?;
            let predictions = model.predict(&test_vectors)?;
            let test_holistic = holistic_scores(&test_docs)?.ok_or_else(|| {
                ExperimentError::Config(
                    "the test corpus carries no holistic scores".to_string(),
                )
            })?;
            test_rows.push(correlation_cells(&predictions, &test_holistic, "Overall"));
            if let Some(table) = &table {
                for column in &table.analytic_order {
                    let scores = &table.analytic[column];
                    let mut aligned_pred = Vec::new();
                    let mut aligned_score = Vec::new();
                    for (doc, &prediction) in test_docs.iter().zip(&predictions) {
                        if let Some(&score) = scores.get(&doc.doc_id) {
                            aligned_pred.push(prediction);
                            aligned_score.push(score);
                        }
                    }
                    test_rows.push(correlation_cells(&aligned_pred, &aligned_score, column));
                }
            }
        }

        methods.push(EssayMethodResult {
            method,
            naive,
            naive_error,
            svr_cv,
            svr_cv_error,
            curves,
            ecdf_by_level,
            test_rows,
        });
    }

    let result = EssayEvalResult {
        methods,
        documents: docs.len(),
        test_documents: test_docs.len(),
    };
    write_json_atomic(
        &config.out_dir.join("results.json"),
        &super::ExperimentResult::Essay(result.clone()),
    )?;
    write_text_atomic(
        &config.out_dir.join("tables.txt"),
        &crate::report::render_essay_tables(&result),
    )?;
    write_text_atomic(
        &config.out_dir.join("curves.tsv"),
        &crate::report::render_curves_tsv(&result),
    )?;
    write_text_atomic(
        &config.out_dir.join("ecdf.tsv"),
        &crate::report::render_ecdf_tsv(&result),
    )?;
    context.finish(config, &lexicon, Some(&built.scorer))?;
    Ok(result)
}
