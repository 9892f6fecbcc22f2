//! Semantic understanding: pick the intended sense of a word given one of
//! its example sentences and all of its senses as options.
//!
//! Items are enumerated per (reference lemma, entry): every lemma whose
//! candidate count falls in a configured bucket contributes one item per
//! entry that owns an example sentence containing the lemma. The entry
//! owning the example is the gold answer. Words with 3 options are scored
//! under full permutation enumeration; larger buckets sample ten orderings.

use serde::{Deserialize, Serialize};

use crate::lexicon::Lexicon;
use crate::llm::{McqTask, OptionId, PermutationPolicy};
use crate::textproc::Analyzer;
use crate::util::parallel_map;

use super::{
    build_backend, default_analyzer, io_err, write_json_atomic, write_text_atomic,
    ExperimentConfig, ExperimentError, RunContext,
};

/// One scoring item: a lemma, the example context, and the gold entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemanticItem {
    pub key: String,
    pub lemma: String,
    pub gold_entry: String,
    pub context: String,
    pub option_count: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SkipReport {
    /// Entries in bucket lemmas with no example sentence at all.
    pub no_example: usize,
    /// Entries whose example does not contain the reference lemma.
    pub target_missing: usize,
}

/// Accuracy within one option-count bucket.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BucketAccuracy {
    pub bucket: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemanticEvalResult {
    pub buckets: Vec<BucketAccuracy>,
    /// Macro average over buckets.
    pub average: f64,
    pub items: usize,
    pub skipped: SkipReport,
}

/// Enumerate items from the lexicon. Bucket membership is computed from the
/// lexicon's candidate counts, never hardcoded.
pub fn enumerate_semantic_items(
    lexicon: &Lexicon,
    analyzer: &dyn Analyzer,
    buckets: &[usize],
) -> Result<(Vec<SemanticItem>, SkipReport), ExperimentError> {
    let mut items = Vec::new();
    let mut skipped = SkipReport::default();
    let lemmas: Vec<String> = lexicon.lemmas().map(str::to_string).collect();
    for lemma in lemmas {
        let candidates = lexicon.lookup(&lemma);
        let k = candidates.len();
        if !buckets.contains(&k) {
            continue;
        }
        for entry in candidates {
            let Some(example) = entry.example() else {
                skipped.no_example += 1;
                continue;
            };
            let analyzed = analyzer.analyze(&entry.id, example)?;
            let contains_target = analyzed
                .positions()
                .any(|(_, _, token)| token.lemma == lemma);
            if !contains_target {
                skipped.target_missing += 1;
                continue;
            }
            items.push(SemanticItem {
                key: format!("sem:{lemma}:{}", entry.id),
                lemma: lemma.clone(),
                gold_entry: entry.id.clone(),
                context: example.to_string(),
                option_count: k,
            });
        }
    }
    Ok((items, skipped))
}

/// The permutation policy the experiment applies per bucket: full
/// enumeration for 3 options, ten sampled orderings beyond that.
pub fn bucket_policy(option_count: usize, seed: u64) -> PermutationPolicy {
    if option_count <= 3 {
        PermutationPolicy::full()
    } else {
        PermutationPolicy::sample(10, seed)
    }
}

pub fn run_semantic_eval(config: &ExperimentConfig) -> Result<SemanticEvalResult, ExperimentError> {
    let context = RunContext::start(config);
    let lexicon = super::load_lexicon(config)?;
    let analyzer = default_analyzer();
    let (items, skipped) = enumerate_semantic_items(&lexicon, &analyzer, &config.buckets)?;
    let built = build_backend(config)?;
    if let Some(oracle) = &built.oracle {
        for item in &items {
            oracle.register(item.key.clone(), OptionId::Entry(item.gold_entry.clone()));
        }
    }
    let outcomes = parallel_map(&items, config.jobs, |_, item| {
        let candidates = lexicon.lookup(&item.lemma);
        let task = McqTask::semantic(item.context.clone(), item.lemma.clone(), &candidates)?;
        let policy = bucket_policy(item.option_count, config.seed);
        let dist = built
            .scorer
            .score_with_permutations(&task, &policy, Some(&item.key))?;
        let correct = *dist.select() == OptionId::Entry(item.gold_entry.clone());
        Ok::<(usize, bool), ExperimentError>((item.option_count, correct))
    })?;

    let mut buckets = Vec::new();
    for &bucket in &config.buckets {
        let total = outcomes.iter().filter(|(k, _)| *k == bucket).count();
        let correct = outcomes
            .iter()
            .filter(|(k, hit)| *k == bucket && *hit)
            .count();
        buckets.push(BucketAccuracy {
            bucket,
            correct,
            total,
            accuracy: if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            },
        });
    }
    let populated: Vec<&BucketAccuracy> = buckets.iter().filter(|b| b.total > 0).collect();
    let average = if populated.is_empty() {
        0.0
    } else {
        populated.iter().map(|b| b.accuracy).sum::<f64>() / populated.len() as f64
    };
    let result = SemanticEvalResult {
        buckets,
        average,
        items: items.len(),
        skipped,
    };
    std::fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e))?;
    write_json_atomic(
        &config.out_dir.join("results.json"),
        &super::ExperimentResult::Semantic(result.clone()),
    )?;
    write_text_atomic(
        &config.out_dir.join("tables.txt"),
        &crate::report::render_semantic_table(&result),
    )?;
    context.finish(config, &lexicon, Some(&built.scorer))?;
    Ok(result)
}
