//! Property tests for the spec invariants.

mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use lexeval_core::assess::CvPlan;
use lexeval_core::cefr::{Ambiguity, CefrLevel, WordLabel};
use lexeval_core::lexicon::Lexicon;
use lexeval_core::llm::{
    softmax, Backend, ContextMode, LabelStyle, LlmError, McqTask, OptionId, PermutationPolicy,
    ScoreRequest, Scorer,
};
use lexeval_core::metrics::{ecdf, spearman, word_accuracy};
use lexeval_core::textproc::{read_gold, write_gold, RuleAnalyzer, StopwordSet};

/// Backend whose score depends only on the option occupying each position,
/// never on the position itself.
struct ContentKeyed;

impl Backend for ContentKeyed {
    fn identity(&self) -> String {
        "content-keyed".into()
    }

    fn score(&self, req: &ScoreRequest<'_>) -> Result<BTreeMap<String, f64>, LlmError> {
        Ok(req
            .labels
            .iter()
            .zip(req.options)
            .map(|(label, option)| {
                let weight = option
                    .as_str()
                    .bytes()
                    .fold(0u32, |acc, b| acc.wrapping_mul(31).wrapping_add(b as u32));
                (label.clone(), -((weight % 97) as f64) / 13.0)
            })
            .collect())
    }
}

fn entries(n: usize) -> Vec<lexeval_core::lexicon::LexEntry> {
    (0..n)
        .map(|i| lexeval_core::lexicon::LexEntry {
            id: format!("e{i}"),
            head: "word".into(),
            pos: lexeval_core::cefr::Pos::Noun,
            guideword: String::new(),
            level: CefrLevel::ALL[i % 6],
            definition: format!("sense {i}"),
            phrase: None,
            ref_words: vec!["word".into()],
            learner_example: None,
            dictionary_example: None,
            topic: None,
        })
        .collect()
}

fn task_with(n: usize) -> McqTask {
    let owned = entries(n);
    let refs: Vec<&lexeval_core::lexicon::LexEntry> = owned.iter().collect();
    McqTask::word_level(
        &["the", "word", "appears"],
        1,
        &refs,
        ContextMode::Sentence,
        LabelStyle::Numbers,
    )
    .unwrap()
}

proptest! {
    // Softmax output is positive and sums to 1.
    #[test]
    fn softmax_is_a_distribution(values in prop::collection::vec(-40.0f64..40.0, 1..12)) {
        let probs = softmax(&values);
        prop_assert!(probs.iter().all(|&p| p > 0.0));
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    // Every permutation-averaged distribution is a distribution.
    #[test]
    fn averaged_probabilities_form_a_distribution(option_count in 1usize..5, seed in 0u64..500) {
        let task = task_with(option_count);
        let scorer = Scorer::new(Box::new(ContentKeyed));
        let policy = PermutationPolicy::sample(4, seed);
        let dist = scorer.score_with_permutations(&task, &policy, None).unwrap();
        prop_assert!(dist.probs.iter().all(|&p| p >= 0.0));
        let sum: f64 = dist.probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    // With a position-independent backend, averaging over any permutation
    // set equals the single-pass distribution.
    #[test]
    fn position_independent_backend_is_permutation_invariant(option_count in 1usize..5, seed in 0u64..500) {
        let task = task_with(option_count);
        let scorer = Scorer::new(Box::new(ContentKeyed));
        let single = scorer
            .score_with_permutations(&task, &PermutationPolicy::none(), None)
            .unwrap();
        let full = scorer
            .score_with_permutations(&task, &PermutationPolicy::full(), None)
            .unwrap();
        let sampled = scorer
            .score_with_permutations(&task, &PermutationPolicy::sample(3, seed), None)
            .unwrap();
        for id in single.options.iter() {
            let p = single.prob(id).unwrap();
            prop_assert!((full.prob(id).unwrap() - p).abs() < 1e-12);
            prop_assert!((sampled.prob(id).unwrap() - p).abs() < 1e-12);
        }
    }

    // Full averaging is invariant under reordering of the canonical option
    // list (up to 1e-9), per option id.
    #[test]
    fn full_averaging_is_canonical_order_invariant(rotate in 1usize..4) {
        let owned = entries(4);
        let mut rotated = owned.clone();
        rotated.rotate_left(rotate);
        let refs_a: Vec<&lexeval_core::lexicon::LexEntry> = owned.iter().collect();
        let refs_b: Vec<&lexeval_core::lexicon::LexEntry> = rotated.iter().collect();
        let task_a = McqTask::word_level(&["a", "word"], 1, &refs_a, ContextMode::Sentence, LabelStyle::Numbers).unwrap();
        let task_b = McqTask::word_level(&["a", "word"], 1, &refs_b, ContextMode::Sentence, LabelStyle::Numbers).unwrap();
        let scorer = Scorer::new(Box::new(ContentKeyed));
        let dist_a = scorer.score_with_permutations(&task_a, &PermutationPolicy::full(), None).unwrap();
        let dist_b = scorer.score_with_permutations(&task_b, &PermutationPolicy::full(), None).unwrap();
        for id in dist_a.options.iter() {
            prop_assert!((dist_a.prob(id).unwrap() - dist_b.prob(id).unwrap()).abs() < 1e-9);
        }
    }

    // Accuracy is invariant under a consistent relabeling applied to both
    // prediction and gold; micro TP counts equal the exact-match count.
    #[test]
    fn accuracy_is_relabeling_invariant(
        raw in prop::collection::vec((0usize..7, 0usize..7), 1..40),
        shift in 1usize..7,
    ) {
        let alphabet = WordLabel::scored_labels();
        let relabel = |l: WordLabel| {
            let at = alphabet.iter().position(|&x| x == l).unwrap();
            alphabet[(at + shift) % alphabet.len()]
        };
        let pred: Vec<WordLabel> = raw.iter().map(|&(p, _)| alphabet[p]).collect();
        let gold: Vec<WordLabel> = raw.iter().map(|&(_, g)| alphabet[g]).collect();
        let amb = vec![Ambiguity::NonAmbiguous; raw.len()];
        let base = word_accuracy(&pred, &gold, &amb).unwrap();
        let pred2: Vec<WordLabel> = pred.iter().map(|&l| relabel(l)).collect();
        let gold2: Vec<WordLabel> = gold.iter().map(|&l| relabel(l)).collect();
        let moved = word_accuracy(&pred2, &gold2, &amb).unwrap();
        prop_assert_eq!(base.all.correct, moved.all.correct);
        prop_assert_eq!(base.all.total, moved.all.total);

        let rows = lexeval_core::metrics::per_level_f1(&pred, &gold).unwrap();
        let tp: usize = rows.iter().map(|r| r.true_positives).sum();
        let matches = pred.iter().zip(&gold).filter(|(p, g)| p == g).count();
        prop_assert_eq!(tp, matches);
    }

    // Spearman is invariant under strictly monotone transforms.
    #[test]
    fn spearman_monotone_invariance(pairs in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 4..30)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let distinct = |v: &[f64]| v.iter().any(|&a| a != v[0]);
        prop_assume!(distinct(&x) && distinct(&y));
        let base = spearman(&x, &y).unwrap();
        let transformed: Vec<f64> = x.iter().map(|v| v.exp() + v * 3.0).collect();
        let moved = spearman(&transformed, &y).unwrap();
        prop_assert!((base - moved).abs() < 1e-9);
    }

    // The eCDF is non-decreasing, right-continuous by construction, and
    // ends at 1.
    #[test]
    fn ecdf_shape(values in prop::collection::vec(-100.0f64..100.0, 1..60)) {
        let points = ecdf(&values);
        prop_assert!(!points.is_empty());
        prop_assert!(points.windows(2).all(|w| w[0].0 < w[1].0));
        prop_assert!(points.windows(2).all(|w| w[0].1 <= w[1].1));
        prop_assert!((points.last().unwrap().1 - 1.0).abs() < 1e-12);
    }

    // Fold assignments partition the samples with sizes differing by <= 1.
    #[test]
    fn cv_plan_partitions(n in 2usize..60, k in 1usize..10, seed in 0u64..1000) {
        let k = k.min(n);
        let plan = CvPlan::new(n, k, seed);
        prop_assert_eq!(plan.folds.len(), n);
        let mut sizes = vec![0usize; k];
        for &fold in &plan.folds {
            prop_assert!(fold < k);
            sizes[fold] += 1;
        }
        let max = *sizes.iter().max().unwrap();
        let min = *sizes.iter().min().unwrap();
        prop_assert!(max - min <= 1);
        prop_assert_eq!(&plan, &CvPlan::new(n, k, seed));
    }

    // Lookup and ref_words agree: E ∈ lookup(L) ⇔ L ∈ E.ref_words.
    #[test]
    fn lookup_matches_ref_words(
        rows in prop::collection::vec(
            (0usize..12, prop::collection::vec("[a-d]{1,3}", 0..3)),
            1..20,
        ),
    ) {
        let analyzer = RuleAnalyzer::bundled();
        let stops = StopwordSet::bundled();
        let mut jsonl = String::new();
        for (i, (head_idx, extra)) in rows.iter().enumerate() {
            let head = format!("head{head_idx}");
            let mut refs: Vec<String> = vec![head.clone()];
            refs.extend(extra.iter().cloned());
            refs.dedup();
            jsonl.push_str(&format!(
                "{{\"id\":\"r{i}\",\"head\":\"{head}\",\"pos\":\"noun\",\"level\":\"B1\",\"definition\":\"d\",\"ref_words\":{}}}\n",
                serde_json::to_string(&refs).unwrap(),
            ));
        }
        let lexicon = Lexicon::parse(jsonl.as_bytes(), "prop", &analyzer, &stops).unwrap();
        for lemma in lexicon.lemmas().map(str::to_string).collect::<Vec<_>>() {
            for entry in lexicon.entries() {
                let in_lookup = lexicon.lookup(&lemma).iter().any(|e| e.id == entry.id);
                let in_refs = entry.ref_words.contains(&lemma);
                prop_assert_eq!(in_lookup, in_refs, "lemma {} entry {}", lemma, entry.id);
            }
        }
    }

    // Gold documents survive a write/read cycle unchanged.
    #[test]
    fn gold_write_read_round_trip(
        sentences in prop::collection::vec(
            prop::collection::vec(("[a-z]{1,8}", 0usize..9), 1..6),
            1..4,
        ),
    ) {
        let labels = WordLabel::scored_labels();
        let mut rendered = String::from("# doc_id = prop\n");
        for (i, sentence) in sentences.iter().enumerate() {
            if i > 0 {
                rendered.push('\n');
            }
            for (word, label_idx) in sentence {
                let label = match label_idx {
                    7 => "S".to_string(),
                    8 => "P".to_string(),
                    k => labels[*k].as_str().to_string(),
                };
                rendered.push_str(&format!("{word}\t{word}\tnoun\t{label}\n"));
            }
        }
        let docs = read_gold(rendered.as_bytes(), "prop").unwrap();
        prop_assert_eq!(docs.len(), 1);
        let doc = &docs[0];
        let cycled = read_gold(write_gold(doc).as_bytes(), "prop").unwrap();
        prop_assert_eq!(&cycled[0], doc);
    }

    // select() always returns an option whose probability is maximal, and
    // the earliest such option.
    #[test]
    fn select_is_earliest_argmax(probs in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let total: f64 = probs.iter().sum();
        prop_assume!(total > 0.0);
        let normalized: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let options: Vec<OptionId> = (0..normalized.len())
            .map(|i| OptionId::Entry(format!("e{i}")))
            .collect();
        let dist = lexeval_core::llm::OptionDistribution {
            options: options.clone(),
            probs: normalized.clone(),
            permutations_used: 1,
            raw: vec![],
        };
        let selected = dist.select();
        let best = normalized.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let earliest = normalized.iter().position(|&p| p == best).unwrap();
        prop_assert_eq!(selected, &options[earliest]);
    }
}
