//! lexeval-core — CEFR word-level vocabulary assessment.
//!
//! The library assigns a CEFR proficiency level (A1–C2) to each word of a
//! learner text by disambiguating the word's in-context sense against a
//! graded lexicon. Disambiguation runs as a multiple-choice task over a
//! pluggable LLM backend with permutation-averaged option probabilities;
//! PoS-matching and random baselines are provided alongside. On top of the
//! per-word annotations sit essay-level features (per-level proportions and
//! a weighted composite), an epsilon-insensitive RBF-kernel SVR with
//! cross-validation, and the full evaluation toolbox (accuracy splits,
//! per-level F1, Pearson/Spearman, cumulative level-usage curves, AUC,
//! eCDF, and level-or-above consistency accuracy).
//!
//! Module map:
//!
//! - [`cefr`] — core vocabulary of the domain: levels, labels, PoS tags
//! - [`lexicon`] — graded lexicon parsing, lemma lookup, polysemy stats
//! - [`textproc`] — tokenization, lemmatization, PoS tagging, gold files
//! - [`llm`] — MCQ tasks, prompts, backends, permutation-averaged scoring
//! - [`annotate`] — the per-word annotation pipeline and baselines
//! - [`assess`] — essay features, naive composite score, SVR, k-fold CV
//! - [`metrics`] — evaluation mathematics
//! - [`experiments`] — reproducible experiment runners and manifests
//! - [`report`] — table/JSON/TSV/HTML rendering of results

pub mod annotate;
pub mod assess;
pub mod cefr;
pub mod experiments;
pub mod lexicon;
pub mod llm;
pub mod metrics;
pub mod report;
pub mod textproc;
pub mod util;

pub use cefr::{Ambiguity, CefrLevel, Pos, TokenClass, WordLabel};

/// Version string embedded in run manifests.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
