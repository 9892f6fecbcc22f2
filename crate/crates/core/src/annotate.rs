//! Per-word annotation: LLM disambiguation, PoS-matching baseline, and the
//! random baseline.
//!
//! Every token gets exactly one [`WordAnnotation`]. Stopwords map to `S` and
//! punctuation to `P` without touching the lexicon or backend. Content
//! tokens are looked up by lemma: no candidates means `N/A`; otherwise the
//! method decides. Multi-word-expression candidates reach each of their
//! reference words independently — there is no span merging, so evaluation
//! stays token-aligned.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cefr::{Ambiguity, CefrLevel, TokenClass, WordLabel};
use crate::lexicon::{LexEntry, Lexicon};
use crate::llm::{
    ContextMode, LabelStyle, LlmError, McqTask, OptionDistribution, OptionId, PermutationPolicy,
    Scorer,
};
use crate::textproc::AnalyzedDocument;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("document {doc_id} token {sentence}:{token}: {source}")]
    Scoring {
        doc_id: String,
        sentence: usize,
        token: usize,
        source: LlmError,
    },
    #[error("position {sentence}:{token} out of range for document {doc_id}")]
    BadPosition {
        doc_id: String,
        sentence: usize,
        token: usize,
    },
    #[error("token at {sentence}:{token} is not a content token")]
    NotContent { sentence: usize, token: usize },
}

/// Which annotation method produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Llm,
    Pos,
    Random,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Llm => "llm",
            Method::Pos => "pos",
            Method::Random => "random",
        })
    }
}

/// Per-token outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAnnotation {
    pub doc_id: String,
    pub sentence_index: usize,
    pub token_index: usize,
    pub surface: String,
    pub lemma: String,
    pub label: WordLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_id: Option<String>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<OptionDistribution>,
    pub ambiguity: Ambiguity,
}

/// Options for the LLM method.
#[derive(Debug, Clone)]
pub struct LlmOptions {
    pub policy: PermutationPolicy,
    pub context_mode: ContextMode,
    pub label_style: LabelStyle,
}

impl Default for LlmOptions {
    fn default() -> Self {
        // Word-level scoring defaults to the canonical order, single pass;
        // permutation averaging is opt-in via the policy.
        LlmOptions {
            policy: PermutationPolicy::none(),
            context_mode: ContextMode::Sentence,
            label_style: LabelStyle::Numbers,
        }
    }
}

/// Method plus its method-specific dependencies.
pub enum AnnotateMethod<'a> {
    Llm {
        scorer: &'a Scorer,
        options: LlmOptions,
    },
    PosBaseline,
    Random {
        seed: u64,
    },
}

impl AnnotateMethod<'_> {
    pub fn method(&self) -> Method {
        match self {
            AnnotateMethod::Llm { .. } => Method::Llm,
            AnnotateMethod::PosBaseline => Method::Pos,
            AnnotateMethod::Random { .. } => Method::Random,
        }
    }
}

fn base_annotation(
    doc: &AnalyzedDocument,
    sentence: usize,
    token: usize,
    lexicon: &Lexicon,
    method: Method,
) -> Result<WordAnnotation, AnnotateError> {
    let tok = doc
        .token(sentence, token)
        .ok_or_else(|| AnnotateError::BadPosition {
            doc_id: doc.doc_id.clone(),
            sentence,
            token,
        })?;
    Ok(WordAnnotation {
        doc_id: doc.doc_id.clone(),
        sentence_index: sentence,
        token_index: token,
        surface: tok.surface.clone(),
        lemma: tok.lemma.clone(),
        label: WordLabel::NotInLexicon,
        entry_id: None,
        method,
        probs: None,
        ambiguity: lexicon.ambiguity(&tok.lemma, Some(tok.pos)),
    })
}

/// Stable key identifying a token's scoring task; the oracle mock keys its
/// answers on this.
pub fn task_key(doc_id: &str, sentence: usize, token: usize) -> String {
    format!("{doc_id}:{sentence}:{token}")
}

/// LLM method for one content token: look up candidates, build the
/// word-level task, score, select. NONE (or no candidates) maps to `N/A`.
pub fn annotate_word_llm(
    doc: &AnalyzedDocument,
    sentence: usize,
    token: usize,
    lexicon: &Lexicon,
    scorer: &Scorer,
    options: &LlmOptions,
) -> Result<WordAnnotation, AnnotateError> {
    let mut annotation = base_annotation(doc, sentence, token, lexicon, Method::Llm)?;
    require_content(doc, sentence, token)?;
    let candidates = lexicon.lookup(&annotation.lemma);
    if candidates.is_empty() {
        return Ok(annotation);
    }
    let context_tokens: Vec<&str> = match options.context_mode {
        ContextMode::Sentence => doc.sentences[sentence]
            .iter()
            .map(|t| t.surface.as_str())
            .collect(),
        ContextMode::Essay => doc
            .sentences
            .iter()
            .flat_map(|s| s.iter().map(|t| t.surface.as_str()))
            .collect(),
    };
    let target_index = match options.context_mode {
        ContextMode::Sentence => token,
        ContextMode::Essay => {
            doc.sentences[..sentence].iter().map(|s| s.len()).sum::<usize>() + token
        }
    };
    let scoring = (|| -> Result<(McqTask, OptionDistribution), LlmError> {
        let task = McqTask::word_level(
            &context_tokens,
            target_index,
            &candidates,
            options.context_mode,
            options.label_style,
        )?;
        let key = task_key(&doc.doc_id, sentence, token);
        let dist = scorer.score_with_permutations(&task, &options.policy, Some(&key))?;
        Ok((task, dist))
    })();
    let (_, dist) = scoring.map_err(|source| AnnotateError::Scoring {
        doc_id: doc.doc_id.clone(),
        sentence,
        token,
        source,
    })?;
    match dist.select().clone() {
        OptionId::None => {
            annotation.label = WordLabel::NotInLexicon;
        }
        OptionId::Entry(id) => {
            let level = lexicon
                .entry(&id)
                .map(|e| e.level)
                .expect("selected option must exist in the lexicon");
            annotation.label = WordLabel::Level(level);
            annotation.entry_id = Some(id);
        }
    }
    annotation.probs = Some(dist);
    Ok(annotation)
}

/// PoS baseline for one content token. One candidate: its level. Several:
/// restrict to the token's PoS tag; a single-level restriction is assigned
/// directly, a multi-level one takes the minimum, and an empty restriction
/// falls back to the minimum over all candidates.
pub fn annotate_word_pos(
    doc: &AnalyzedDocument,
    sentence: usize,
    token: usize,
    lexicon: &Lexicon,
) -> Result<WordAnnotation, AnnotateError> {
    let mut annotation = base_annotation(doc, sentence, token, lexicon, Method::Pos)?;
    require_content(doc, sentence, token)?;
    let candidates = lexicon.lookup(&annotation.lemma);
    if candidates.is_empty() {
        return Ok(annotation);
    }
    let tok = doc.token(sentence, token).expect("validated above");
    let chosen: &LexEntry = if candidates.len() == 1 {
        candidates[0]
    } else {
        let restricted: Vec<&&LexEntry> =
            candidates.iter().filter(|e| e.pos == tok.pos).collect();
        if restricted.is_empty() {
            lowest_level(candidates.iter())
        } else {
            lowest_level(restricted.into_iter())
        }
    };
    annotation.label = WordLabel::Level(chosen.level);
    annotation.entry_id = Some(chosen.id.clone());
    Ok(annotation)
}

fn lowest_level<'a>(entries: impl Iterator<Item = &'a &'a LexEntry>) -> &'a LexEntry {
    entries
        .min_by_key(|e| e.level)
        .expect("nonempty candidate set")
}

/// Random baseline for one content token: an entry drawn uniformly over the
/// candidate entry list.
pub fn annotate_word_random<R: Rng>(
    doc: &AnalyzedDocument,
    sentence: usize,
    token: usize,
    lexicon: &Lexicon,
    rng: &mut R,
) -> Result<WordAnnotation, AnnotateError> {
    let mut annotation = base_annotation(doc, sentence, token, lexicon, Method::Random)?;
    require_content(doc, sentence, token)?;
    let candidates = lexicon.lookup(&annotation.lemma);
    if candidates.is_empty() {
        return Ok(annotation);
    }
    let chosen = candidates[rng.gen_range(0..candidates.len())];
    annotation.label = WordLabel::Level(chosen.level);
    annotation.entry_id = Some(chosen.id.clone());
    Ok(annotation)
}

fn require_content(
    doc: &AnalyzedDocument,
    sentence: usize,
    token: usize,
) -> Result<(), AnnotateError> {
    match doc.token(sentence, token).map(|t| t.klass) {
        Some(TokenClass::Content) => Ok(()),
        _ => Err(AnnotateError::NotContent { sentence, token }),
    }
}

/// Annotate every token of a document in order. The first scoring error
/// aborts the document unless `keep_partial` is set, in which case failed
/// tokens fall back to `N/A` and the errors are reported alongside.
pub fn annotate_document(
    doc: &AnalyzedDocument,
    lexicon: &Lexicon,
    method: &AnnotateMethod<'_>,
) -> Result<Vec<WordAnnotation>, AnnotateError> {
    let run = annotate_document_keep_partial(doc, lexicon, method, false)?;
    Ok(run.annotations)
}

/// A document annotation run, possibly with per-token failures retained.
pub struct DocumentAnnotation {
    pub annotations: Vec<WordAnnotation>,
    pub failures: Vec<AnnotateError>,
}

pub fn annotate_document_keep_partial(
    doc: &AnalyzedDocument,
    lexicon: &Lexicon,
    method: &AnnotateMethod<'_>,
    keep_partial: bool,
) -> Result<DocumentAnnotation, AnnotateError> {
    // Seed the random baseline per document so parallel corpus runs stay
    // order-independent.
    let mut rng = match method {
        AnnotateMethod::Random { seed } => {
            let doc_hash = crate::util::sha256_hex(&[doc.doc_id.as_bytes()]);
            let mix = u64::from_str_radix(&doc_hash[..16], 16).unwrap_or(0);
            Some(rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ mix))
        }
        _ => None,
    };
    let mut annotations = Vec::with_capacity(doc.token_count());
    let mut failures = Vec::new();
    for (s, sentence) in doc.sentences.iter().enumerate() {
        for (t, tok) in sentence.iter().enumerate() {
            let annotation = match tok.klass {
                TokenClass::Stopword | TokenClass::Punctuation => {
                    let mut a = base_annotation(doc, s, t, lexicon, method.method())?;
                    a.label = if tok.klass == TokenClass::Stopword {
                        WordLabel::Stopword
                    } else {
                        WordLabel::Punctuation
                    };
                    a
                }
                TokenClass::Content => {
                    let result = match method {
                        AnnotateMethod::Llm { scorer, options } => {
                            annotate_word_llm(doc, s, t, lexicon, scorer, options)
                        }
                        AnnotateMethod::PosBaseline => annotate_word_pos(doc, s, t, lexicon),
                        AnnotateMethod::Random { .. } => annotate_word_random(
                            doc,
                            s,
                            t,
                            lexicon,
                            rng.as_mut().expect("random rng present"),
                        ),
                    };
                    match result {
                        Ok(a) => a,
                        Err(e) if keep_partial => {
                            failures.push(e);
                            base_annotation(doc, s, t, lexicon, method.method())?
                        }
                        Err(e) => return Err(e),
                    }
                }
            };
            annotations.push(annotation);
        }
    }
    Ok(DocumentAnnotation {
        annotations,
        failures,
    })
}

/// Predicted level of a word annotation, if any.
pub fn predicted_level(annotation: &WordAnnotation) -> Option<CefrLevel> {
    annotation.label.level()
}
