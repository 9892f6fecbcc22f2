//! Tokenization, lemmatization, PoS tagging, and the pre-tokenized gold
//! annotation format.
//!
//! Analysis runs through the pluggable [`Analyzer`] contract; the bundled
//! [`RuleAnalyzer`] needs no external tooling, while [`ExternalAnalyzer`]
//! adapts any off-the-shelf tagger that speaks a one-shot JSON protocol.

mod analyzer;
mod gold;

pub use analyzer::{Analyzer, ExternalAnalyzer, PosMap, RuleAnalyzer};
pub use gold::{read_gold, read_gold_file, write_gold};

use std::collections::HashSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cefr::{CefrLevel, TokenClass, WordLabel};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("analyzer failed on document {doc_id}: {message}")]
    Analyzer { doc_id: String, message: String },
    #[error("{path}:{line}: {message}")]
    GoldFormat {
        path: String,
        line: usize,
        message: String,
    },
    #[error("gold label shape does not match token shape in document {0}")]
    GoldShape(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Half-open character span `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

/// One analyzed token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Lowercase lemma; nonempty for content tokens.
    pub lemma: String,
    pub pos: crate::cefr::Pos,
    pub span: CharSpan,
    pub klass: TokenClass,
}

/// A sentence-split, tokenized document, optionally carrying gold labels
/// and essay-level metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzedDocument {
    pub doc_id: String,
    pub sentences: Vec<Vec<Token>>,
    pub source_text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub essay_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub essay_level: Option<CefrLevel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_labels: Option<Vec<Vec<WordLabel>>>,
}

impl AnalyzedDocument {
    /// Iterate tokens with their (sentence, token) position.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize, &Token)> {
        self.sentences
            .iter()
            .enumerate()
            .flat_map(|(s, sent)| sent.iter().enumerate().map(move |(t, tok)| (s, t, tok)))
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.len()).sum()
    }

    pub fn token(&self, sentence: usize, index: usize) -> Option<&Token> {
        self.sentences.get(sentence)?.get(index)
    }

    pub fn gold_label(&self, sentence: usize, index: usize) -> Option<WordLabel> {
        self.gold_labels
            .as_ref()?
            .get(sentence)?
            .get(index)
            .copied()
    }

    /// Checks gold label shape against the sentence shape.
    pub fn validate(&self) -> Result<(), TextError> {
        if let Some(gold) = &self.gold_labels {
            let shape_ok = gold.len() == self.sentences.len()
                && gold
                    .iter()
                    .zip(&self.sentences)
                    .all(|(g, s)| g.len() == s.len());
            if !shape_ok {
                return Err(TextError::GoldShape(self.doc_id.clone()));
            }
        }
        Ok(())
    }
}

/// The stopword inventory used for token classification.
#[derive(Debug, Clone)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    /// The bundled list: a standard English inventory plus across/among/away.
    pub fn bundled() -> StopwordSet {
        Self::from_reader(crate::util::data::STOPWORDS.as_bytes())
            .expect("bundled stopword list must parse")
    }

    /// Load from a one-word-per-line file; `#` lines are comments.
    pub fn from_reader<R: BufRead>(reader: R) -> std::io::Result<StopwordSet> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let word = line.trim();
            if word.is_empty() || word.starts_with('#') {
                continue;
            }
            words.insert(word.to_lowercase());
        }
        Ok(StopwordSet { words })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Classify a surface form: punctuation if it contains no alphanumeric
/// character, stopword if its lowercase form is in the set, else content.
pub fn classify(surface: &str, stopwords: &StopwordSet) -> TokenClass {
    if !surface.is_empty() && surface.chars().all(|c| !c.is_alphanumeric()) {
        TokenClass::Punctuation
    } else if stopwords.contains(surface) {
        TokenClass::Stopword
    } else {
        TokenClass::Content
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_punctuation_only() {
        let stops = StopwordSet::bundled();
        assert_eq!(classify(",", &stops), TokenClass::Punctuation);
        assert_eq!(classify("...", &stops), TokenClass::Punctuation);
        assert_eq!(classify("?!", &stops), TokenClass::Punctuation);
    }

    #[test]
    fn classify_stopword_and_content() {
        let stops = StopwordSet::bundled();
        assert_eq!(classify("the", &stops), TokenClass::Stopword);
        assert_eq!(classify("The", &stops), TokenClass::Stopword);
        assert_eq!(classify("police", &stops), TokenClass::Content);
    }

    #[test]
    fn footnote_prepositions_are_stopwords() {
        let stops = StopwordSet::bundled();
        for word in ["across", "among", "away", "off"] {
            assert_eq!(classify(word, &stops), TokenClass::Stopword, "{word}");
        }
        assert_eq!(classify("near", &stops), TokenClass::Content);
    }

    #[test]
    fn classify_depends_only_on_surface_and_set() {
        let empty = StopwordSet::from_reader("".as_bytes()).unwrap();
        assert_eq!(classify("the", &empty), TokenClass::Content);
    }
}
