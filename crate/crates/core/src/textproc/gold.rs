//! The pre-tokenized gold annotation format.
//!
//! One token per line as `surface<TAB>lemma<TAB>pos<TAB>label`, blank line
//! between sentences, and a `# doc_id = …` header opening each document.
//! Optional `# essay_score = …` and `# essay_level = …` headers carry
//! essay-level metadata. Tokens are taken verbatim — no re-tokenization —
//! and the token class is derived from the gold label (S -> stopword,
//! P -> punctuation, otherwise content) so evaluation never depends on
//! tokenizer or stopword-list agreement.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::cefr::{Pos, TokenClass, WordLabel};

use super::{AnalyzedDocument, CharSpan, TextError, Token};

/// Read every document from a gold-format stream.
pub fn read_gold<R: BufRead>(reader: R, path: &str) -> Result<Vec<AnalyzedDocument>, TextError> {
    let mut docs: Vec<AnalyzedDocument> = Vec::new();
    let mut current: Option<DocBuilder> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let fail = |message: String| TextError::GoldFormat {
            path: path.to_string(),
            line: lineno,
            message,
        };
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if let Some(rest) = trimmed.strip_prefix('#') {
            let (key, value) = rest
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| fail("malformed header, expected `# key = value`".into()))?;
            match key {
                "doc_id" => {
                    if let Some(builder) = current.take() {
                        docs.push(builder.finish());
                    }
                    current = Some(DocBuilder::new(value.to_string()));
                }
                "essay_score" => {
                    let doc = current
                        .as_mut()
                        .ok_or_else(|| fail("header before any `# doc_id`".into()))?;
                    doc.essay_score = Some(
                        value
                            .parse()
                            .map_err(|_| fail(format!("invalid essay_score {value:?}")))?,
                    );
                }
                "essay_level" => {
                    let doc = current
                        .as_mut()
                        .ok_or_else(|| fail("header before any `# doc_id`".into()))?;
                    doc.essay_level = Some(
                        value
                            .parse()
                            .map_err(|_| fail(format!("invalid essay_level {value:?}")))?,
                    );
                }
                other => return Err(fail(format!("unknown header key {other:?}"))),
            }
            continue;
        }
        if trimmed.is_empty() {
            if let Some(doc) = current.as_mut() {
                doc.end_sentence();
            }
            continue;
        }
        let doc = current
            .as_mut()
            .ok_or_else(|| fail("token line before any `# doc_id` header".into()))?;
        let columns: Vec<&str> = trimmed.split('\t').collect();
        if columns.len() != 4 {
            return Err(fail(format!(
                "expected 4 tab-separated columns, found {}",
                columns.len()
            )));
        }
        let label: WordLabel = columns[3]
            .parse()
            .map_err(|_| fail(format!("invalid label {:?}", columns[3])))?;
        doc.push(columns[0], columns[1], Pos::parse_lenient(columns[2]), label);
    }
    if let Some(builder) = current.take() {
        docs.push(builder.finish());
    }
    Ok(docs)
}

/// Read gold documents from a file path.
pub fn read_gold_file<P: AsRef<Path>>(path: P) -> Result<Vec<AnalyzedDocument>, TextError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_gold(std::io::BufReader::new(file), &path.display().to_string())
}

/// Serialize a document to the gold format.
pub fn write_gold(doc: &AnalyzedDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# doc_id = {}", doc.doc_id);
    if let Some(score) = doc.essay_score {
        let _ = writeln!(out, "# essay_score = {score}");
    }
    if let Some(level) = doc.essay_level {
        let _ = writeln!(out, "# essay_level = {level}");
    }
    for (s, sentence) in doc.sentences.iter().enumerate() {
        if s > 0 {
            out.push('\n');
        }
        for (t, token) in sentence.iter().enumerate() {
            let label = doc
                .gold_label(s, t)
                .map(|l| l.as_str().to_string())
                .unwrap_or_else(|| "N/A".to_string());
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                token.surface, token.lemma, token.pos, label
            );
        }
    }
    out
}

struct DocBuilder {
    doc_id: String,
    essay_score: Option<f64>,
    essay_level: Option<crate::cefr::CefrLevel>,
    sentences: Vec<Vec<Token>>,
    labels: Vec<Vec<WordLabel>>,
    open_sentence: Vec<Token>,
    open_labels: Vec<WordLabel>,
    text: String,
}

impl DocBuilder {
    fn new(doc_id: String) -> DocBuilder {
        DocBuilder {
            doc_id,
            essay_score: None,
            essay_level: None,
            sentences: Vec::new(),
            labels: Vec::new(),
            open_sentence: Vec::new(),
            open_labels: Vec::new(),
            text: String::new(),
        }
    }

    fn push(&mut self, surface: &str, lemma: &str, pos: Pos, label: WordLabel) {
        if !self.text.is_empty() {
            self.text.push(' ');
        }
        let start = self.text.len();
        self.text.push_str(surface);
        let klass = match label {
            WordLabel::Stopword => TokenClass::Stopword,
            WordLabel::Punctuation => TokenClass::Punctuation,
            _ => TokenClass::Content,
        };
        self.open_sentence.push(Token {
            surface: surface.to_string(),
            lemma: lemma.to_lowercase(),
            pos,
            span: CharSpan {
                start,
                end: self.text.len(),
            },
            klass,
        });
        self.open_labels.push(label);
    }

    fn end_sentence(&mut self) {
        if !self.open_sentence.is_empty() {
            self.sentences.push(std::mem::take(&mut self.open_sentence));
            self.labels.push(std::mem::take(&mut self.open_labels));
        }
    }

    fn finish(mut self) -> AnalyzedDocument {
        self.end_sentence();
        AnalyzedDocument {
            doc_id: self.doc_id,
            sentences: self.sentences,
            source_text: self.text,
            essay_score: self.essay_score,
            essay_level: self.essay_level,
            gold_labels: Some(self.labels),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cefr::CefrLevel;

    const SAMPLE: &str = "# doc_id = d1\n\
work\twork\tverb\tA1\n\
the\tthe\tdeterminer\tS\n\
,\t,\tother\tP\n\
\n\
late\tlate\tadverb\tN/A\n";

    #[test]
    fn read_gold_basic() {
        let docs = read_gold(SAMPLE.as_bytes(), "sample").unwrap();
        assert_eq!(docs.len(), 1);
        let doc = &docs[0];
        assert_eq!(doc.doc_id, "d1");
        assert_eq!(doc.sentences.len(), 2);
        assert_eq!(doc.gold_label(0, 0), Some(WordLabel::Level(CefrLevel::A1)));
        assert_eq!(doc.gold_label(0, 1), Some(WordLabel::Stopword));
        assert_eq!(doc.sentences[0][1].klass, TokenClass::Stopword);
        assert_eq!(doc.sentences[0][2].klass, TokenClass::Punctuation);
        assert_eq!(doc.gold_label(1, 0), Some(WordLabel::NotInLexicon));
        doc.validate().unwrap();
    }

    #[test]
    fn read_gold_invalid_label() {
        let text = "# doc_id = d\nwork\twork\tverb\tX1\n";
        let err = read_gold(text.as_bytes(), "bad").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad:2"), "{msg}");
        assert!(msg.contains("X1"), "{msg}");
    }

    #[test]
    fn read_gold_column_mismatch() {
        let text = "# doc_id = d\nwork\twork\tverb\n";
        let err = read_gold(text.as_bytes(), "bad").unwrap_err();
        assert!(err.to_string().contains("4 tab-separated columns"));
    }

    #[test]
    fn round_trip_identity() {
        let docs = read_gold(SAMPLE.as_bytes(), "sample").unwrap();
        let rendered = write_gold(&docs[0]);
        let reread = read_gold(rendered.as_bytes(), "rerendered").unwrap();
        assert_eq!(reread, docs);
    }

    #[test]
    fn multiple_documents_and_metadata() {
        let text = "# doc_id = a\n# essay_score = 3.5\n# essay_level = B1\n\
hello\thello\texclamation\tA1\n\n# doc_id = b\nwork\twork\tverb\tA1\n";
        let docs = read_gold(text.as_bytes(), "multi").unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].essay_score, Some(3.5));
        assert_eq!(docs[0].essay_level, Some(CefrLevel::B1));
        assert_eq!(docs[1].doc_id, "b");
    }

    #[test]
    fn spans_index_canonical_text() {
        let docs = read_gold(SAMPLE.as_bytes(), "sample").unwrap();
        let doc = &docs[0];
        for (_, _, tok) in doc.positions() {
            assert_eq!(&doc.source_text[tok.span.start..tok.span.end], tok.surface);
        }
    }
}
