//! Morphological analyzers: the pluggable contract, the bundled
//! dictionary+suffix-rule implementation, and the external-tagger adapter.

use std::collections::HashMap;
use std::io::Write;
use std::process::{Command, Stdio};

use serde::Deserialize;

use crate::cefr::Pos;
use crate::util::data;

use super::{classify, AnalyzedDocument, CharSpan, StopwordSet, TextError, Token};

/// Sentence splitting, tokenization, lemmatization, and PoS tagging behind
/// one contract. Implementations must be safe to share across workers.
pub trait Analyzer: Sync {
    /// Analyze raw text into a classified token stream.
    fn analyze(&self, doc_id: &str, text: &str) -> Result<AnalyzedDocument, TextError>;

    /// Lemmatize a single word out of context (used for lexicon ingest).
    fn lemma(&self, word: &str) -> String;
}

// ---------------------------------------------------------------------------
// Rule analyzer
// ---------------------------------------------------------------------------

/// Bundled analyzer: regex-free tokenizer, exception+suffix lemmatizer, and a
/// dictionary tagger with a few context rules. Contractions are split
/// ("don't" -> "do" + "n't"); hyphenated words are kept whole.
pub struct RuleAnalyzer {
    exceptions: HashMap<String, String>,
    dictionary: HashMap<String, Vec<Pos>>,
    stopwords: StopwordSet,
}

impl RuleAnalyzer {
    pub fn bundled() -> RuleAnalyzer {
        let mut exceptions = HashMap::new();
        for line in data::LEMMA_EXCEPTIONS.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            if let (Some(surface), Some(lemma)) = (parts.next(), parts.next()) {
                exceptions.insert(surface.to_string(), lemma.to_string());
            }
        }
        let mut dictionary = HashMap::new();
        for line in data::TAGGER_LEXICON.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            if let (Some(word), Some(tags)) = (parts.next(), parts.next()) {
                let tags: Vec<Pos> = tags.split(',').map(Pos::parse_lenient).collect();
                dictionary.insert(word.to_string(), tags);
            }
        }
        RuleAnalyzer {
            exceptions,
            dictionary,
            stopwords: StopwordSet::bundled(),
        }
    }

    fn known(&self, word: &str) -> bool {
        self.dictionary.contains_key(word)
    }

    fn lemma_lower(&self, word: &str) -> String {
        if let Some(lemma) = self.exceptions.get(word) {
            return lemma.clone();
        }
        if self.known(word) || word.chars().any(|c| c.is_ascii_digit()) {
            return word.to_string();
        }
        for candidate in suffix_candidates(word) {
            if self.exceptions.contains_key(candidate.as_str()) {
                return self.exceptions[candidate.as_str()].clone();
            }
            if self.known(&candidate) {
                return candidate;
            }
        }
        // Unknown word: fall back to the most conservative strip.
        suffix_candidates(word).into_iter().next().unwrap_or_else(|| word.to_string())
    }

    fn tag(&self, lemma: &str, surface: &str, prev_lemma: Option<&str>) -> Pos {
        let candidates = self
            .dictionary
            .get(lemma)
            .or_else(|| self.dictionary.get(surface))
            .cloned()
            .unwrap_or_default();
        match candidates.len() {
            0 => guess_pos(surface),
            1 => candidates[0],
            _ => {
                let prev = prev_lemma.unwrap_or("");
                let verb_trigger = matches!(
                    prev,
                    "i" | "you" | "he" | "she" | "it" | "we" | "they" | "who" | "to" | "not"
                        | "n't" | "will" | "would" | "can" | "could" | "may" | "might" | "must"
                        | "shall" | "should" | "do" | "be" | "have"
                );
                if verb_trigger && candidates.contains(&Pos::Verb) {
                    return Pos::Verb;
                }
                let noun_trigger = matches!(
                    prev,
                    "the" | "a" | "an" | "this" | "that" | "these" | "those" | "my" | "your"
                        | "his" | "her" | "its" | "our" | "their" | "no" | "each" | "every"
                        | "some" | "any"
                );
                if noun_trigger && candidates.contains(&Pos::Noun) {
                    return Pos::Noun;
                }
                candidates[0]
            }
        }
    }
}

impl Analyzer for RuleAnalyzer {
    fn analyze(&self, doc_id: &str, text: &str) -> Result<AnalyzedDocument, TextError> {
        let mut sentences = Vec::new();
        for raw_sentence in split_sentences(text) {
            let mut tokens = Vec::new();
            let mut prev_lemma: Option<String> = None;
            for (start, end) in tokenize(text, raw_sentence) {
                let surface = text[start..end].to_string();
                let lower = surface.to_lowercase();
                let klass = classify(&surface, &self.stopwords);
                let (lemma, pos) = match klass {
                    crate::cefr::TokenClass::Punctuation => (lower.clone(), Pos::Other),
                    _ => {
                        let lemma = self.lemma_lower(&lower);
                        let pos = self.tag(&lemma, &lower, prev_lemma.as_deref());
                        (lemma, pos)
                    }
                };
                prev_lemma = Some(lemma.clone());
                tokens.push(Token {
                    surface,
                    lemma,
                    pos,
                    span: CharSpan { start, end },
                    klass,
                });
            }
            if !tokens.is_empty() {
                sentences.push(tokens);
            }
        }
        Ok(AnalyzedDocument {
            doc_id: doc_id.to_string(),
            sentences,
            source_text: text.to_string(),
            essay_score: None,
            essay_level: None,
            gold_labels: None,
        })
    }

    fn lemma(&self, word: &str) -> String {
        self.lemma_lower(&word.to_lowercase())
    }
}

/// Candidate lemmas from suffix stripping, most specific first.
fn suffix_candidates(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut push = |s: String| {
        if !s.is_empty() && !out.contains(&s) {
            out.push(s);
        }
    };
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.len() >= 2 {
            push(format!("{stem}y"));
        }
    }
    for suffix in ["sses", "shes", "ches", "xes", "zes"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            push(format!("{stem}{}", &suffix[..suffix.len() - 2]));
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        push(stem.to_string());
        push(format!("{stem}e"));
    }
    if let Some(stem) = word.strip_suffix('s') {
        if !stem.ends_with('s') && !stem.ends_with('u') && !stem.ends_with('i') {
            push(stem.to_string());
        }
    }
    if let Some(stem) = word.strip_suffix("ing") {
        if stem.len() >= 2 {
            push(stem.to_string());
            push(format!("{stem}e"));
            push(undouble(stem));
        }
    }
    if let Some(stem) = word.strip_suffix("ied") {
        push(format!("{stem}y"));
    }
    if let Some(stem) = word.strip_suffix("ed") {
        if stem.len() >= 2 {
            push(stem.to_string());
            push(format!("{stem}e"));
            push(undouble(stem));
        }
    }
    out
}

fn undouble(stem: &str) -> String {
    let chars: Vec<char> = stem.chars().collect();
    if chars.len() >= 2 && chars[chars.len() - 1] == chars[chars.len() - 2] {
        chars[..chars.len() - 1].iter().collect()
    } else {
        stem.to_string()
    }
}

fn guess_pos(surface: &str) -> Pos {
    let lower = surface.to_lowercase();
    if lower.chars().all(|c| c.is_ascii_digit() || c == '.' || c == ',') {
        return Pos::Number;
    }
    if lower.ends_with("ly") {
        return Pos::Adverb;
    }
    for suffix in ["tion", "sion", "ment", "ness", "ity", "ship", "hood", "ism"] {
        if lower.ends_with(suffix) {
            return Pos::Noun;
        }
    }
    for suffix in ["ous", "ful", "ive", "ible", "able", "ical"] {
        if lower.ends_with(suffix) {
            return Pos::Adjective;
        }
    }
    for suffix in ["ize", "ise", "ify"] {
        if lower.ends_with(suffix) {
            return Pos::Verb;
        }
    }
    Pos::Noun
}

/// Sentence boundaries as byte ranges. A sentence ends after a run of
/// `.?!` followed by whitespace and an uppercase letter, digit, or EOF.
fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c == '.' || c == '?' || c == '!' {
            // Consume the whole punctuation run.
            let mut j = i;
            while j + 1 < bytes.len() && matches!(bytes[j + 1].1, '.' | '?' | '!') {
                j += 1;
            }
            let mut k = j + 1;
            while k < bytes.len() && bytes[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = k >= bytes.len()
                || bytes[k].1.is_uppercase()
                || bytes[k].1.is_ascii_digit()
                || bytes[k].1 == '"'
                || bytes[k].1 == '\u{2018}'
                || bytes[k].1 == '\u{201c}';
            if boundary && k > j + 1 || k >= bytes.len() {
                let end = bytes
                    .get(j + 1)
                    .map(|&(p, _)| p)
                    .unwrap_or_else(|| text.len());
                sentences.push((start, end.max(pos + c.len_utf8())));
                start = bytes.get(k).map(|&(p, _)| p).unwrap_or_else(|| text.len());
                i = k;
                continue;
            }
            i = j + 1;
            continue;
        }
        i += 1;
    }
    if start < text.len() && text[start..].chars().any(|c| !c.is_whitespace()) {
        sentences.push((start, text.len()));
    }
    sentences
}

/// Token spans inside one sentence range. Words keep internal hyphens and
/// apostrophes; contractions split at the clitic; punctuation runs of the
/// same character form one token.
fn tokenize(text: &str, (start, end): (usize, usize)) -> Vec<(usize, usize)> {
    let slice = &text[start..end];
    let mut spans = Vec::new();
    let chars: Vec<(usize, char)> = slice.char_indices().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let (off, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i;
            while j + 1 < chars.len() {
                let next = chars[j + 1].1;
                let word_char = next.is_alphanumeric()
                    || ((next == '\'' || next == '\u{2019}' || next == '-')
                        && j + 2 < chars.len()
                        && chars[j + 2].1.is_alphanumeric());
                if word_char {
                    j += 1;
                } else {
                    break;
                }
            }
            let word_start = start + off;
            let word_end = start + chars[j].0 + chars[j].1.len_utf8();
            for span in split_contraction(text, word_start, word_end) {
                spans.push(span);
            }
            i = j + 1;
        } else {
            // Punctuation or symbol: group a run of the identical character.
            let mut j = i;
            while j + 1 < chars.len() && chars[j + 1].1 == c {
                j += 1;
            }
            spans.push((start + off, start + chars[j].0 + chars[j].1.len_utf8()));
            i = j + 1;
        }
    }
    spans
}

const CLITICS: [&str; 7] = ["n't", "'s", "'re", "'ve", "'ll", "'d", "'m"];

fn split_contraction(text: &str, start: usize, end: usize) -> Vec<(usize, usize)> {
    let word = &text[start..end];
    for clitic in CLITICS {
        if let Some(stem) = word.to_lowercase().strip_suffix(clitic) {
            if !stem.is_empty() {
                let split = start + stem.len();
                return vec![(start, split), (split, end)];
            }
        }
    }
    vec![(start, end)]
}

// ---------------------------------------------------------------------------
// External analyzer
// ---------------------------------------------------------------------------

/// Tag mapping table for external taggers (UD / Penn tags -> closed set).
#[derive(Debug, Clone)]
pub struct PosMap {
    map: HashMap<String, Pos>,
}

impl PosMap {
    pub fn bundled() -> PosMap {
        let mut map = HashMap::new();
        for line in data::POS_MAP.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split('\t');
            if let (Some(from), Some(to)) = (parts.next(), parts.next()) {
                map.insert(from.to_string(), Pos::parse_lenient(to));
            }
        }
        PosMap { map }
    }

    pub fn resolve(&self, tag: &str) -> Pos {
        if let Some(&pos) = self.map.get(tag) {
            return pos;
        }
        Pos::parse_lenient(&tag.to_lowercase())
    }
}

#[derive(Debug, Deserialize)]
struct ExternalToken {
    surface: String,
    lemma: String,
    pos: String,
    start: usize,
    end: usize,
}

/// Adapter to an off-the-shelf tagger. The command receives the document
/// text on stdin and must print a JSON array of sentences, each an array of
/// `{"surface", "lemma", "pos", "start", "end"}` objects. Tags are mapped
/// onto the closed set via [`PosMap`].
pub struct ExternalAnalyzer {
    command: Vec<String>,
    pos_map: PosMap,
    stopwords: StopwordSet,
    fallback: RuleAnalyzer,
}

impl ExternalAnalyzer {
    pub fn new(command: Vec<String>) -> ExternalAnalyzer {
        ExternalAnalyzer {
            command,
            pos_map: PosMap::bundled(),
            stopwords: StopwordSet::bundled(),
            fallback: RuleAnalyzer::bundled(),
        }
    }

    fn run(&self, doc_id: &str, text: &str) -> Result<Vec<Vec<ExternalToken>>, TextError> {
        let fail = |message: String| TextError::Analyzer {
            doc_id: doc_id.to_string(),
            message,
        };
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| fail("empty analyzer command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("failed to spawn {program}: {e}")))?;
        child
            .stdin
            .take()
            .expect("stdin piped")
            .write_all(text.as_bytes())
            .map_err(|e| fail(format!("failed to write analyzer input: {e}")))?;
        let output = child
            .wait_with_output()
            .map_err(|e| fail(format!("analyzer did not finish: {e}")))?;
        if !output.status.success() {
            return Err(fail(format!(
                "analyzer exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr)
            )));
        }
        serde_json::from_slice(&output.stdout)
            .map_err(|e| fail(format!("invalid analyzer output: {e}")))
    }
}

impl Analyzer for ExternalAnalyzer {
    fn analyze(&self, doc_id: &str, text: &str) -> Result<AnalyzedDocument, TextError> {
        let sentences = self.run(doc_id, text)?;
        let sentences = sentences
            .into_iter()
            .map(|sent| {
                sent.into_iter()
                    .map(|tok| {
                        let klass = classify(&tok.surface, &self.stopwords);
                        Token {
                            lemma: tok.lemma.to_lowercase(),
                            pos: self.pos_map.resolve(&tok.pos),
                            span: CharSpan {
                                start: tok.start,
                                end: tok.end,
                            },
                            klass,
                            surface: tok.surface,
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(AnalyzedDocument {
            doc_id: doc_id.to_string(),
            sentences,
            source_text: text.to_string(),
            essay_score: None,
            essay_level: None,
            gold_labels: None,
        })
    }

    fn lemma(&self, word: &str) -> String {
        // Single-word lookups stay in-process; the subprocess protocol is
        // paid once per document, not once per lexicon row.
        self.fallback.lemma(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cefr::TokenClass;

    #[test]
    fn analyze_simple_sentence() {
        let analyzer = RuleAnalyzer::bundled();
        let doc = analyzer.analyze("d", "They work with the police.").unwrap();
        assert_eq!(doc.sentences.len(), 1);
        let tokens = &doc.sentences[0];
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["They", "work", "with", "the", "police", "."]);
        let work = &tokens[1];
        assert_eq!(work.lemma, "work");
        assert_eq!(work.pos, Pos::Verb);
        assert_eq!(work.klass, TokenClass::Content);
        assert_eq!(tokens[4].pos, Pos::Noun);
        assert_eq!(tokens[5].klass, TokenClass::Punctuation);
    }

    #[test]
    fn analyze_empty_input() {
        let analyzer = RuleAnalyzer::bundled();
        let doc = analyzer.analyze("d", "").unwrap();
        assert!(doc.sentences.is_empty());
    }

    #[test]
    fn across_is_stopword() {
        let analyzer = RuleAnalyzer::bundled();
        let doc = analyzer.analyze("d", "Across the road.").unwrap();
        assert_eq!(doc.sentences[0][0].klass, TokenClass::Stopword);
    }

    #[test]
    fn spans_match_surfaces() {
        let analyzer = RuleAnalyzer::bundled();
        let text = "The plane took off. It was late!";
        let doc = analyzer.analyze("d", text).unwrap();
        assert_eq!(doc.sentences.len(), 2);
        for (_, _, tok) in doc.positions() {
            assert_eq!(&text[tok.span.start..tok.span.end], tok.surface);
        }
    }

    #[test]
    fn contraction_split_and_hyphen_kept() {
        let analyzer = RuleAnalyzer::bundled();
        let doc = analyzer.analyze("d", "They don't like part-time work.").unwrap();
        let surfaces: Vec<&str> = doc.sentences[0].iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(
            surfaces,
            vec!["They", "do", "n't", "like", "part-time", "work", "."]
        );
        assert_eq!(doc.sentences[0][2].klass, TokenClass::Stopword);
        assert_eq!(doc.sentences[0][2].lemma, "not");
    }

    #[test]
    fn lemmatizer_irregulars_and_suffixes() {
        let analyzer = RuleAnalyzer::bundled();
        for (surface, lemma) in [
            ("took", "take"),
            ("works", "work"),
            ("worked", "work"),
            ("pushing", "push"),
            ("organizations", "organization"),
            ("aimed", "aim"),
            ("trapped", "trap"),
            ("services", "service"),
            ("studies", "study"),
            ("better", "good"),
            ("buses", "bus"),
        ] {
            assert_eq!(analyzer.lemma(surface), lemma, "lemma of {surface}");
        }
    }

    #[test]
    fn pos_map_resolves_ud_and_penn() {
        let map = PosMap::bundled();
        assert_eq!(map.resolve("NOUN"), Pos::Noun);
        assert_eq!(map.resolve("AUX"), Pos::Verb);
        assert_eq!(map.resolve("VBD"), Pos::Verb);
        assert_eq!(map.resolve("MD"), Pos::Modal);
        assert_eq!(map.resolve("mystery"), Pos::Other);
    }
}
