//! Graded lexicon: parsing, validation, lemma-indexed lookup, and polysemy
//! statistics.
//!
//! The on-disk format is UTF-8 JSON lines, one entry per line. A row may
//! carry a single `level` label or a `levels` list; multi-level rows are
//! split at ingest into one entry per level so that every entry means "one
//! sense at one level". Entries are retrievable under every lemma in their
//! `ref_words`; for phrase entries these default to the phrase's content
//! words (stopwords and `sb`/`sth`-style placeholders removed, lemmatized
//! with the same analyzer as the text pipeline).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cefr::{Ambiguity, CefrLevel, Pos};
use crate::textproc::{Analyzer, RuleAnalyzer, StopwordSet};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: unknown level label {label:?}")]
    UnknownLevel {
        path: String,
        line: usize,
        label: String,
    },
    #[error("{path}:{line}: unknown PoS tag {tag:?}")]
    UnknownPos {
        path: String,
        line: usize,
        tag: String,
    },
    #[error("{path}:{line}: duplicate entry id {id:?}")]
    DuplicateId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("{path}:{line}: reserved entry id {id:?}")]
    ReservedId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("cannot compute statistics of an empty lexicon")]
    EmptyLexicon,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One graded sense: a head word at exactly one CEFR level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexEntry {
    pub id: String,
    pub head: String,
    pub pos: Pos,
    #[serde(default)]
    pub guideword: String,
    pub level: CefrLevel,
    pub definition: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrase: Option<String>,
    pub ref_words: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learner_example: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary_example: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

impl LexEntry {
    /// The "additional information" string shown next to a definition in
    /// option lists: the phrase pattern (or head word) plus the guideword.
    pub fn info(&self) -> String {
        let base = self.phrase.as_deref().unwrap_or(&self.head);
        if self.guideword.is_empty() {
            base.to_string()
        } else {
            format!("{base} ({})", self.guideword)
        }
    }

    /// Preferred example sentence: learner example, else dictionary example.
    pub fn example(&self) -> Option<&str> {
        self.learner_example
            .as_deref()
            .or(self.dictionary_example.as_deref())
    }
}

/// Raw on-disk row. `level` and `levels` are both accepted; exactly one is
/// required. Missing `ref_words` triggers the defaulting rule.
#[derive(Debug, Deserialize)]
struct RawEntry {
    id: String,
    head: String,
    pos: String,
    #[serde(default)]
    guideword: String,
    #[serde(default)]
    level: Option<String>,
    #[serde(default)]
    levels: Option<Vec<String>>,
    definition: String,
    #[serde(default)]
    phrase: Option<String>,
    #[serde(default)]
    ref_words: Option<Vec<String>>,
    #[serde(default)]
    learner_example: Option<String>,
    #[serde(default)]
    dictionary_example: Option<String>,
    #[serde(default)]
    topic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconMeta {
    pub source: String,
    pub version: String,
}

/// Immutable lemma-indexed lexicon. Lookup order is entry file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    index: BTreeMap<String, Vec<usize>>,
    by_id: HashMap<String, usize>,
    meta: LexiconMeta,
}

/// Placeholder tokens in phrase patterns that never act as reference words.
const PHRASE_PLACEHOLDERS: [&str; 5] = ["sb", "sth", "swh", "somebody", "something"];

impl Lexicon {
    /// Parse a JSON-lines lexicon. `analyzer` and `stopwords` drive the
    /// ref-word defaulting rule for phrase entries.
    pub fn parse<R: BufRead>(
        reader: R,
        path: &str,
        analyzer: &dyn Analyzer,
        stopwords: &StopwordSet,
    ) -> Result<Lexicon, LexiconError> {
        let mut entries = Vec::new();
        let mut by_id = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawEntry =
                serde_json::from_str(&line).map_err(|e| LexiconError::Malformed {
                    path: path.to_string(),
                    line: lineno,
                    message: e.to_string(),
                })?;
            let pos = Pos::parse_closed(&raw.pos).map_err(|e| LexiconError::UnknownPos {
                path: path.to_string(),
                line: lineno,
                tag: e.value,
            })?;
            let level_labels: Vec<String> = match (&raw.level, &raw.levels) {
                (Some(l), None) => vec![l.clone()],
                (None, Some(ls)) if !ls.is_empty() => ls.clone(),
                _ => {
                    return Err(LexiconError::Malformed {
                        path: path.to_string(),
                        line: lineno,
                        message: "exactly one of `level` or a nonempty `levels` is required"
                            .to_string(),
                    })
                }
            };
            let mut levels = Vec::new();
            for label in &level_labels {
                let level: CefrLevel =
                    label.parse().map_err(|_| LexiconError::UnknownLevel {
                        path: path.to_string(),
                        line: lineno,
                        label: label.clone(),
                    })?;
                levels.push(level);
            }
            let ref_words = match &raw.ref_words {
                Some(words) if !words.is_empty() => {
                    let mut words: Vec<String> =
                        words.iter().map(|w| w.to_lowercase()).collect();
                    let head = raw.head.to_lowercase();
                    if !words.contains(&head) {
                        words.push(head);
                    }
                    words
                }
                _ => default_ref_words(&raw.head, raw.phrase.as_deref(), analyzer, stopwords),
            };
            let split = levels.len() > 1;
            for level in levels {
                let id = if split {
                    format!("{}:{}", raw.id, level)
                } else {
                    raw.id.clone()
                };
                if id == "NONE" {
                    return Err(LexiconError::ReservedId {
                        path: path.to_string(),
                        line: lineno,
                        id,
                    });
                }
                if by_id.contains_key(&id) {
                    return Err(LexiconError::DuplicateId {
                        path: path.to_string(),
                        line: lineno,
                        id,
                    });
                }
                by_id.insert(id.clone(), entries.len());
                entries.push(LexEntry {
                    id,
                    head: raw.head.to_lowercase(),
                    pos,
                    guideword: raw.guideword.clone(),
                    level,
                    definition: raw.definition.clone(),
                    phrase: raw.phrase.clone(),
                    ref_words: ref_words.clone(),
                    learner_example: raw.learner_example.clone(),
                    dictionary_example: raw.dictionary_example.clone(),
                    topic: raw.topic.clone(),
                });
            }
        }
        let mut index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, entry) in entries.iter().enumerate() {
            for word in &entry.ref_words {
                index.entry(word.clone()).or_default().push(i);
            }
        }
        Ok(Lexicon {
            entries,
            index,
            by_id,
            meta: LexiconMeta {
                source: path.to_string(),
                version: String::new(),
            },
        })
    }

    /// Parse from a file path using the bundled analyzer and stopword list.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Lexicon, LexiconError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        let analyzer = RuleAnalyzer::bundled();
        let stopwords = StopwordSet::bundled();
        let mut lexicon = Lexicon::parse(
            std::io::BufReader::new(file),
            &path.display().to_string(),
            &analyzer,
            &stopwords,
        )?;
        // Version = content hash, so manifests can pin the exact lexicon.
        let bytes = std::fs::read(path)?;
        lexicon.meta.version = crate::util::sha256_hex(&[&bytes])[..16].to_string();
        Ok(lexicon)
    }

    /// Serialize to the canonical JSON-lines form (one entry per line,
    /// single `level` field, explicit ref_words).
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn meta(&self) -> &LexiconMeta {
        &self.meta
    }

    pub fn entry(&self, id: &str) -> Option<&LexEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    /// All entries retrievable under `lemma`, in file order. Absence is an
    /// empty result.
    pub fn lookup(&self, lemma: &str) -> Vec<&LexEntry> {
        self.index
            .get(lemma)
            .map(|ids| ids.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    /// Every lemma the index covers, in sorted order.
    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.index.keys().map(|s| s.as_str())
    }

    /// Ambiguity of a lemma, optionally restricted to one PoS. A lemma is
    /// ambiguous when the entries of a single PoS span more than one level.
    pub fn ambiguity(&self, lemma: &str, pos: Option<Pos>) -> Ambiguity {
        let candidates = self.lookup(lemma);
        if candidates.is_empty() {
            return Ambiguity::Unknown;
        }
        let ambiguous = match pos {
            Some(pos) => spans_multiple_levels(candidates.iter().filter(|e| e.pos == pos)),
            None => {
                let mut by_pos: BTreeMap<Pos, HashSet<CefrLevel>> = BTreeMap::new();
                for entry in &candidates {
                    by_pos.entry(entry.pos).or_default().insert(entry.level);
                }
                by_pos.values().any(|levels| levels.len() > 1)
            }
        };
        if ambiguous {
            Ambiguity::Ambiguous
        } else {
            Ambiguity::NonAmbiguous
        }
    }

    /// Corpus-level polysemy statistics.
    pub fn stats(&self) -> Result<LexiconStats, LexiconError> {
        if self.entries.is_empty() {
            return Err(LexiconError::EmptyLexicon);
        }
        let mut options_per_word: BTreeMap<&str, usize> = BTreeMap::new();
        let mut pair_levels: BTreeMap<(&str, Pos), HashSet<CefrLevel>> = BTreeMap::new();
        for entry in &self.entries {
            *options_per_word.entry(entry.head.as_str()).or_insert(0) += 1;
            pair_levels
                .entry((entry.head.as_str(), entry.pos))
                .or_default()
                .insert(entry.level);
        }
        let unique_word_count = options_per_word.len();
        let mut histogram_counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &count in options_per_word.values() {
            *histogram_counts.entry(count).or_insert(0) += 1;
        }
        let polysemy_histogram = histogram_counts
            .into_iter()
            .map(|(options, count)| (options, 100.0 * count as f64 / unique_word_count as f64))
            .collect();
        let ambiguous_entries = self
            .entries
            .iter()
            .filter(|e| pair_levels[&(e.head.as_str(), e.pos)].len() > 1)
            .count();
        let ambiguous_words = options_per_word
            .keys()
            .filter(|&&head| {
                pair_levels
                    .iter()
                    .any(|(&(h, _), levels)| h == head && levels.len() > 1)
            })
            .count();
        Ok(LexiconStats {
            entry_count: self.entries.len(),
            unique_word_count,
            polysemy_histogram,
            ambiguous_entry_pct: 100.0 * ambiguous_entries as f64 / self.entries.len() as f64,
            ambiguous_word_pct: 100.0 * ambiguous_words as f64 / unique_word_count as f64,
        })
    }
}

fn spans_multiple_levels<'a, I: Iterator<Item = &'a &'a LexEntry>>(entries: I) -> bool {
    let mut levels = HashSet::new();
    for entry in entries {
        levels.insert(entry.level);
        if levels.len() > 1 {
            return true;
        }
    }
    false
}

fn default_ref_words(
    head: &str,
    phrase: Option<&str>,
    analyzer: &dyn Analyzer,
    stopwords: &StopwordSet,
) -> Vec<String> {
    let mut words = vec![head.to_lowercase()];
    if let Some(phrase) = phrase {
        for raw in phrase.split(|c: char| !c.is_alphanumeric()) {
            if raw.is_empty() {
                continue;
            }
            let lower = raw.to_lowercase();
            if stopwords.contains(&lower) || PHRASE_PLACEHOLDERS.contains(&lower.as_str()) {
                continue;
            }
            let lemma = analyzer.lemma(&lower);
            if !words.contains(&lemma) {
                words.push(lemma);
            }
        }
    }
    words
}

/// Polysemy statistics over a lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconStats {
    pub entry_count: usize,
    pub unique_word_count: usize,
    /// Percentage of unique words having exactly N options (entries).
    pub polysemy_histogram: BTreeMap<usize, f64>,
    /// Percentage of entries whose (head, PoS) group spans more than one level.
    pub ambiguous_entry_pct: f64,
    /// Percentage of unique words with some PoS group spanning more than one level.
    pub ambiguous_word_pct: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(jsonl: &str) -> Result<Lexicon, LexiconError> {
        let analyzer = RuleAnalyzer::bundled();
        let stopwords = StopwordSet::bundled();
        Lexicon::parse(jsonl.as_bytes(), "test", &analyzer, &stopwords)
    }

    #[test]
    fn parse_empty_file() {
        let lexicon = parse("").unwrap();
        assert!(lexicon.entries().is_empty());
        assert!(lexicon.lookup("push").is_empty());
    }

    #[test]
    fn parse_single_entry_with_guideword() {
        let lexicon = parse(
            r#"{"id":"push.v.2","head":"push","pos":"verb","guideword":"PERSUADE","level":"C2","definition":"to try hard to make someone act"}"#,
        )
        .unwrap();
        let hits = lexicon.lookup("push");
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].level, CefrLevel::C2);
        assert_eq!(hits[0].guideword, "PERSUADE");
        assert_eq!(hits[0].ref_words, vec!["push"]);
    }

    #[test]
    fn phrase_ref_words_default_to_content_lemmas() {
        let lexicon = parse(
            r#"{"id":"ta.1","head":"take","pos":"phrase","level":"B2","definition":"to use a situation well","phrase":"take advantage of sth"}"#,
        )
        .unwrap();
        assert_eq!(lexicon.lookup("take").len(), 1);
        assert_eq!(lexicon.lookup("advantage").len(), 1);
        assert!(lexicon.lookup("of").is_empty());
        assert!(lexicon.lookup("sth").is_empty());
    }

    #[test]
    fn multi_level_rows_split() {
        let lexicon = parse(
            r#"{"id":"dream.v.1","head":"dream","pos":"verb","guideword":"SLEEP","levels":["A2","B1"],"definition":"to imagine while asleep"}"#,
        )
        .unwrap();
        assert_eq!(lexicon.entries().len(), 2);
        let hits = lexicon.lookup("dream");
        assert_eq!(hits[0].id, "dream.v.1:A2");
        assert_eq!(hits[1].id, "dream.v.1:B1");
        assert_eq!(hits[0].guideword, hits[1].guideword);
        // Split preserves the (head, pos, guideword, level) tuples.
        let tuples: Vec<_> = hits
            .iter()
            .map(|e| (e.head.clone(), e.pos, e.guideword.clone(), e.level))
            .collect();
        assert_eq!(tuples[0].3, CefrLevel::A2);
        assert_eq!(tuples[1].3, CefrLevel::B1);
    }

    #[test]
    fn parse_errors_report_line_numbers() {
        let err = parse("{\"id\":\"a\"}\n").unwrap_err();
        assert!(matches!(err, LexiconError::Malformed { line: 1, .. }), "{err}");

        let err = parse(
            "{\"id\":\"a\",\"head\":\"x\",\"pos\":\"noun\",\"level\":\"A1\",\"definition\":\"d\"}\n{\"id\":\"b\",\"head\":\"y\",\"pos\":\"noun\",\"level\":\"Z9\",\"definition\":\"d\"}\n",
        )
        .unwrap_err();
        assert!(matches!(err, LexiconError::UnknownLevel { line: 2, .. }), "{err}");

        let err = parse(
            r#"{"id":"a","head":"x","pos":"gerund","level":"A1","definition":"d"}"#,
        )
        .unwrap_err();
        assert!(matches!(err, LexiconError::UnknownPos { .. }), "{err}");

        let dup = r#"{"id":"a","head":"x","pos":"noun","level":"A1","definition":"d"}"#;
        let err = parse(&format!("{dup}\n{dup}\n")).unwrap_err();
        assert!(matches!(err, LexiconError::DuplicateId { line: 2, .. }), "{err}");
    }

    #[test]
    fn ambiguity_rules() {
        let lexicon = parse(concat!(
            r#"{"id":"aim.n.1","head":"aim","pos":"noun","level":"B1","definition":"a goal"}"#,
            "\n",
            r#"{"id":"aim.v.1","head":"aim","pos":"verb","level":"A2","definition":"to point"}"#,
            "\n",
            r#"{"id":"aim.v.2","head":"aim","pos":"verb","level":"B2","definition":"to intend"}"#,
            "\n",
        ))
        .unwrap();
        assert_eq!(lexicon.ambiguity("aim", Some(Pos::Noun)), Ambiguity::NonAmbiguous);
        assert_eq!(lexicon.ambiguity("aim", Some(Pos::Verb)), Ambiguity::Ambiguous);
        assert_eq!(lexicon.ambiguity("aim", None), Ambiguity::Ambiguous);
        assert_eq!(lexicon.ambiguity("qqqq", None), Ambiguity::Unknown);
    }

    #[test]
    fn stats_three_word_fixture() {
        let lexicon = parse(concat!(
            r#"{"id":"a.1","head":"alpha","pos":"noun","level":"A1","definition":"d"}"#,
            "\n",
            r#"{"id":"b.1","head":"beta","pos":"noun","level":"A2","definition":"d"}"#,
            "\n",
            r#"{"id":"c.1","head":"gamma","pos":"noun","level":"B1","definition":"d"}"#,
            "\n",
            r#"{"id":"c.2","head":"gamma","pos":"verb","level":"B2","definition":"d"}"#,
            "\n",
        ))
        .unwrap();
        let stats = lexicon.stats().unwrap();
        assert_eq!(stats.entry_count, 4);
        assert_eq!(stats.unique_word_count, 3);
        assert_eq!(format!("{:.2}", stats.polysemy_histogram[&1]), "66.67");
        assert_eq!(format!("{:.2}", stats.polysemy_histogram[&2]), "33.33");
        let total: f64 = stats.polysemy_histogram.values().sum();
        assert!((total - 100.0).abs() < 0.01);
    }

    #[test]
    fn stats_singleton() {
        let lexicon = parse(
            r#"{"id":"a.1","head":"alpha","pos":"noun","level":"A1","definition":"d"}"#,
        )
        .unwrap();
        let stats = lexicon.stats().unwrap();
        assert_eq!(stats.polysemy_histogram[&1], 100.0);
        assert_eq!(stats.ambiguous_word_pct, 0.0);
    }

    #[test]
    fn stats_empty_is_error() {
        let lexicon = parse("").unwrap();
        assert!(matches!(lexicon.stats(), Err(LexiconError::EmptyLexicon)));
    }
}
