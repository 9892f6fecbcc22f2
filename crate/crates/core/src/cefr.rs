//! Core domain vocabulary: CEFR levels, word labels, PoS tags, token classes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Error raised when a label, level, or tag string is not recognized.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown {kind} label: {value:?}")]
pub struct ParseLabelError {
    pub kind: &'static str,
    pub value: String,
}

/// One of the six CEFR proficiency levels, totally ordered A1 < A2 < B1 < B2 < C1 < C2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CefrLevel {
    A1,
    A2,
    B1,
    B2,
    C1,
    C2,
}

impl CefrLevel {
    /// All levels in ascending order.
    pub const ALL: [CefrLevel; 6] = [
        CefrLevel::A1,
        CefrLevel::A2,
        CefrLevel::B1,
        CefrLevel::B2,
        CefrLevel::C1,
        CefrLevel::C2,
    ];

    /// Numeric weight of the level: A1→1 … C2→6.
    pub fn ordinal(self) -> u8 {
        match self {
            CefrLevel::A1 => 1,
            CefrLevel::A2 => 2,
            CefrLevel::B1 => 3,
            CefrLevel::B2 => 4,
            CefrLevel::C1 => 5,
            CefrLevel::C2 => 6,
        }
    }

    /// Zero-based index into `ALL`.
    pub fn index(self) -> usize {
        self.ordinal() as usize - 1
    }

    pub fn label(self) -> &'static str {
        match self {
            CefrLevel::A1 => "A1",
            CefrLevel::A2 => "A2",
            CefrLevel::B1 => "B1",
            CefrLevel::B2 => "B2",
            CefrLevel::C1 => "C1",
            CefrLevel::C2 => "C2",
        }
    }

    pub fn from_ordinal(ordinal: u8) -> Option<CefrLevel> {
        CefrLevel::ALL.get(ordinal.checked_sub(1)? as usize).copied()
    }
}

impl fmt::Display for CefrLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CefrLevel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A1" => Ok(CefrLevel::A1),
            "A2" => Ok(CefrLevel::A2),
            "B1" => Ok(CefrLevel::B1),
            "B2" => Ok(CefrLevel::B2),
            "C1" => Ok(CefrLevel::C1),
            "C2" => Ok(CefrLevel::C2),
            other => Err(ParseLabelError {
                kind: "CEFR level",
                value: other.to_string(),
            }),
        }
    }
}

/// Per-token outcome label: a CEFR level, `N/A` (not in the lexicon or no
/// matching sense), `S` (stopword), or `P` (punctuation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WordLabel {
    Level(CefrLevel),
    NotInLexicon,
    Stopword,
    Punctuation,
}

impl WordLabel {
    /// The evaluation alphabet in report order: N/A first, then A1..C2.
    pub fn scored_labels() -> Vec<WordLabel> {
        let mut labels = vec![WordLabel::NotInLexicon];
        labels.extend(CefrLevel::ALL.iter().map(|&l| WordLabel::Level(l)));
        labels
    }

    pub fn level(self) -> Option<CefrLevel> {
        match self {
            WordLabel::Level(l) => Some(l),
            _ => None,
        }
    }

    /// True for labels that take part in accuracy/F1 scoring (levels and N/A).
    pub fn is_scored(self) -> bool {
        !matches!(self, WordLabel::Stopword | WordLabel::Punctuation)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WordLabel::Level(l) => l.label(),
            WordLabel::NotInLexicon => "N/A",
            WordLabel::Stopword => "S",
            WordLabel::Punctuation => "P",
        }
    }
}

impl fmt::Display for WordLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WordLabel {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "N/A" => Ok(WordLabel::NotInLexicon),
            "S" => Ok(WordLabel::Stopword),
            "P" => Ok(WordLabel::Punctuation),
            other => other
                .parse::<CefrLevel>()
                .map(WordLabel::Level)
                .map_err(|_| ParseLabelError {
                    kind: "word label",
                    value: other.to_string(),
                }),
        }
    }
}

impl Serialize for WordLabel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for WordLabel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Part-of-speech tag. The lexicon uses the closed dictionary-style set;
/// analyzer output may additionally fall back to `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Preposition,
    Pronoun,
    Determiner,
    Conjunction,
    Exclamation,
    Phrase,
    Modal,
    Number,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adjective => "adjective",
            Pos::Adverb => "adverb",
            Pos::Preposition => "preposition",
            Pos::Pronoun => "pronoun",
            Pos::Determiner => "determiner",
            Pos::Conjunction => "conjunction",
            Pos::Exclamation => "exclamation",
            Pos::Phrase => "phrase",
            Pos::Modal => "modal",
            Pos::Number => "number",
            Pos::Other => "other",
        }
    }

    /// Parse a tag from the closed lexicon set. `"other"` is rejected here:
    /// lexicon entries must carry a real tag.
    pub fn parse_closed(s: &str) -> Result<Pos, ParseLabelError> {
        let pos = Pos::parse_lenient(s);
        if pos == Pos::Other {
            Err(ParseLabelError {
                kind: "PoS",
                value: s.to_string(),
            })
        } else {
            Ok(pos)
        }
    }

    /// Parse a tag, mapping anything unknown to `Other`.
    pub fn parse_lenient(s: &str) -> Pos {
        match s {
            "noun" => Pos::Noun,
            "verb" => Pos::Verb,
            "adjective" => Pos::Adjective,
            "adverb" => Pos::Adverb,
            "preposition" => Pos::Preposition,
            "pronoun" => Pos::Pronoun,
            "determiner" => Pos::Determiner,
            "conjunction" => Pos::Conjunction,
            "exclamation" => Pos::Exclamation,
            "phrase" => Pos::Phrase,
            "modal" => Pos::Modal,
            "number" => Pos::Number,
            _ => Pos::Other,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether a word is ambiguous (its lexicon entries within one PoS span more
/// than one level), non-ambiguous, or absent from the lexicon entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ambiguity {
    Ambiguous,
    NonAmbiguous,
    Unknown,
}

/// Coarse token class assigned during analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenClass {
    Content,
    Stopword,
    Punctuation,
}
