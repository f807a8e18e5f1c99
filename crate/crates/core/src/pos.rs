use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Coarse part of speech used by the lexicon and connector tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Noun,
    Adjective,
    Verb,
    Other,
}

impl Pos {
    /// The three categories a connecting word may take.
    pub const CONTENT: [Pos; 3] = [Pos::Adjective, Pos::Verb, Pos::Noun];

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Adjective => "adjective",
            Pos::Verb => "verb",
            Pos::Other => "other",
        }
    }

    pub fn is_content(self) -> bool {
        self != Pos::Other
    }

    /// Maps a Universal Dependencies UPOS tag onto the coarse set.
    pub fn from_upos(upos: &str) -> Pos {
        match upos {
            "NOUN" | "PROPN" => Pos::Noun,
            "ADJ" => Pos::Adjective,
            "VERB" => Pos::Verb,
            _ => Pos::Other,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "noun" | "n" | "propn" => Ok(Pos::Noun),
            "adjective" | "adj" | "a" => Ok(Pos::Adjective),
            "verb" | "v" => Ok(Pos::Verb),
            "other" | "x" => Ok(Pos::Other),
            other => Err(Error::InvalidParameter(format!(
                "unknown part of speech `{other}`"
            ))),
        }
    }
}
