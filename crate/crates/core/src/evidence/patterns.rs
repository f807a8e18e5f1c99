//! Corpus evidence for adjective connecting words.
//!
//! An adjective is usable when the corpus shows it describing the target
//! (attributively, "sweet love", or predicatively, "love is sweet") and shows
//! it as a salient property of the source through an established simile
//! ("as sweet as an apple").

use serde::{Deserialize, Serialize};

use super::corpus::{label_matches, CorpusIndex, ParsedSentence};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternCounts {
    /// Sentences where the adjective modifies the target directly.
    pub attributive: u64,
    /// Sentences where the target is the subject of the copular adjective.
    pub predicative: u64,
    /// Occurrences of "as ADJ as" followed within two tokens by the source.
    pub simile: u64,
}

impl PatternCounts {
    pub fn describes(&self) -> u64 {
        self.attributive + self.predicative
    }
}

impl std::ops::Add for PatternCounts {
    type Output = PatternCounts;

    fn add(self, rhs: Self) -> Self {
        PatternCounts {
            attributive: self.attributive + rhs.attributive,
            predicative: self.predicative + rhs.predicative,
            simile: self.simile + rhs.simile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjectiveThresholds {
    pub describe: u64,
    pub salience: u64,
}

impl Default for AdjectiveThresholds {
    fn default() -> Self {
        Self {
            describe: 3,
            salience: 1,
        }
    }
}

pub fn count_adjective_patterns(
    index: &CorpusIndex,
    adjective: &str,
    target: &str,
    source: &str,
) -> PatternCounts {
    let adjective = adjective.to_lowercase();
    let target = target.to_lowercase();
    let source = source.to_lowercase();
    let labels = index.labels();
    let mut counts = PatternCounts::default();

    for id in index.sentences_with_all(&[&adjective, &target]) {
        let s = &index.sentences()[id];
        let attributive = s.tokens.iter().enumerate().any(|(i, t)| {
            t.lemma == adjective
                && label_matches(&t.deprel, &labels.adjectival_modifier)
                && s.head_of(i).is_some_and(|h| s.tokens[h].lemma == target)
        });
        let predicative = s.tokens.iter().enumerate().any(|(i, t)| {
            t.lemma == target
                && label_matches(&t.deprel, &labels.subject)
                && s.head_of(i).is_some_and(|h| {
                    s.tokens[h].lemma == adjective
                        && s
                            .children(h)
                            .any(|c| label_matches(&s.tokens[c].deprel, &labels.copula))
                })
        });
        counts.attributive += u64::from(attributive);
        counts.predicative += u64::from(predicative);
    }

    for id in index.sentences_with_all(&[&adjective, &source]) {
        counts.simile += simile_matches(&index.sentences()[id], &adjective, &source);
    }
    counts
}

fn simile_matches(s: &ParsedSentence, adjective: &str, source: &str) -> u64 {
    let t = &s.tokens;
    let is_as = |i: usize| t.get(i).is_some_and(|tok| tok.form.eq_ignore_ascii_case("as"));
    let is_source = |i: usize| t.get(i).is_some_and(|tok| tok.lemma == source);
    (0..t.len())
        .filter(|&i| {
            is_as(i)
                && t.get(i + 1).is_some_and(|tok| tok.lemma == adjective)
                && is_as(i + 2)
                && (is_source(i + 3) || is_source(i + 4))
        })
        .count() as u64
}

/// Describes the target often enough and is salient for the source.
pub fn validate_adjective(counts: PatternCounts, thresholds: AdjectiveThresholds) -> bool {
    counts.describes() >= thresholds.describe && counts.simile >= thresholds.salience
}
