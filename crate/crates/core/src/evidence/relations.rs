//! Subject-verb and subject-predicate-object evidence for verb and noun
//! connecting words, and ranking of explanation sentences.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::corpus::{is_valid_sentence, label_matches, CorpusIndex, ParsedSentence, ValidityParams};
use crate::embedding::EmbeddingStore;

/// Distance assigned to sentences with nothing scorable.
pub const MAX_DISTANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "subject-verb")]
    SubjectVerb,
    #[serde(rename = "subject-predicate-object")]
    SubjectPredicateObject,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::SubjectVerb => "subject-verb",
            Relation::SubjectPredicateObject => "subject-predicate-object",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSentence {
    pub sentence: ParsedSentence,
    /// The anchor lemma found in subject position.
    pub matched_keyword: String,
    pub relation: Relation,
    /// 0-based index of the anchor token.
    pub subject_index: usize,
    /// 0-based index of the verb governing the anchor.
    pub predicate_index: usize,
    /// Mean distance to the source; [`MAX_DISTANCE`] until ranked.
    pub distance_to_source: f64,
}

const VERB: &str = "VERB";

/// Sentences in which `anchor` is the subject of a verb that either is the
/// connector (subject-verb) or takes the connector as direct object
/// (subject-predicate-object). Results are valid sentences in id order with
/// exact-duplicate surfaces removed.
pub fn find_relation_sentences(
    index: &CorpusIndex,
    connector: &str,
    anchor: &str,
    relation: Relation,
    validity: ValidityParams,
) -> Vec<EvidenceSentence> {
    let connector = connector.to_lowercase();
    let anchor = anchor.to_lowercase();
    let labels = index.labels();
    let required: HashSet<String> = [connector.clone(), anchor.clone()].into();
    let mut seen_surfaces = HashSet::new();
    let mut out = Vec::new();

    for id in index.sentences_with_all(&[&connector, &anchor]) {
        let s = &index.sentences()[id];
        let found = s.tokens.iter().enumerate().find_map(|(i, t)| {
            if t.lemma != anchor || !label_matches(&t.deprel, &labels.subject) {
                return None;
            }
            let p = s.head_of(i)?;
            let pred = &s.tokens[p];
            if pred.upos != VERB {
                return None;
            }
            let hit = match relation {
                Relation::SubjectVerb => pred.lemma == connector,
                Relation::SubjectPredicateObject => s.children(p).any(|c| {
                    let o = &s.tokens[c];
                    o.lemma == connector && label_matches(&o.deprel, &labels.object)
                }),
            };
            hit.then_some((i, p))
        });
        let Some((subject_index, predicate_index)) = found else {
            continue;
        };
        if !is_valid_sentence(s, &required, validity) {
            continue;
        }
        if !seen_surfaces.insert(s.surface.clone()) {
            continue;
        }
        out.push(EvidenceSentence {
            sentence: s.clone(),
            matched_keyword: anchor.clone(),
            relation,
            subject_index,
            predicate_index,
            distance_to_source: MAX_DISTANCE,
        });
    }
    out
}

/// Mean semantic distance from the sentence's non-stopword, in-vocabulary
/// lemmas to `source`; [`MAX_DISTANCE`] when none qualify.
pub fn mean_distance_to(
    store: &EmbeddingStore,
    sentence: &ParsedSentence,
    source: &str,
    stopwords: &HashSet<String>,
) -> f64 {
    let distances: Vec<f64> = sentence
        .tokens
        .iter()
        .filter(|t| !stopwords.contains(&t.lemma))
        .filter_map(|t| store.semantic_distance(&t.lemma, source).ok())
        .collect();
    if distances.is_empty() {
        MAX_DISTANCE
    } else {
        distances.iter().sum::<f64>() / distances.len() as f64
    }
}

/// Scores each sentence by [`mean_distance_to`] and sorts ascending, ties by
/// sentence id.
pub fn rank_explanations(
    store: &EmbeddingStore,
    sentences: Vec<EvidenceSentence>,
    source: &str,
    stopwords: &HashSet<String>,
) -> Vec<EvidenceSentence> {
    let mut ranked: Vec<EvidenceSentence> = sentences
        .into_iter()
        .map(|mut e| {
            e.distance_to_source = mean_distance_to(store, &e.sentence, source, stopwords);
            e
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.distance_to_source
            .total_cmp(&b.distance_to_source)
            .then_with(|| a.sentence.id.cmp(&b.sentence.id))
    });
    ranked
}
