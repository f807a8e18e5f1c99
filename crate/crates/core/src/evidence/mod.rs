//! Corpus-backed validation of connecting words.
//!
//! Evidence comes from a pre-parsed CoNLL-U corpus: adjective usage patterns
//! for adjective connectors, subject-verb and subject-predicate-object
//! sentences for verb and noun connectors.

mod corpus;
mod patterns;
mod relations;

pub use corpus::{
    build_corpus_index, is_url_like, is_valid_sentence, CorpusIndex, ParsedSentence,
    RelationLabels, Token, ValidityParams,
};
pub use patterns::{count_adjective_patterns, validate_adjective, AdjectiveThresholds, PatternCounts};
pub use relations::{
    find_relation_sentences, mean_distance_to, rank_explanations, EvidenceSentence, Relation,
    MAX_DISTANCE,
};
