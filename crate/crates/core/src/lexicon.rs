//! Target and source selection.
//!
//! Targets are abstract concepts people actually talk about: poetic themes
//! plus their nearest embedding neighbours, kept only when frequent enough in
//! the conversation log. Sources are concrete, popular nouns: the most frequent
//! rated nouns, narrowed to the most concrete of them.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::pos::Pos;
use crate::tables::{ConcretenessTable, FrequencyTable, PosTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptEntry {
    pub word: String,
    pub pos: Pos,
    /// Fraction of conversation-log utterances containing the word.
    pub frequency: f64,
    /// Rating on the 1–5 concreteness scale.
    pub concreteness: Option<f64>,
}

/// Ordered by descending frequency.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TargetSet {
    pub entries: Vec<ConceptEntry>,
    pub diagnostics: Vec<String>,
}

/// Ordered by descending concreteness.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceSet {
    pub entries: Vec<ConceptEntry>,
    pub diagnostics: Vec<String>,
}

impl TargetSet {
    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|e| e.word.as_str())
    }
}

impl SourceSet {
    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.entries.iter().map(|e| e.word.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    /// Neighbours added per theme.
    pub expansion_k: usize,
    pub min_freq: f64,
}

impl Default for TargetParams {
    fn default() -> Self {
        Self {
            expansion_k: 5,
            min_freq: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceParams {
    pub top_by_freq: usize,
    pub top_by_conc: usize,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            top_by_freq: 10_000,
            top_by_conc: 3_000,
        }
    }
}

fn by_desc_then_word(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

pub fn select_targets(
    themes: &[String],
    store: &EmbeddingStore,
    freq: &FrequencyTable,
    params: TargetParams,
) -> Result<TargetSet> {
    if themes.is_empty() {
        return Err(Error::InvalidParameter("theme list is empty".into()));
    }

    // Deduplicate the whole pool before filtering.
    let mut pool = BTreeSet::new();
    for theme in themes {
        let theme = store.normalize(theme).into_owned();
        if params.expansion_k > 0 && store.contains(&theme) {
            for (neighbor, _) in store.nearest_neighbors(&theme, params.expansion_k, None)? {
                pool.insert(neighbor);
            }
        }
        pool.insert(theme);
    }

    let mut entries: Vec<ConceptEntry> = pool
        .into_iter()
        .filter_map(|word| {
            let frequency = *freq.get(&word)?;
            (frequency >= params.min_freq).then_some(ConceptEntry {
                word,
                pos: Pos::Other,
                frequency,
                concreteness: None,
            })
        })
        .collect();
    entries.sort_by(|a, b| by_desc_then_word((a.frequency, &a.word), (b.frequency, &b.word)));

    let mut diagnostics = Vec::new();
    if entries.is_empty() {
        let msg = format!(
            "no target candidate reached frequency {} ({} themes)",
            params.min_freq,
            themes.len()
        );
        tracing::warn!("{msg}");
        diagnostics.push(msg);
    }
    Ok(TargetSet {
        entries,
        diagnostics,
    })
}

pub fn select_sources(
    freq: &FrequencyTable,
    pos: &PosTable,
    concreteness: &ConcretenessTable,
    params: SourceParams,
) -> Result<SourceSet> {
    if params.top_by_conc > params.top_by_freq {
        return Err(Error::InvalidParameter(format!(
            "top_by_conc ({}) exceeds top_by_freq ({})",
            params.top_by_conc, params.top_by_freq
        )));
    }

    let mut rated_nouns: Vec<ConceptEntry> = freq
        .iter()
        .filter(|(word, _)| pos.get(*word) == Some(&Pos::Noun))
        .filter_map(|(word, &frequency)| {
            let rating = *concreteness.get(word)?;
            Some(ConceptEntry {
                word: word.clone(),
                pos: Pos::Noun,
                frequency,
                concreteness: Some(rating),
            })
        })
        .collect();
    rated_nouns.sort_by(|a, b| by_desc_then_word((a.frequency, &a.word), (b.frequency, &b.word)));
    rated_nouns.truncate(params.top_by_freq);

    let conc = |e: &ConceptEntry| e.concreteness.unwrap_or(f64::NEG_INFINITY);
    rated_nouns.sort_by(|a, b| by_desc_then_word((conc(a), &a.word), (conc(b), &b.word)));

    let mut diagnostics = Vec::new();
    if rated_nouns.len() < params.top_by_conc {
        let msg = format!(
            "only {} rated nouns available, fewer than the requested {}",
            rated_nouns.len(),
            params.top_by_conc
        );
        tracing::warn!("{msg}");
        diagnostics.push(msg);
    }
    rated_nouns.truncate(params.top_by_conc);

    Ok(SourceSet {
        entries: rated_nouns,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::LoadOptions;

    fn table<V: Copy>(pairs: &[(&str, V)]) -> std::collections::HashMap<String, V> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn love_store() -> EmbeddingStore {
        EmbeddingStore::from_vectors(
            [
                ("love", vec![1.0, 0.0, 0.0]),
                ("heart", vec![0.9, 0.1, 0.0]),
                ("romance", vec![0.8, 0.2, 0.1]),
                ("passion", vec![0.7, 0.3, 0.0]),
                ("kiss", vec![0.6, 0.3, 0.2]),
                ("date", vec![0.5, 0.5, 0.1]),
                ("rock", vec![0.0, 0.0, 1.0]),
            ],
            LoadOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn love_and_heart_survive_the_filter() {
        let store = love_store();
        let freq = table(&[
            ("love", 0.0038),
            ("heart", 0.0021),
            ("romance", 0.000001),
            ("passion", 0.000009),
            ("kiss", 0.0),
        ]);
        let set = select_targets(&["love".into()], &store, &freq, TargetParams::default()).unwrap();
        assert_eq!(set.words().collect::<Vec<_>>(), ["love", "heart"]);
        assert!(set.diagnostics.is_empty());
    }

    #[test]
    fn unknown_theme_yields_empty_set_with_warning() {
        let store = love_store();
        let freq = table(&[("love", 0.0038)]);
        let set = select_targets(&["x".into()], &store, &freq, TargetParams::default()).unwrap();
        assert!(set.entries.is_empty());
        assert_eq!(set.diagnostics.len(), 1);
    }

    #[test]
    fn empty_theme_list_is_rejected() {
        let store = love_store();
        assert!(select_targets(&[], &store, &table(&[]), TargetParams::default()).is_err());
    }

    #[test]
    fn theme_absent_from_store_is_kept_unexpanded() {
        let store = love_store();
        let freq = table(&[("nostalgia", 0.001), ("heart", 0.002)]);
        let set =
            select_targets(&["nostalgia".into()], &store, &freq, TargetParams::default()).unwrap();
        assert_eq!(set.words().collect::<Vec<_>>(), ["nostalgia"]);
    }

    #[test]
    fn food_is_a_source() {
        let freq = table(&[("food", 0.0092), ("signal", 0.0028), ("idea", 0.01)]);
        let pos = table(&[("food", Pos::Noun), ("signal", Pos::Noun), ("idea", Pos::Noun)]);
        let conc = table(&[("food", 4.80), ("signal", 3.86)]);
        let set = select_sources(&freq, &pos, &conc, SourceParams::default()).unwrap();
        assert_eq!(set.words().collect::<Vec<_>>(), ["food", "signal"]);
        // idea has no rating, and fewer than 3000 rated nouns exist
        assert_eq!(set.diagnostics.len(), 1);
    }

    #[test]
    fn non_nouns_and_unrated_words_are_excluded() {
        let freq = table(&[("sweet", 0.01), ("stone", 0.001), ("thing", 0.5)]);
        let pos = table(&[("sweet", Pos::Adjective), ("stone", Pos::Noun), ("thing", Pos::Noun)]);
        let conc = table(&[("sweet", 3.0), ("stone", 4.9)]);
        let params = SourceParams {
            top_by_freq: 5,
            top_by_conc: 1,
        };
        let set = select_sources(&freq, &pos, &conc, params).unwrap();
        assert_eq!(set.words().collect::<Vec<_>>(), ["stone"]);
    }

    #[test]
    fn conc_limit_above_freq_limit_is_rejected() {
        let params = SourceParams {
            top_by_freq: 1,
            top_by_conc: 2,
        };
        assert!(select_sources(&table(&[]), &table(&[]), &table(&[]), params).is_err());
    }
}
