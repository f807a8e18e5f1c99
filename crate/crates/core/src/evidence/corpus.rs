//! CoNLL-U ingestion and the lemma index over parsed sentences.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    /// Lowercased; falls back to the lowercased form when the lemma column is `_`.
    pub lemma: String,
    pub upos: String,
    /// 1-based head position, 0 for the root.
    pub head: usize,
    pub deprel: String,
    pub space_after: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub id: usize,
    pub surface: String,
    pub tokens: Vec<Token>,
}

impl ParsedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn root_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.head == 0).count()
    }

    /// 0-based index of the head of token `i`, `None` for the root.
    pub fn head_of(&self, i: usize) -> Option<usize> {
        match self.tokens[i].head {
            0 => None,
            h => Some(h - 1),
        }
    }

    /// 0-based indices of the direct dependents of token `i`.
    pub fn children(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.tokens
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.head == i + 1)
            .map(|(j, _)| j)
    }

    /// Token `i` together with all of its transitive dependents, sorted.
    pub fn subtree(&self, i: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::from([i]);
        let mut stack = vec![i];
        while let Some(n) = stack.pop() {
            for c in self.children(n) {
                if out.insert(c) {
                    stack.push(c);
                }
            }
        }
        out
    }

    pub fn has_lemma(&self, lemma: &str) -> bool {
        self.tokens.iter().any(|t| t.lemma == lemma)
    }

    /// Joins tokens honouring `SpaceAfter=No`.
    pub fn render(&self, indices: impl IntoIterator<Item = usize>) -> String {
        let mut out = String::new();
        let mut pending_space = false;
        for i in indices {
            let t = &self.tokens[i];
            if pending_space {
                out.push(' ');
            }
            out.push_str(&t.form);
            pending_space = t.space_after;
        }
        out
    }
}

/// Dependency labels used by the pattern matchers. A label matches when it
/// equals an entry or its base (the part before `:`) does, so `nsubj`
/// also covers `nsubj:pass`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationLabels {
    pub subject: Vec<String>,
    pub adjectival_modifier: Vec<String>,
    pub copula: Vec<String>,
    pub object: Vec<String>,
}

impl Default for RelationLabels {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        Self {
            subject: v(&["nsubj"]),
            adjectival_modifier: v(&["amod"]),
            copula: v(&["cop"]),
            object: v(&["obj", "dobj"]),
        }
    }
}

pub(crate) fn label_matches(label: &str, accepted: &[String]) -> bool {
    let base = label.split(':').next().unwrap_or(label);
    accepted.iter().any(|a| a == label || a == base)
}

#[derive(Debug, Clone, Default)]
pub struct CorpusIndex {
    sentences: Vec<ParsedSentence>,
    token_index: BTreeMap<String, BTreeSet<usize>>,
    labels: RelationLabels,
    skipped_blocks: usize,
    diagnostics: Vec<String>,
}

impl CorpusIndex {
    /// An index with no sentences; every query on it returns nothing.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_sentences(sentences: Vec<ParsedSentence>) -> Self {
        let mut token_index: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        let sentences: Vec<_> = sentences
            .into_iter()
            .enumerate()
            .map(|(id, mut s)| {
                s.id = id;
                for t in &s.tokens {
                    token_index.entry(t.lemma.clone()).or_default().insert(id);
                }
                s
            })
            .collect();
        Self {
            sentences,
            token_index,
            ..Self::default()
        }
    }

    pub fn with_labels(mut self, labels: RelationLabels) -> Self {
        self.labels = labels;
        self
    }

    pub fn labels(&self) -> &RelationLabels {
        &self.labels
    }

    pub fn sentences(&self) -> &[ParsedSentence] {
        &self.sentences
    }

    pub fn sentence(&self, id: usize) -> Option<&ParsedSentence> {
        self.sentences.get(id)
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn skipped_blocks(&self) -> usize {
        self.skipped_blocks
    }

    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    pub fn lemma_index(&self) -> &BTreeMap<String, BTreeSet<usize>> {
        &self.token_index
    }

    /// Ids of sentences containing every lemma, ascending.
    pub fn sentences_with_all(&self, lemmas: &[&str]) -> Vec<usize> {
        let mut sets = Vec::with_capacity(lemmas.len());
        for lemma in lemmas {
            match self.token_index.get(&lemma.to_lowercase()) {
                Some(set) => sets.push(set),
                None => return Vec::new(),
            }
        }
        sets.sort_by_key(|s| s.len());
        let Some((first, rest)) = sets.split_first() else {
            return (0..self.sentences.len()).collect();
        };
        first
            .iter()
            .copied()
            .filter(|id| rest.iter().all(|s| s.contains(id)))
            .collect()
    }
}

/// Parses a CoNLL-U stream. Malformed blocks are skipped and counted; a
/// stream with no valid sentence is an error.
pub fn build_corpus_index<R: Read>(source: R) -> Result<CorpusIndex> {
    let reader = BufReader::new(source);
    let mut sentences = Vec::new();
    let mut skipped = 0;
    let mut diagnostics = Vec::new();
    let mut block: Vec<(usize, String)> = Vec::new();

    let flush = |block: &mut Vec<(usize, String)>,
                     sentences: &mut Vec<ParsedSentence>,
                     skipped: &mut usize,
                     diagnostics: &mut Vec<String>| {
        if block.is_empty() {
            return;
        }
        let start = block[0].0;
        match parse_block(block) {
            Ok(Some(s)) => sentences.push(s),
            Ok(None) => {}
            Err(reason) => {
                *skipped += 1;
                let msg = format!("skipped block starting at line {start}: {reason}");
                tracing::warn!("{msg}");
                diagnostics.push(msg);
            }
        }
        block.clear();
    };

    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::load(i + 1, format!("unreadable line ({e})")))?;
        if line.trim().is_empty() {
            flush(&mut block, &mut sentences, &mut skipped, &mut diagnostics);
        } else {
            block.push((i + 1, line));
        }
    }
    flush(&mut block, &mut sentences, &mut skipped, &mut diagnostics);

    if sentences.is_empty() {
        return Err(Error::EmptyInput(format!(
            "corpus has no valid sentences ({skipped} blocks skipped)"
        )));
    }
    let mut index = CorpusIndex::from_sentences(sentences);
    index.skipped_blocks = skipped;
    index.diagnostics = diagnostics;
    Ok(index)
}

fn parse_block(lines: &[(usize, String)]) -> std::result::Result<Option<ParsedSentence>, String> {
    let mut text = None;
    let mut tokens = Vec::new();
    for (line_no, line) in lines {
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(t) = comment.trim_start().strip_prefix("text =") {
                text = Some(t.trim().to_string());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(format!("line {line_no} has {} columns, expected 10", cols.len()));
        }
        // multiword ranges and empty nodes
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| format!("line {line_no}: bad token id `{}`", cols[0]))?;
        if id != tokens.len() + 1 {
            return Err(format!("line {line_no}: token id {id} out of sequence"));
        }
        let head: usize = cols[6]
            .parse()
            .map_err(|_| format!("line {line_no}: bad head `{}`", cols[6]))?;
        let form = cols[1].to_string();
        let lemma = match cols[2] {
            "_" if form != "_" => form.to_lowercase(),
            l => l.to_lowercase(),
        };
        tokens.push(Token {
            lemma,
            form,
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
            space_after: !cols[9].split('|').any(|m| m == "SpaceAfter=No"),
        });
    }
    if tokens.is_empty() {
        return if text.is_some() {
            Err("sentence has no tokens".into())
        } else {
            Ok(None)
        };
    }
    if let Some(t) = tokens.iter().find(|t| t.head > tokens.len()) {
        return Err(format!("head {} of `{}` is out of range", t.head, t.form));
    }
    let roots = tokens.iter().filter(|t| t.head == 0).count();
    if roots != 1 {
        return Err(format!("{roots} roots"));
    }
    let mut sentence = ParsedSentence {
        id: 0,
        surface: String::new(),
        tokens,
    };
    sentence.surface = text.unwrap_or_else(|| sentence.render(0..sentence.len()));
    Ok(Some(sentence))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityParams {
    pub min_tokens: usize,
    pub max_tokens: usize,
}

impl Default for ValidityParams {
    fn default() -> Self {
        Self {
            min_tokens: 5,
            max_tokens: 40,
        }
    }
}

pub fn is_url_like(form: &str) -> bool {
    let f = form.to_lowercase();
    const TLDS: [&str; 6] = [".com", ".net", ".org", ".cn", ".io", ".html"];
    f.contains("://")
        || f.starts_with("www.")
        || TLDS.iter().any(|tld| f.ends_with(tld) && f.len() > tld.len())
        || (f.contains('@') && f.contains('.'))
}

/// Length bounds, required lemmas, single root and no URL-like tokens.
pub fn is_valid_sentence(
    s: &ParsedSentence,
    required_lemmas: &HashSet<String>,
    params: ValidityParams,
) -> bool {
    (params.min_tokens..=params.max_tokens).contains(&s.len())
        && required_lemmas
            .iter()
            .all(|l| s.has_lemma(&l.to_lowercase()))
        && s.root_count() == 1
        && !s.tokens.iter().any(|t| is_url_like(&t.form))
}
