//! Word-embedding table with cosine-distance queries.
//!
//! The store reads the common text word-vector layout (an optional
//! `count dim` header followed by `token v1 .. vd` lines), optionally
//! gzip-compressed. Every other module measures semantic distance through
//! [`EmbeddingStore::semantic_distance`], defined as one minus the cosine of
//! the two vectors.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Lowercase tokens at load time and at query time.
    pub lowercase: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { lowercase: true }
    }
}

/// Immutable word → vector map. Vectors are stored contiguously with their
/// norms precomputed; zero vectors are rejected on construction.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    lowercase: bool,
    words: Vec<String>,
    components: Vec<f64>,
    norms: Vec<f64>,
    index: HashMap<String, usize>,
}

/// Reads a text (or gzip-compressed text) embedding file.
pub fn load_embeddings<R: Read>(source: R, options: LoadOptions) -> Result<EmbeddingStore> {
    let mut reader = BufReader::new(source);
    let gzipped = reader.fill_buf()?.starts_with(&GZIP_MAGIC);
    if gzipped {
        parse_lines(BufReader::new(GzDecoder::new(reader)), options)
    } else {
        parse_lines(reader, options)
    }
}

pub fn load_embeddings_file(path: impl AsRef<Path>, options: LoadOptions) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    load_embeddings(file, options)
}

fn parse_lines<R: BufRead>(reader: R, options: LoadOptions) -> Result<EmbeddingStore> {
    let mut builder = Builder::new(options.lowercase);
    let mut declared_dim = None;
    let mut seen_content = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::load(line_no, format!("unreadable line ({e})")))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_ascii_whitespace();
        let token = fields.next().expect("non-blank line has a field");
        let rest: Vec<&str> = fields.collect();

        if !seen_content {
            seen_content = true;
            if let ([count], Ok(_)) = (rest.as_slice(), token.parse::<usize>()) {
                if let Ok(dim) = count.parse::<usize>() {
                    if dim == 0 {
                        return Err(Error::load(line_no, "header declares dimension 0"));
                    }
                    declared_dim = Some(dim);
                    continue;
                }
            }
        }

        let mut values = Vec::with_capacity(rest.len());
        for raw in &rest {
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::load(line_no, format!("non-numeric component `{raw}`")))?;
            if !v.is_finite() {
                return Err(Error::load(line_no, format!("non-finite component `{raw}`")));
            }
            values.push(v);
        }
        let expected = builder.dim.or(declared_dim);
        if let Some(expected) = expected {
            if values.len() != expected {
                return Err(Error::load(line_no, "dimension mismatch"));
            }
        }
        if values.is_empty() {
            return Err(Error::load(line_no, "vector line has no components"));
        }
        builder
            .push(token, values)
            .map_err(|reason| Error::load(line_no, reason))?;
    }

    builder.finish()
}

struct Builder {
    lowercase: bool,
    dim: Option<usize>,
    words: Vec<String>,
    components: Vec<f64>,
    norms: Vec<f64>,
    index: HashMap<String, usize>,
}

impl Builder {
    fn new(lowercase: bool) -> Self {
        Self {
            lowercase,
            dim: None,
            words: Vec::new(),
            components: Vec::new(),
            norms: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn push(&mut self, token: &str, values: Vec<f64>) -> std::result::Result<(), String> {
        match self.dim {
            None => self.dim = Some(values.len()),
            Some(d) if d != values.len() => return Err("dimension mismatch".into()),
            Some(_) => {}
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(format!("zero-norm vector for `{token}`"));
        }
        let key = if self.lowercase {
            token.to_lowercase()
        } else {
            token.to_string()
        };
        if self.index.contains_key(&key) {
            return Ok(());
        }
        self.index.insert(key.clone(), self.words.len());
        self.words.push(key);
        self.components.extend(values);
        self.norms.push(norm);
        Ok(())
    }

    fn finish(self) -> Result<EmbeddingStore> {
        let Some(dim) = self.dim else {
            return Err(Error::EmptyInput("embedding source has no vectors".into()));
        };
        Ok(EmbeddingStore {
            dim,
            lowercase: self.lowercase,
            words: self.words,
            components: self.components,
            norms: self.norms,
            index: self.index,
        })
    }
}

impl EmbeddingStore {
    /// Builds a store from in-memory vectors, applying the same checks as the loader.
    pub fn from_vectors<I, S>(entries: I, options: LoadOptions) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: AsRef<str>,
    {
        let mut builder = Builder::new(options.lowercase);
        for (i, (token, values)) in entries.into_iter().enumerate() {
            builder
                .push(token.as_ref(), values)
                .map_err(|reason| Error::load(i + 1, reason))?;
        }
        builder.finish()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Tokens in load order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> + '_ {
        self.words.iter().map(String::as_str)
    }

    /// Applies the store's casing convention to a query token.
    pub fn normalize<'a>(&self, token: &'a str) -> Cow<'a, str> {
        if self.lowercase && token.chars().any(char::is_uppercase) {
            Cow::Owned(token.to_lowercase())
        } else {
            Cow::Borrowed(token)
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(self.normalize(token).as_ref())
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.index_of(token).ok().map(|i| self.row(i))
    }

    pub(crate) fn index_of(&self, token: &str) -> Result<usize> {
        self.index
            .get(self.normalize(token).as_ref())
            .copied()
            .ok_or_else(|| Error::UnknownToken(token.to_string()))
    }

    pub(crate) fn token_at(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    fn row(&self, idx: usize) -> &[f64] {
        &self.components[idx * self.dim..(idx + 1) * self.dim]
    }

    pub(crate) fn distance_by_index(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let dot: f64 = self
            .row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| x * y)
            .sum();
        let cosine = dot / (self.norms[a] * self.norms[b]);
        (1.0 - cosine).clamp(0.0, 2.0)
    }

    /// `1 - cos(a, b)`, in `[0, 2]`.
    pub fn semantic_distance(&self, a: &str, b: &str) -> Result<f64> {
        let ia = self.index_of(a)?;
        let ib = self.index_of(b)?;
        Ok(self.distance_by_index(ia, ib))
    }

    /// The `k` closest tokens to `word` (the query itself excluded), ascending by
    /// distance with ties broken lexicographically. When `vocab_filter` is given,
    /// only its members are candidates.
    pub fn nearest_neighbors(
        &self,
        word: &str,
        k: usize,
        vocab_filter: Option<&HashSet<String>>,
    ) -> Result<Vec<(String, f64)>> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let query = self.index_of(word)?;
        let mut scored: Vec<(f64, usize)> = match vocab_filter {
            Some(filter) => filter
                .iter()
                .filter_map(|t| self.index.get(self.normalize(t).as_ref()).copied())
                .collect::<HashSet<_>>()
                .into_iter()
                .filter(|&i| i != query)
                .map(|i| (self.distance_by_index(query, i), i))
                .collect(),
            None => (0..self.words.len())
                .filter(|&i| i != query)
                .map(|i| (self.distance_by_index(query, i), i))
                .collect(),
        };
        scored.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| self.words[a.1].cmp(&self.words[b.1]))
        });
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(d, i)| (self.words[i].clone(), d))
            .collect())
    }
}
