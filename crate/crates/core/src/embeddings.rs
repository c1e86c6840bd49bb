//! Word and sentence vectors, IDF weights, and the embedding similarities:
//! cosine, sentence similarity, and the IDF-weighted asymmetric relevance
//! with its harmonic-mean symmetrization.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Display;
use std::fs::File;
use std::hash::Hash;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 100;
pub const DEFAULT_SEED: u64 = 42;

/// Where a set of vectors came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Word vectors ingested from a skip-gram model dump.
    SkipgramWords,
    /// Title vectors ingested from a sentence model dump.
    Sent2vecTitles,
    /// Seeded hash embedder; no trained model.
    FallbackHash,
    /// IDF-weighted mean of word vectors.
    IdfWeightedMean,
}

/// Provenance of the vectors an index was built with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub word_model: ModelKind,
    pub sentence_model: ModelKind,
    pub dim: usize,
    pub ngrams: u32,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            word_model: ModelKind::FallbackHash,
            sentence_model: ModelKind::IdfWeightedMean,
            dim: DEFAULT_DIM,
            ngrams: 3,
            seed: DEFAULT_SEED,
        }
    }
}

/// Deterministic unit vector for `word`: components drawn uniformly from
/// `[-1, 1)` by a ChaCha8 stream seeded from `seed` and an FNV-1a hash of the
/// word, then L2-normalized.
pub fn fallback_embed(word: &str, seed: u64, dim: usize) -> Vec<f64> {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in word.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Cosine of the angle between two vectors; 0 when either has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Vectors parsed from the text format: a `count dim` header, then one
/// `key v1 ... v_dim` line per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFile<K: Ord> {
    pub dim: usize,
    pub vectors: BTreeMap<K, Vec<f64>>,
    pub warning_count: usize,
}

impl<K> VectorFile<K>
where
    K: Ord + FromStr + Display,
{
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), path)
    }

    pub fn read<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| Error::io(path, e))?
            .ok_or_else(|| Error::format(path, 1, "missing `count dim` header"))?;
        let mut fields = header.split_whitespace();
        let (count, dim) = match (
            fields.next().and_then(|s| s.parse::<usize>().ok()),
            fields.next().and_then(|s| s.parse::<usize>().ok()),
            fields.next(),
        ) {
            (Some(c), Some(d), None) if d > 0 => (c, d),
            _ => return Err(Error::format(path, 1, "malformed `count dim` header")),
        };

        let mut vectors = BTreeMap::new();
        let mut warning_count = 0;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let key_text = fields.next().unwrap_or_default();
            let key: K = key_text
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("invalid key `{key_text}`")))?;
            let values = fields
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::format(path, lineno, e.to_string()))?;
            if values.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: values.len(),
                });
            }
            if vectors.insert(key, values).is_some() {
                warn!(
                    "{}:{lineno}: duplicate key `{key_text}`, keeping the last",
                    path.display()
                );
                warning_count += 1;
            }
        }
        if vectors.len() != count {
            warn!(
                "{}: header announces {count} vectors, found {}",
                path.display(),
                vectors.len()
            );
        }
        Ok(Self {
            dim,
            vectors,
            warning_count,
        })
    }
}

/// Writes vectors in the text format. Values use the shortest decimal that
/// round-trips to the same `f64`.
pub fn write_vectors<'a, K, W, I>(out: W, dim: usize, vectors: I) -> std::io::Result<()>
where
    K: Display + 'a,
    W: Write,
    I: IntoIterator<Item = (&'a K, &'a Vec<f64>)>,
    I::IntoIter: ExactSizeIterator,
{
    let vectors = vectors.into_iter();
    let mut out = BufWriter::new(out);
    writeln!(out, "{} {dim}", vectors.len())?;
    for (key, v) in vectors {
        write!(out, "{key}")?;
        for x in v {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    out.flush()
}

/// Word vectors and question-title vectors.
///
/// With a fallback seed set, words missing from the table are embedded on
/// demand by [`fallback_embed`]; otherwise they are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    words: HashMap<String, Vec<f64>>,
    sentences: HashMap<u64, Vec<f64>>,
    fallback_seed: Option<u64>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            words: HashMap::new(),
            sentences: HashMap::new(),
            fallback_seed: None,
        }
    }

    /// A store that embeds every word with [`fallback_embed`].
    pub fn fallback(dim: usize, seed: u64) -> Self {
        Self {
            fallback_seed: Some(seed),
            ..Self::new(dim)
        }
    }

    /// Loads word vectors from the text format; the header fixes the dimension.
    pub fn load_word_vectors(path: &Path) -> Result<Self> {
        let file = VectorFile::<String>::load(path)?;
        let mut store = Self::new(file.dim);
        store.words = file.vectors.into_iter().collect();
        Ok(store)
    }

    pub fn load_sentence_vectors(&mut self, path: &Path) -> Result<()> {
        let file = VectorFile::<u64>::load(path)?;
        if file.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: file.dim,
            });
        }
        self.sentences.extend(file.vectors);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fallback_seed(&self) -> Option<u64> {
        self.fallback_seed
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn insert_word(&mut self, word: impl Into<String>, v: Vec<f64>) -> Result<()> {
        self.check_dim(&v)?;
        self.words.insert(word.into(), v);
        Ok(())
    }

    pub fn insert_sentence(&mut self, question_id: u64, v: Vec<f64>) -> Result<()> {
        self.check_dim(&v)?;
        self.sentences.insert(question_id, v);
        Ok(())
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok(())
    }

    pub fn word_vector(&self, word: &str) -> Option<Cow<'_, [f64]>> {
        match self.words.get(word) {
            Some(v) => Some(Cow::Borrowed(v)),
            None => self
                .fallback_seed
                .map(|seed| Cow::Owned(fallback_embed(word, seed, self.dim))),
        }
    }

    pub fn sentence_vector(&self, question_id: u64) -> Option<&[f64]> {
        self.sentences.get(&question_id).map(Vec::as_slice)
    }

    /// Caches fallback vectors for `words` so later lookups are table hits.
    /// No-op without a fallback seed.
    pub fn materialize<'a, I: IntoIterator<Item = &'a str>>(&mut self, words: I) {
        let Some(seed) = self.fallback_seed else {
            return;
        };
        for w in words {
            if !self.words.contains_key(w) {
                self.words
                    .insert(w.to_owned(), fallback_embed(w, seed, self.dim));
            }
        }
    }

    pub fn write_word_vectors<W: Write>(&self, out: W) -> std::io::Result<()> {
        let sorted: BTreeMap<&String, &Vec<f64>> = self.words.iter().collect();
        write_vectors(out, self.dim, sorted)
    }

    pub fn write_sentence_vectors<W: Write>(&self, out: W) -> std::io::Result<()> {
        let sorted: BTreeMap<&u64, &Vec<f64>> = self.sentences.iter().collect();
        write_vectors(out, self.dim, sorted)
    }
}

/// Inverse document frequencies, `log10(N / df)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfMap {
    idf: HashMap<String, f64>,
    doc_count: usize,
}

impl IdfMap {
    /// Counts document frequencies over `docs` (each a bag of words).
    pub fn from_documents<'a, D, W>(docs: D) -> Self
    where
        D: IntoIterator<Item = W>,
        W: IntoIterator<Item = &'a String>,
    {
        let mut df: HashMap<&'a str, usize> = HashMap::new();
        let mut doc_count = 0;
        for doc in docs {
            doc_count += 1;
            let distinct: HashSet<&str> = doc.into_iter().map(String::as_str).collect();
            for w in distinct {
                *df.entry(w).or_default() += 1;
            }
        }
        Self::from_document_frequencies(doc_count, df)
    }

    pub fn from_document_frequencies<K, I>(doc_count: usize, df: I) -> Self
    where
        K: Into<String> + Eq + Hash,
        I: IntoIterator<Item = (K, usize)>,
    {
        let n = doc_count as f64;
        let idf = df
            .into_iter()
            .filter(|(_, d)| *d > 0)
            .map(|(w, d)| (w.into(), (n / d as f64).log10()))
            .collect();
        Self { idf, doc_count }
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.idf.get(word).copied()
    }

    /// Stored IDF, or `log10(N)` (as if `df = 1`) for unseen words.
    pub fn idf(&self, word: &str) -> f64 {
        self.get(word).unwrap_or_else(|| self.default_idf())
    }

    pub fn default_idf(&self) -> f64 {
        if self.doc_count == 0 {
            0.0
        } else {
            (self.doc_count as f64).log10()
        }
    }

    /// `word idf` lines sorted by word, after a `N` header line.
    pub fn write_to<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{}", self.doc_count)?;
        let sorted: BTreeMap<&String, &f64> = self.idf.iter().collect();
        for (w, v) in sorted {
            writeln!(out, "{w} {v}")?;
        }
        out.flush()
    }
}

/// Embedding-based similarities bound to one store and IDF map.
#[derive(Debug, Clone, Copy)]
pub struct Similarity<'a> {
    pub store: &'a EmbeddingStore,
    pub idf: &'a IdfMap,
    /// Clamp negative word cosines to 0 inside the asymmetric relevance.
    pub clamp_negative: bool,
}

/// Unit-normalized vectors for the distinct embeddable words of a bag.
struct Resolved<'w> {
    words: Vec<&'w str>,
    units: Vec<Option<Vec<f64>>>,
}

impl<'a> Similarity<'a> {
    pub fn new(store: &'a EmbeddingStore, idf: &'a IdfMap) -> Self {
        Self {
            store,
            idf,
            clamp_negative: true,
        }
    }

    fn resolve<'w, I: IntoIterator<Item = &'w str>>(&self, bag: I) -> Resolved<'w> {
        let mut seen = HashSet::new();
        let words: Vec<&str> = bag.into_iter().filter(|w| seen.insert(*w)).collect();
        let units = words
            .iter()
            .map(|w| {
                self.store.word_vector(w).and_then(|v| {
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    (norm > 0.0).then(|| v.iter().map(|x| x / norm).collect())
                })
            })
            .collect();
        Resolved { words, units }
    }

    fn directed(&self, from: &Resolved<'_>, to: &Resolved<'_>) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (w, v) in from.words.iter().zip(&from.units) {
            let idf = self.idf.idf(w);
            den += idf;
            let Some(v) = v else { continue };
            if to.words.contains(w) {
                num += idf;
                continue;
            }
            let best = to
                .units
                .iter()
                .flatten()
                .map(|u| {
                    v.iter()
                        .zip(u)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        .clamp(-1.0, 1.0)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            if best.is_finite() {
                let sim = if self.clamp_negative {
                    best.max(0.0)
                } else {
                    best
                };
                num += sim * idf;
            }
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    /// IDF-weighted mean, over the distinct words of `from`, of each word's
    /// best cosine against the words of `to`.
    pub fn asym<'w, Q, T>(&self, from: Q, to: T) -> f64
    where
        Q: IntoIterator<Item = &'w str>,
        T: IntoIterator<Item = &'w str>,
    {
        self.directed(&self.resolve(from), &self.resolve(to))
    }

    /// Harmonic mean of both asymmetric directions; 0 when either is 0.
    pub fn asym_score<'w, Q, T>(&self, q: Q, t: T) -> f64
    where
        Q: IntoIterator<Item = &'w str>,
        T: IntoIterator<Item = &'w str>,
    {
        let q = self.resolve(q);
        let t = self.resolve(t);
        harmonic_mean(self.directed(&q, &t), self.directed(&t, &q))
    }

    /// IDF-weighted mean of the word vectors of `bag`. `None` when no word
    /// carries a vector with positive weight.
    pub fn sentence_embedding<'w, I: IntoIterator<Item = &'w str>>(
        &self,
        bag: I,
    ) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; self.store.dim()];
        let mut total = 0.0;
        for w in bag {
            let Some(v) = self.store.word_vector(w) else {
                continue;
            };
            let weight = self.idf.idf(w);
            if weight <= 0.0 {
                continue;
            }
            total += weight;
            for (a, x) in acc.iter_mut().zip(v.iter()) {
                *a += weight * x;
            }
        }
        (total > 0.0).then(|| acc.into_iter().map(|a| a / total).collect())
    }

    /// Cosine between a query sentence vector and a stored title vector;
    /// 0 (with a warning) when the title vector is missing.
    pub fn sentence_similarity(&self, query_vector: Option<&[f64]>, question_id: u64) -> f64 {
        let Some(title) = self.store.sentence_vector(question_id) else {
            warn!("no title vector for question {question_id}");
            return 0.0;
        };
        query_vector.map_or(0.0, |q| cosine(q, title).unwrap_or(0.0))
    }
}

pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 || a + b == 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}
