//! Inverted indexes with BM25 ranking.
//!
//! The thread index is built once offline and persisted; answer indexes are
//! built per query over the answers of the surviving threads.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ProcessedPost, Thread, PREPROCESS_VERSION};
use crate::embeddings::EmbeddingConfig;
use crate::error::{Error, Result};

pub const DEFAULT_K: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    /// Term-frequency saturation, `k >= 0`.
    pub k: f64,
    /// Length normalization, `0 <= b <= 1`.
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            b: DEFAULT_B,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub doc_count: usize,
    pub df: BTreeMap<String, usize>,
    pub avgdl: f64,
    pub total_len: u64,
    pub params: Bm25Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc: u64,
    pub tf: u32,
}

/// What an indexed document points back to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DocRef {
    Thread {
        answer_count: usize,
        question_score: i64,
        total_answer_score: i64,
    },
    Answer {
        parent_thread_id: u64,
    },
}

/// Something that can be added to an [`InvertedIndex`].
pub trait Indexable {
    fn doc_id(&self) -> u64;
    /// Indexed words, repeats included.
    fn terms(&self) -> Vec<&str>;
    fn payload(&self) -> DocRef;
}

/// A thread as indexed: title, question body, and the bodies and code of
/// its retained answers.
#[derive(Debug, Clone, Copy)]
pub struct ThreadDocument<'a>(pub &'a Thread);

impl Indexable for ThreadDocument<'_> {
    fn doc_id(&self) -> u64 {
        self.0.id()
    }

    fn terms(&self) -> Vec<&str> {
        self.0.full_text().map(String::as_str).collect()
    }

    fn payload(&self) -> DocRef {
        DocRef::Thread {
            answer_count: self.0.answer_count,
            question_score: self.0.question_score,
            total_answer_score: self.0.total_answer_score,
        }
    }
}

/// An answer as indexed: its body and code plus the parent's title and body.
#[derive(Debug, Clone, Copy)]
pub struct AnswerDocument<'a> {
    pub answer: &'a ProcessedPost,
    pub parent: &'a Thread,
}

impl Indexable for AnswerDocument<'_> {
    fn doc_id(&self) -> u64 {
        self.answer.id
    }

    fn terms(&self) -> Vec<&str> {
        self.answer
            .body_bag
            .iter()
            .chain(&self.answer.code_bag)
            .chain(&self.parent.question.title_bag)
            .chain(&self.parent.question.body_bag)
            .map(String::as_str)
            .collect()
    }

    fn payload(&self) -> DocRef {
        DocRef::Answer {
            parent_thread_id: self.parent.id(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    /// Per term, postings sorted by document id.
    pub postings: BTreeMap<String, Vec<Posting>>,
    pub doc_len: BTreeMap<u64, u32>,
    pub payload: BTreeMap<u64, DocRef>,
    pub stats: IndexStats,
}

impl InvertedIndex {
    pub fn new(params: Bm25Params) -> Self {
        Self {
            postings: BTreeMap::new(),
            doc_len: BTreeMap::new(),
            payload: BTreeMap::new(),
            stats: IndexStats {
                doc_count: 0,
                df: BTreeMap::new(),
                avgdl: 0.0,
                total_len: 0,
                params,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.stats.doc_count
    }

    pub fn is_empty(&self) -> bool {
        self.stats.doc_count == 0
    }

    pub fn add<D: Indexable + ?Sized>(&mut self, doc: &D) -> Result<()> {
        let id = doc.doc_id();
        if self.doc_len.contains_key(&id) {
            return Err(Error::DuplicateDocument(id));
        }
        let terms = doc.terms();
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in &terms {
            *tf.entry(t).or_default() += 1;
        }
        for (term, count) in tf {
            let list = self.postings.entry(term.to_owned()).or_default();
            let at = list.partition_point(|p| p.doc < id);
            list.insert(at, Posting { doc: id, tf: count });
            *self.stats.df.entry(term.to_owned()).or_default() += 1;
        }
        let len = terms.len() as u32;
        self.doc_len.insert(id, len);
        self.payload.insert(id, doc.payload());
        self.stats.doc_count += 1;
        self.stats.total_len += u64::from(len);
        self.stats.avgdl = self.stats.total_len as f64 / self.stats.doc_count as f64;
        Ok(())
    }

    pub fn df(&self, term: &str) -> usize {
        self.stats.df.get(term).copied().unwrap_or(0)
    }

    /// `log10(N / df)`, 0 for absent terms.
    pub fn idf(&self, term: &str) -> f64 {
        match self.df(term) {
            0 => 0.0,
            df => (self.stats.doc_count as f64 / df as f64).log10(),
        }
    }

    /// BM25 scores of every document sharing a term with `query`. Repeated
    /// query terms count once.
    pub fn scores(&self, query: &[String]) -> HashMap<u64, f64> {
        self.scores_with(query, self.stats.params)
    }

    /// [`InvertedIndex::scores`] with parameters other than the build-time ones.
    pub fn scores_with(&self, query: &[String], params: Bm25Params) -> HashMap<u64, f64> {
        let Bm25Params { k, b } = params;
        let avgdl = self.stats.avgdl;
        let mut acc: HashMap<u64, f64> = HashMap::new();
        let mut seen = HashSet::new();
        for term in query.iter().filter(|t| seen.insert(t.as_str())) {
            let Some(list) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(term);
            for p in list {
                let f = f64::from(p.tf);
                let len = f64::from(self.doc_len[&p.doc]);
                let norm = if avgdl > 0.0 { len / avgdl } else { 0.0 };
                *acc.entry(p.doc).or_default() +=
                    idf * (f * (k + 1.0)) / (f + k * (1.0 - b + b * norm));
            }
        }
        acc
    }

    /// Top `top_n` documents by BM25 score (descending, ties by ascending
    /// id). Only documents containing at least one query term are returned;
    /// a matching document whose terms all occur everywhere scores 0 but is
    /// kept.
    pub fn search(&self, query: &[String], top_n: usize) -> Vec<(u64, f64)> {
        self.search_with(query, top_n, self.stats.params)
    }

    pub fn search_with(
        &self,
        query: &[String],
        top_n: usize,
        params: Bm25Params,
    ) -> Vec<(u64, f64)> {
        let mut ranked: Vec<(u64, f64)> = self.scores_with(query, params).into_iter().collect();
        sort_ranked(&mut ranked);
        ranked.truncate(top_n);
        ranked
    }
}

/// Sorts by score descending, then id ascending.
pub fn sort_ranked(ranked: &mut [(u64, f64)]) {
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

pub fn build_index<D: Indexable>(docs: &[D], params: Bm25Params) -> Result<InvertedIndex> {
    let mut index = InvertedIndex::new(params);
    for d in docs {
        index.add(d)?;
    }
    Ok(index)
}

pub fn build_thread_index(threads: &[Thread], params: Bm25Params) -> Result<InvertedIndex> {
    let docs: Vec<ThreadDocument<'_>> = threads.iter().map(ThreadDocument).collect();
    build_index(&docs, params)
}

/// In-memory index over every retained answer of `threads`.
pub fn build_ephemeral_answer_index(
    threads: &[&Thread],
    params: Bm25Params,
) -> Result<InvertedIndex> {
    let docs: Vec<AnswerDocument<'_>> = threads
        .iter()
        .flat_map(|t| {
            t.answers.iter().map(move |a| AnswerDocument {
                answer: a,
                parent: t,
            })
        })
        .collect();
    build_index(&docs, params)
}

pub const THREAD_INDEX_FORMAT: &str = "crowdrank-thread-index";
pub const THREAD_INDEX_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct IndexFile<I> {
    format: String,
    version: u32,
    preprocess_version: u32,
    embedding: EmbeddingConfig,
    index: I,
}

pub fn save_thread_index(
    path: &Path,
    index: &InvertedIndex,
    embedding: &EmbeddingConfig,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let wrapped = IndexFile {
        format: THREAD_INDEX_FORMAT.into(),
        version: THREAD_INDEX_VERSION,
        preprocess_version: PREPROCESS_VERSION,
        embedding: embedding.clone(),
        index,
    };
    serde_json::to_writer(&mut out, &wrapped)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Loads a persisted thread index, rejecting files written by another
/// format or preprocessing version.
pub fn load_thread_index(path: &Path) -> Result<(InvertedIndex, EmbeddingConfig)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let raw: IndexFile<serde_json::Value> =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::IncompatibleArtifact {
            path: path.into(),
            message: e.to_string(),
        })?;
    if raw.format != THREAD_INDEX_FORMAT
        || raw.version != THREAD_INDEX_VERSION
        || raw.preprocess_version != PREPROCESS_VERSION
    {
        return Err(Error::IncompatibleArtifact {
            path: path.into(),
            message: format!(
                "found {} v{} (preprocess v{}), expected {THREAD_INDEX_FORMAT} v{THREAD_INDEX_VERSION} (preprocess v{PREPROCESS_VERSION})",
                raw.format, raw.version, raw.preprocess_version
            ),
        });
    }
    let index = serde_json::from_value(raw.index)?;
    Ok((index, raw.embedding))
}
