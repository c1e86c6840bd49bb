//! Offline artifact construction and the loaded search engine.
//!
//! An index directory holds:
//!
//! | file | content |
//! | ---- | ------- |
//! | `manifest.json` | format/version tags, embedding provenance, build summary |
//! | `threads.jsonl` | thread store (header line + one thread per line) |
//! | `thread_index.json` | persisted BM25 thread index |
//! | `idf.txt` | document count, then `word idf` per line |
//! | `vocab.txt` | distinct indexed words, one per line |
//! | `titles.txt` | original question titles, one per line, thread order |
//! | `contents.txt` | preprocessed thread text, one thread per line |
//! | `stopwords.txt` | the stopword list the corpus was preprocessed with |
//! | `word_vectors.txt` | ingested word vectors (absent in fallback mode) |
//! | `sentence_vectors.txt` | title vectors keyed by question id |

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::antonym::AntonymDictionary;
use crate::corpus::{self, Preprocessor, TagFilter, Thread, PREPROCESS_VERSION};
use crate::embeddings::{
    EmbeddingConfig, EmbeddingStore, IdfMap, ModelKind, Similarity, DEFAULT_DIM, DEFAULT_SEED,
};
use crate::error::{Error, Result};
use crate::index::{self, Bm25Params, InvertedIndex};

pub const MANIFEST_FORMAT: &str = "crowdrank-index";
pub const MANIFEST_VERSION: u32 = 1;

/// Everything a search needs, immutable once built.
#[derive(Debug, Clone)]
pub struct Engine {
    pub(crate) threads: Vec<Thread>,
    pub(crate) by_id: HashMap<u64, usize>,
    pub(crate) thread_index: InvertedIndex,
    pub(crate) idf: IdfMap,
    pub(crate) store: EmbeddingStore,
    pub(crate) antonyms: AntonymDictionary,
    pub(crate) preprocessor: Preprocessor,
    pub(crate) embedding: EmbeddingConfig,
}

/// Vectors to build an engine with.
#[derive(Debug, Clone)]
pub enum Vectors {
    /// Seeded hash embeddings of the given dimension.
    Fallback { dim: usize, seed: u64 },
    /// Pre-trained word vectors, with title vectors optionally already in
    /// the store (see [`EmbeddingStore::load_sentence_vectors`]).
    Loaded(EmbeddingStore),
}

impl Default for Vectors {
    fn default() -> Self {
        Vectors::Fallback {
            dim: DEFAULT_DIM,
            seed: DEFAULT_SEED,
        }
    }
}

impl Engine {
    /// Builds the thread index, IDF map and any missing title vectors.
    pub fn build(
        threads: Vec<Thread>,
        vectors: Vectors,
        antonyms: AntonymDictionary,
        preprocessor: Preprocessor,
        bm25: Bm25Params,
    ) -> Result<Self> {
        let thread_index = index::build_thread_index(&threads, bm25)?;
        let idf = idf_from_index(&thread_index);
        let (mut store, mut embedding) = match vectors {
            Vectors::Fallback { dim, seed } => (
                EmbeddingStore::fallback(dim, seed),
                EmbeddingConfig {
                    dim,
                    seed,
                    ..EmbeddingConfig::default()
                },
            ),
            Vectors::Loaded(store) => {
                let embedding = EmbeddingConfig {
                    word_model: ModelKind::SkipgramWords,
                    dim: store.dim(),
                    ..EmbeddingConfig::default()
                };
                (store, embedding)
            }
        };
        store.materialize(thread_index.postings.keys().map(String::as_str));

        let have_titles = threads
            .iter()
            .any(|t| store.sentence_vector(t.id()).is_some());
        if have_titles {
            embedding.sentence_model = ModelKind::Sent2vecTitles;
        } else {
            let sim = Similarity::new(&store, &idf);
            let title_vectors: Vec<(u64, Option<Vec<f64>>)> = threads
                .iter()
                .map(|t| {
                    (
                        t.id(),
                        sim.sentence_embedding(t.question.title_bag.iter().map(String::as_str)),
                    )
                })
                .collect();
            for (id, v) in title_vectors {
                if let Some(v) = v {
                    store.insert_sentence(id, v)?;
                }
            }
        }
        Ok(Self::assemble(
            threads,
            thread_index,
            idf,
            store,
            antonyms,
            preprocessor,
            embedding,
        ))
    }

    fn assemble(
        threads: Vec<Thread>,
        thread_index: InvertedIndex,
        idf: IdfMap,
        store: EmbeddingStore,
        antonyms: AntonymDictionary,
        preprocessor: Preprocessor,
        embedding: EmbeddingConfig,
    ) -> Self {
        let by_id = threads
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id(), i))
            .collect();
        Self {
            threads,
            by_id,
            thread_index,
            idf,
            store,
            antonyms,
            preprocessor,
            embedding,
        }
    }

    pub fn threads(&self) -> &[Thread] {
        &self.threads
    }

    pub fn thread(&self, id: u64) -> Option<&Thread> {
        self.by_id.get(&id).map(|&i| &self.threads[i])
    }

    pub fn thread_index(&self) -> &InvertedIndex {
        &self.thread_index
    }

    pub fn idf(&self) -> &IdfMap {
        &self.idf
    }

    pub fn embeddings(&self) -> &EmbeddingStore {
        &self.store
    }

    pub fn embedding_config(&self) -> &EmbeddingConfig {
        &self.embedding
    }

    pub fn antonyms(&self) -> &AntonymDictionary {
        &self.antonyms
    }

    pub fn preprocessor(&self) -> &Preprocessor {
        &self.preprocessor
    }

    pub fn with_antonyms(mut self, antonyms: AntonymDictionary) -> Self {
        self.antonyms = antonyms;
        self
    }

    /// Writes every artifact into `dir` (created if missing).
    pub fn save(&self, dir: &Path, summary: &BuildSummary) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = Manifest {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            preprocess_version: PREPROCESS_VERSION,
            embedding: self.embedding.clone(),
            summary: summary.clone(),
        };
        write_file(&dir.join("manifest.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest).map_err(std::io::Error::other)?;
            writeln!(w)
        })?;
        let threads_path = dir.join("threads.jsonl");
        let file = File::create(&threads_path).map_err(|e| Error::io(&threads_path, e))?;
        corpus::write_threads(&self.threads, file)?;
        index::save_thread_index(
            &dir.join("thread_index.json"),
            &self.thread_index,
            &self.embedding,
        )?;
        write_file(&dir.join("idf.txt"), |w| self.idf.write_to(w))?;
        write_file(&dir.join("vocab.txt"), |w| {
            for term in self.thread_index.postings.keys() {
                writeln!(w, "{term}")?;
            }
            Ok(())
        })?;
        write_file(&dir.join("titles.txt"), |w| {
            for t in &self.threads {
                writeln!(w, "{}", single_line(&t.question.original_title))?;
            }
            Ok(())
        })?;
        write_file(&dir.join("contents.txt"), |w| {
            for t in &self.threads {
                let words: Vec<&str> = t.full_text().map(String::as_str).collect();
                writeln!(w, "{}", words.join(" "))?;
            }
            Ok(())
        })?;
        write_file(&dir.join("stopwords.txt"), |w| {
            w.write_all(self.preprocessor.to_list().as_bytes())
        })?;
        if self.store.fallback_seed().is_none() {
            write_file(&dir.join("word_vectors.txt"), |w| {
                self.store.write_word_vectors(w)
            })?;
        }
        write_file(&dir.join("sentence_vectors.txt"), |w| {
            self.store.write_sentence_vectors(w)
        })?;
        Ok(())
    }

    /// Loads an index directory written by [`Engine::save`].
    pub fn open(dir: &Path, antonyms: AntonymDictionary) -> Result<Self> {
        let manifest_path = dir.join("manifest.json");
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::IncompatibleArtifact {
                path: manifest_path.clone(),
                message: e.to_string(),
            })?;
        if manifest.format != MANIFEST_FORMAT
            || manifest.version != MANIFEST_VERSION
            || manifest.preprocess_version != PREPROCESS_VERSION
        {
            return Err(Error::IncompatibleArtifact {
                path: manifest_path,
                message: format!(
                    "found {} v{} (preprocess v{})",
                    manifest.format, manifest.version, manifest.preprocess_version
                ),
            });
        }
        let threads = corpus::read_threads(&dir.join("threads.jsonl"))?;
        let (thread_index, embedding) = index::load_thread_index(&dir.join("thread_index.json"))?;
        if embedding != manifest.embedding {
            return Err(Error::IncompatibleArtifact {
                path: dir.join("thread_index.json"),
                message: "embedding configuration disagrees with manifest".into(),
            });
        }
        let preprocessor = Preprocessor::from_file(&dir.join("stopwords.txt"))?;
        let idf = idf_from_index(&thread_index);

        let mut store = match embedding.word_model {
            ModelKind::FallbackHash => EmbeddingStore::fallback(embedding.dim, embedding.seed),
            _ => EmbeddingStore::load_word_vectors(&dir.join("word_vectors.txt"))?,
        };
        if store.dim() != embedding.dim {
            return Err(Error::DimensionMismatch {
                expected: embedding.dim,
                actual: store.dim(),
            });
        }
        store.load_sentence_vectors(&dir.join("sentence_vectors.txt"))?;
        store.materialize(thread_index.postings.keys().map(String::as_str));
        Ok(Self::assemble(
            threads,
            thread_index,
            idf,
            store,
            antonyms,
            preprocessor,
            embedding,
        ))
    }
}

fn idf_from_index(index: &InvertedIndex) -> IdfMap {
    IdfMap::from_document_frequencies(
        index.stats.doc_count,
        index.stats.df.iter().map(|(w, d)| (w.as_str(), *d)),
    )
}

fn single_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    preprocess_version: u32,
    embedding: EmbeddingConfig,
    summary: BuildSummary,
}

/// Counts reported after an offline build.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub posts_loaded: usize,
    pub skipped_lines: usize,
    pub orphan_answers: usize,
    pub thread_count: usize,
    pub answer_count: usize,
    pub vocab_size: usize,
    pub seed: u64,
}

/// Inputs of an offline build.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub tag_filter: TagFilter,
    pub stopwords: Option<PathBuf>,
    pub word_vectors: Option<PathBuf>,
    pub sentence_vectors: Option<PathBuf>,
    pub dim: usize,
    pub seed: u64,
    pub bm25: Bm25Params,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            tag_filter: TagFilter::default(),
            stopwords: None,
            word_vectors: None,
            sentence_vectors: None,
            dim: DEFAULT_DIM,
            seed: DEFAULT_SEED,
            bm25: Bm25Params::default(),
        }
    }
}

/// Runs the offline pipeline: load the dump, rebuild threads, index them,
/// attach vectors, and write all artifacts to `out_dir`.
pub fn build_artifacts(
    corpus_path: &Path,
    out_dir: &Path,
    opts: &BuildOptions,
) -> Result<(Engine, BuildSummary)> {
    let preprocessor = match &opts.stopwords {
        Some(p) => Preprocessor::from_file(p)?,
        None => Preprocessor::default(),
    };
    let vectors = match &opts.word_vectors {
        Some(p) => {
            let mut store = EmbeddingStore::load_word_vectors(p)?;
            if let Some(s) = &opts.sentence_vectors {
                store.load_sentence_vectors(s)?;
            }
            Vectors::Loaded(store)
        }
        None => {
            if opts.sentence_vectors.is_some() {
                return Err(Error::Config(
                    "sentence vectors require word vectors".into(),
                ));
            }
            Vectors::Fallback {
                dim: opts.dim,
                seed: opts.seed,
            }
        }
    };
    let dump = corpus::load_dump(corpus_path, &opts.tag_filter)?;
    let set = corpus::build_threads(&dump.posts, &preprocessor);
    if set.threads.is_empty() {
        warn!("no threads survived filtering; the index is empty");
    }
    let engine = Engine::build(
        set.threads,
        vectors,
        AntonymDictionary::default(),
        preprocessor,
        opts.bm25,
    )?;
    let summary = BuildSummary {
        posts_loaded: dump.posts.len(),
        skipped_lines: dump.warning_count,
        orphan_answers: set.orphan_answers,
        thread_count: engine.threads.len(),
        answer_count: engine.threads.iter().map(|t| t.answers.len()).sum(),
        vocab_size: engine.thread_index.postings.len(),
        seed: opts.seed,
    };
    engine.save(out_dir, &summary)?;
    Ok((engine, summary))
}

/// Distinct words of every thread, sorted.
pub fn vocabulary(threads: &[Thread]) -> BTreeSet<&str> {
    threads
        .iter()
        .flat_map(|t| t.full_text().map(String::as_str))
        .collect()
}
