//! Ingesting a JSONL Q&A dump into preprocessed threads.
//!
//! A dump holds one [`RawPost`] per line. Questions are kept when their tags
//! pass a [`TagFilter`]; answers are kept when their parent was kept. Posts
//! are then preprocessed and grouped into [`Thread`]s containing only
//! positively-scored questions and positively-scored answers with code.

mod markup;
mod text;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use markup::separate_code;
pub use text::{Preprocessor, TextMode, PREPROCESS_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostKind {
    Question,
    Answer,
}

/// One line of the corpus dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: u64,
    pub post_kind: PostKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub body_html: String,
    pub score: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

impl RawPost {
    fn validate(&self) -> std::result::Result<(), &'static str> {
        if self.id == 0 {
            return Err("id must be positive");
        }
        match self.post_kind {
            PostKind::Answer if self.parent_id.is_none() => Err("answer without parent_id"),
            PostKind::Question if self.title.is_none() => Err("question without title"),
            PostKind::Question if self.tags.is_empty() => Err("question without tags"),
            _ => Ok(()),
        }
    }
}

/// Selects questions by tag: at least one tag contains `include` and no tag
/// contains any of `exclude`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagFilter {
    pub include: String,
    pub exclude: Vec<String>,
}

impl Default for TagFilter {
    fn default() -> Self {
        Self {
            include: "java".into(),
            exclude: vec!["javascript".into()],
        }
    }
}

impl TagFilter {
    /// A filter that accepts every question.
    pub fn any() -> Self {
        Self {
            include: String::new(),
            exclude: Vec::new(),
        }
    }

    pub fn accepts(&self, tags: &[String]) -> bool {
        tags.iter().any(|t| t.contains(&self.include))
            && !tags.iter().any(|t| {
                self.exclude
                    .iter()
                    .any(|x| !x.is_empty() && t.contains(x.as_str()))
            })
    }
}

/// Output of [`load_dump`].
#[derive(Debug, Clone, Default)]
pub struct Dump {
    pub posts: Vec<RawPost>,
    /// Lines skipped because they were malformed, incomplete or duplicated.
    pub warning_count: usize,
}

/// Reads a JSONL dump, keeping questions accepted by `filter` and the answers
/// whose parent was kept. File order is preserved.
pub fn load_dump(path: &Path, filter: &TagFilter) -> Result<Dump> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dump(BufReader::new(file), filter).map_err(|e| Error::io(path, e))
}

/// [`load_dump`] over any buffered reader.
pub fn read_dump<R: BufRead>(reader: R, filter: &TagFilter) -> std::io::Result<Dump> {
    let mut all = Vec::new();
    let mut warning_count = 0;
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let post: RawPost = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(e) => {
                warn!("line {}: skipping malformed post: {e}", lineno + 1);
                warning_count += 1;
                continue;
            }
        };
        if let Err(msg) = post.validate() {
            warn!("line {}: skipping post {}: {msg}", lineno + 1, post.id);
            warning_count += 1;
            continue;
        }
        if !seen.insert(post.id) {
            warn!(
                "line {}: skipping duplicate post id {}",
                lineno + 1,
                post.id
            );
            warning_count += 1;
            continue;
        }
        all.push(post);
    }

    let kept_questions: HashSet<u64> = all
        .iter()
        .filter(|p| p.post_kind == PostKind::Question && filter.accepts(&p.tags))
        .map(|p| p.id)
        .collect();
    let posts = all
        .into_iter()
        .filter(|p| match p.post_kind {
            PostKind::Question => kept_questions.contains(&p.id),
            PostKind::Answer => p.parent_id.is_some_and(|id| kept_questions.contains(&id)),
        })
        .collect();
    Ok(Dump {
        posts,
        warning_count,
    })
}

/// A post after code separation and preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedPost {
    pub id: u64,
    pub score: i64,
    pub title_bag: Vec<String>,
    pub body_bag: Vec<String>,
    pub code_bag: Vec<String>,
    /// Empty for answers.
    pub original_title: String,
    pub original_body: String,
}

impl ProcessedPost {
    pub fn from_raw(post: &RawPost, pre: &Preprocessor) -> Self {
        let (prose, code) = separate_code(&post.body_html);
        let title = post.title.clone().unwrap_or_default();
        Self {
            id: post.id,
            score: post.score,
            title_bag: pre.preprocess(&title, TextMode::Corpus),
            body_bag: pre.preprocess(&prose, TextMode::Corpus),
            code_bag: pre.preprocess(&code, TextMode::Corpus),
            original_title: title,
            original_body: post.body_html.clone(),
        }
    }

    pub fn has_code(&self) -> bool {
        !self.code_bag.is_empty()
    }

    /// Raw code text of the post, as split out of the original body.
    pub fn code_text(&self) -> String {
        separate_code(&self.original_body).1
    }
}

/// A question with its retained answers and social counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thread {
    pub question: ProcessedPost,
    /// Sorted by answer id.
    pub answers: Vec<ProcessedPost>,
    pub answer_count: usize,
    pub question_score: i64,
    pub total_answer_score: i64,
}

impl Thread {
    pub fn id(&self) -> u64 {
        self.question.id
    }

    /// Assembles a thread from an already-processed question and its answers,
    /// applying the retention rules. Returns `None` if nothing survives.
    pub fn assemble(question: ProcessedPost, answers: Vec<ProcessedPost>) -> Option<Self> {
        if question.score <= 0 {
            return None;
        }
        let mut answers: Vec<ProcessedPost> = answers
            .into_iter()
            .filter(|a| a.score > 0 && a.has_code())
            .collect();
        if answers.is_empty() {
            return None;
        }
        answers.sort_by_key(|a| a.id);
        Some(Self {
            answer_count: answers.len(),
            question_score: question.score,
            total_answer_score: answers.iter().map(|a| a.score).sum(),
            question,
            answers,
        })
    }

    /// Question body plus every retained answer's body.
    pub fn body_and_answer_bodies(&self) -> impl Iterator<Item = &String> {
        self.question
            .body_bag
            .iter()
            .chain(self.answers.iter().flat_map(|a| a.body_bag.iter()))
    }

    /// Title, question body, answers' bodies and answers' code: the text a
    /// thread is indexed and TF-scored on.
    pub fn full_text(&self) -> impl Iterator<Item = &String> {
        self.question
            .title_bag
            .iter()
            .chain(self.body_and_answer_bodies())
            .chain(self.answers.iter().flat_map(|a| a.code_bag.iter()))
    }
}

/// Output of [`build_threads`].
#[derive(Debug, Clone, Default)]
pub struct ThreadSet {
    /// In first-appearance order of their questions.
    pub threads: Vec<Thread>,
    pub orphan_answers: usize,
}

/// Preprocesses posts and groups them into threads.
///
/// Per-post preprocessing runs in parallel; the output order depends only
/// on the input order.
pub fn build_threads(posts: &[RawPost], pre: &Preprocessor) -> ThreadSet {
    let processed: Vec<ProcessedPost> = posts
        .par_iter()
        .map(|p| ProcessedPost::from_raw(p, pre))
        .collect();

    let mut order = Vec::new();
    let mut questions: HashMap<u64, ProcessedPost> = HashMap::new();
    let mut answers: BTreeMap<u64, Vec<ProcessedPost>> = BTreeMap::new();
    for (raw, post) in posts.iter().zip(processed) {
        match raw.post_kind {
            PostKind::Question => {
                order.push(raw.id);
                questions.insert(raw.id, post);
            }
            PostKind::Answer => {
                let parent = raw.parent_id.expect("validated answer has a parent");
                answers.entry(parent).or_default().push(post);
            }
        }
    }

    let orphan_answers = answers
        .iter()
        .filter(|(parent, _)| !questions.contains_key(parent))
        .map(|(_, list)| list.len())
        .sum();
    if orphan_answers > 0 {
        warn!("dropped {orphan_answers} answers whose parent question is missing");
    }

    let threads = order
        .into_iter()
        .filter_map(|qid| {
            let question = questions.remove(&qid)?;
            Thread::assemble(question, answers.remove(&qid).unwrap_or_default())
        })
        .collect();
    ThreadSet {
        threads,
        orphan_answers,
    }
}

pub const THREAD_STORE_FORMAT: &str = "crowdrank-threads";
pub const THREAD_STORE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct StoreHeader {
    format: String,
    version: u32,
    preprocess_version: u32,
}

/// Writes threads as JSONL behind a one-line format header.
pub fn write_threads<W: Write>(threads: &[Thread], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    let header = StoreHeader {
        format: THREAD_STORE_FORMAT.into(),
        version: THREAD_STORE_VERSION,
        preprocess_version: PREPROCESS_VERSION,
    };
    let io = |e| Error::io("<thread store>", e);
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n").map_err(io)?;
    for t in threads {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_threads(path: &Path) -> Result<Vec<Thread>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .transpose()
        .map_err(|e| Error::io(path, e))?
        .ok_or_else(|| Error::format(path, 1, "missing header"))?;
    let header: StoreHeader =
        serde_json::from_str(&header_line).map_err(|e| Error::format(path, 1, e.to_string()))?;
    if header.format != THREAD_STORE_FORMAT
        || header.version != THREAD_STORE_VERSION
        || header.preprocess_version != PREPROCESS_VERSION
    {
        return Err(Error::IncompatibleArtifact {
            path: path.into(),
            message: format!(
                "found {} v{} (preprocess v{}), expected {THREAD_STORE_FORMAT} v{THREAD_STORE_VERSION} (preprocess v{PREPROCESS_VERSION})",
                header.format, header.version, header.preprocess_version
            ),
        });
    }
    let mut threads = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let thread =
            serde_json::from_str(&line).map_err(|e| Error::format(path, i + 2, e.to_string()))?;
        threads.push(thread);
    }
    Ok(threads)
}
