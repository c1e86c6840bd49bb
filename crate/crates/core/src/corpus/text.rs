//! Tokenization and bag-of-words preprocessing.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Bumped whenever tokenization rules change; indexes built with another
/// version are rejected at load.
pub const PREPROCESS_VERSION: u32 = 1;

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// Which rule set [`Preprocessor::preprocess`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextMode {
    /// Keeps repeated words (term frequencies matter for indexing).
    Corpus,
    /// Produces a non-repeated bag in first-occurrence order.
    Query,
}

#[derive(Debug, Clone)]
pub struct Preprocessor {
    stopwords: HashSet<String>,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self::from_list(BUNDLED_STOPWORDS)
    }
}

impl Preprocessor {
    /// Parses a stopword list: one word per line, `#` comments, blank lines ignored.
    pub fn from_list(list: &str) -> Self {
        let stopwords = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { stopwords }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_list(&text))
    }

    /// The bundled stopword list text, as shipped in `data/stopwords.txt`.
    pub fn bundled_list() -> &'static str {
        BUNDLED_STOPWORDS
    }

    /// Stopwords in sorted order, one per line. Used to persist the list
    /// alongside an index.
    pub fn to_list(&self) -> String {
        let mut words: Vec<&str> = self.stopwords.iter().map(String::as_str).collect();
        words.sort_unstable();
        let mut out = String::new();
        for w in words {
            out.push_str(w);
            out.push('\n');
        }
        out
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    /// Lowercases, splits on every character outside `[a-z0-9]`, and drops
    /// stop words, pure numbers and words shorter than two characters.
    pub fn preprocess(&self, text: &str, mode: TextMode) -> Vec<String> {
        let lower = text.to_lowercase();
        let tokens = lower
            .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
            .filter(|t| self.keep(t));
        match mode {
            TextMode::Corpus => tokens.map(str::to_owned).collect(),
            TextMode::Query => {
                let mut seen = HashSet::new();
                tokens
                    .filter(|t| seen.insert(*t))
                    .map(str::to_owned)
                    .collect()
            }
        }
    }

    fn keep(&self, token: &str) -> bool {
        token.len() >= 2
            && !token.bytes().all(|b| b.is_ascii_digit())
            && !self.stopwords.contains(token)
    }
}
