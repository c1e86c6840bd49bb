//! Antonym dictionary and the antonym penalty used to filter candidates.
//!
//! Dictionary files are UTF-8 lines of the form
//! `word<TAB>pos_flags<TAB>antonym1,antonym2,...` where `pos_flags` is a
//! subset of `{n, v}`. Lines starting with `#` are comments.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_DICTIONARY: &str = include_str!("../data/antonyms.tsv");

/// Part-of-speech tags a dictionary word may carry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PosTags {
    pub noun: bool,
    pub verb: bool,
}

impl PosTags {
    fn parse(flags: &str) -> Option<Self> {
        let mut tags = PosTags::default();
        for c in flags.trim().chars() {
            match c.to_ascii_lowercase() {
                'n' => tags.noun = true,
                'v' => tags.verb = true,
                _ => return None,
            }
        }
        Some(tags)
    }

    fn is_empty(self) -> bool {
        !self.noun && !self.verb
    }

    fn union(self, other: Self) -> Self {
        Self {
            noun: self.noun || other.noun,
            verb: self.verb || other.verb,
        }
    }

    /// Tags guessed from the word's suffix, for entries listed without flags.
    pub fn from_suffix(word: &str) -> Self {
        const VERB: [&str; 3] = ["ing", "ize", "ify"];
        const NOUN: [&str; 3] = ["tion", "ness", "ment"];
        if VERB.iter().any(|s| word.ends_with(s)) {
            Self {
                noun: false,
                verb: true,
            }
        } else if NOUN.iter().any(|s| word.ends_with(s)) {
            Self {
                noun: true,
                verb: false,
            }
        } else {
            Self {
                noun: true,
                verb: true,
            }
        }
    }
}

impl fmt::Display for PosTags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.noun {
            f.write_str("n")?;
        }
        if self.verb {
            f.write_str("v")?;
        }
        Ok(())
    }
}

/// Which query words contribute antonyms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PosMode {
    #[serde(rename = "NN")]
    Nouns,
    #[serde(rename = "VB")]
    Verbs,
    #[serde(rename = "NN_VB")]
    NounsAndVerbs,
}

impl PosMode {
    fn matches(self, tags: PosTags) -> bool {
        match self {
            PosMode::Nouns => tags.noun,
            PosMode::Verbs => tags.verb,
            PosMode::NounsAndVerbs => tags.noun || tags.verb,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosMode::Nouns => "NN",
            PosMode::Verbs => "VB",
            PosMode::NounsAndVerbs => "NN_VB",
        }
    }
}

impl FromStr for PosMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "NN" => Ok(PosMode::Nouns),
            "VB" => Ok(PosMode::Verbs),
            "NN_VB" => Ok(PosMode::NounsAndVerbs),
            _ => Err(format!("unknown POS mode `{s}` (expected NN, VB or NN_VB)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Entry {
    pub pos: PosTags,
    pub antonyms: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AntonymDictionary {
    entries: BTreeMap<String, Entry>,
}

/// Result of [`merge_lists`] and [`AntonymDictionary::parse`].
#[derive(Debug, Clone, Default)]
pub struct Merged {
    pub dictionary: AntonymDictionary,
    pub warning_count: usize,
}

impl AntonymDictionary {
    /// The dictionary shipped in `data/antonyms.tsv`.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_DICTIONARY).dictionary
    }

    /// Parses one dictionary file's content. Unparsable lines are skipped
    /// and counted. The result is symmetrically closed.
    pub fn parse(text: &str) -> Merged {
        let mut dict = AntonymDictionary::default();
        let warning_count = dict.absorb(text, "<input>");
        dict.close_symmetric();
        Merged {
            dictionary: dict,
            warning_count,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let merged = merge_lists(&[path])?;
        Ok(merged.dictionary)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&Entry> {
        self.entries.get(word)
    }

    pub fn antonyms(&self, word: &str) -> impl Iterator<Item = &str> {
        self.entries
            .get(word)
            .into_iter()
            .flat_map(|e| e.antonyms.iter().map(String::as_str))
    }

    /// Effective POS tags: the listed flags, or the suffix guess when the
    /// entry carries none. `None` for words outside the dictionary.
    pub fn pos_tags(&self, word: &str) -> Option<PosTags> {
        self.entries.get(word).map(|e| {
            if e.pos.is_empty() {
                PosTags::from_suffix(word)
            } else {
                e.pos
            }
        })
    }

    fn absorb(&mut self, text: &str, source: &str) -> usize {
        let mut warnings = 0;
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            match parse_line(trimmed) {
                Some((word, pos, antonyms)) => {
                    let entry = self.entries.entry(word.clone()).or_default();
                    entry.pos = entry.pos.union(pos);
                    entry
                        .antonyms
                        .extend(antonyms.into_iter().filter(|a| *a != word));
                }
                None => {
                    warn!("{source}:{}: skipping unparsable dictionary line", i + 1);
                    warnings += 1;
                }
            }
        }
        warnings
    }

    fn close_symmetric(&mut self) {
        let pairs: Vec<(String, String)> = self
            .entries
            .iter()
            .flat_map(|(w, e)| e.antonyms.iter().map(move |a| (a.clone(), w.clone())))
            .collect();
        for (word, antonym) in pairs {
            self.entries
                .entry(word)
                .or_default()
                .antonyms
                .insert(antonym);
        }
    }

    /// Writes the dictionary in the file format, sorted by word.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (word, entry) in &self.entries {
            let antonyms: Vec<&str> = entry.antonyms.iter().map(String::as_str).collect();
            writeln!(out, "{word}\t{}\t{}", entry.pos, antonyms.join(","))?;
        }
        Ok(())
    }

    /// Query words whose POS tags intersect `mode`. Words outside the
    /// dictionary are excluded.
    pub fn pos_filter<'q>(&self, query_bag: &'q [String], mode: PosMode) -> Vec<&'q str> {
        query_bag
            .iter()
            .map(String::as_str)
            .filter(|w| self.pos_tags(w).is_some_and(|t| mode.matches(t)))
            .collect()
    }

    pub fn antonym_context(&self, query_bag: &[String], mode: PosMode) -> AntonymQueryContext {
        let query: HashSet<&str> = query_bag.iter().map(String::as_str).collect();
        let self_antonymous = query
            .iter()
            .any(|w| self.antonyms(w).any(|a| query.contains(a)));
        let antonyms = self
            .pos_filter(query_bag, mode)
            .into_iter()
            .flat_map(|w| self.antonyms(w))
            .filter(|a| !query.contains(a))
            .map(str::to_owned)
            .collect();
        AntonymQueryContext {
            antonyms,
            self_antonymous,
        }
    }
}

fn parse_line(line: &str) -> Option<(String, PosTags, Vec<String>)> {
    let mut fields = line.split('\t');
    let word = fields.next()?.trim().to_lowercase();
    if word.is_empty() || word.contains(char::is_whitespace) {
        return None;
    }
    let pos = PosTags::parse(fields.next()?)?;
    let antonyms = fields
        .next()
        .unwrap_or("")
        .split(',')
        .map(|a| a.trim().to_lowercase())
        .filter(|a| !a.is_empty())
        .collect::<Vec<_>>();
    if fields.next().is_some() || antonyms.iter().any(|a| a.contains(char::is_whitespace)) {
        return None;
    }
    Some((word, pos, antonyms))
}

/// Merges dictionary files: antonym sets and POS tags are unioned per word,
/// then closed symmetrically.
pub fn merge_lists<P: AsRef<Path>>(paths: &[P]) -> Result<Merged> {
    let mut dict = AntonymDictionary::default();
    let mut warning_count = 0;
    for path in paths {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        warning_count += dict.absorb(&text, &path.display().to_string());
    }
    dict.close_symmetric();
    Ok(Merged {
        dictionary: dict,
        warning_count,
    })
}

/// Antonyms collected from a query, ready to score candidates against.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AntonymQueryContext {
    pub antonyms: BTreeSet<String>,
    /// The query contains a word together with one of its antonyms
    /// (e.g. "zip" and "unzip"); such queries never penalize candidates.
    pub self_antonymous: bool,
}

impl AntonymQueryContext {
    /// Number of distinct query antonyms found in the candidate bag.
    pub fn score<'a, I>(&self, candidate: I) -> usize
    where
        I: IntoIterator<Item = &'a str>,
    {
        if self.self_antonymous || self.antonyms.is_empty() {
            return 0;
        }
        let bag: HashSet<&str> = candidate.into_iter().collect();
        self.antonyms
            .iter()
            .filter(|a| bag.contains(a.as_str()))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bag(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn merge_unions_antonyms() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tsv");
        let b = dir.path().join("b.tsv");
        fs::write(&a, "fill\tv\tempty\n").unwrap();
        fs::write(&b, "fill\tv\tdrain\nhot\t\tcold\n").unwrap();
        let merged = merge_lists(&[&a, &b]).unwrap();
        let fill: Vec<_> = merged.dictionary.antonyms("fill").collect();
        assert_eq!(fill, ["drain", "empty"]);
        assert_eq!(merged.warning_count, 0);
        // Symmetric closure.
        assert_eq!(
            merged.dictionary.antonyms("cold").collect::<Vec<_>>(),
            ["hot"]
        );
    }

    #[test]
    fn disjoint_files_sum() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.tsv");
        let b = dir.path().join("b.tsv");
        fs::write(&a, "array\tn\t\n").unwrap();
        fs::write(&b, "list\tn\t\n").unwrap();
        assert_eq!(merge_lists(&[&a, &b]).unwrap().dictionary.len(), 2);
    }

    #[test]
    fn empty_and_bad_lines() {
        assert!(merge_lists::<&Path>(&[]).unwrap().dictionary.is_empty());
        let merged =
            AntonymDictionary::parse("ok\tn\tko\nbad\tx\tfoo\nself\tv\tself\nmore\tn\ta\tb\n");
        assert_eq!(merged.warning_count, 2);
        assert!(merged.dictionary.antonyms("self").next().is_none());
        assert!(merged.dictionary.get("self").is_some());
    }

    #[test]
    fn missing_file_is_error() {
        assert!(merge_lists(&["/nonexistent/antonyms.tsv"]).is_err());
    }

    #[test]
    fn pos_filter_uses_lexicon() {
        let dict = AntonymDictionary::parse("array\tn\t\nfill\tv\tempty\n").dictionary;
        let q = bag(&["fill", "array", "unknownword"]);
        assert_eq!(dict.pos_filter(&q, PosMode::Nouns), ["array"]);
        assert_eq!(dict.pos_filter(&q, PosMode::Verbs), ["fill"]);
        assert_eq!(
            dict.pos_filter(&q, PosMode::NounsAndVerbs),
            ["fill", "array"]
        );
        assert!(dict.pos_filter(&[], PosMode::Nouns).is_empty());
    }

    #[test]
    fn suffix_heuristic_for_untagged() {
        let dict = AntonymDictionary::parse("sorting\t\tx\ncompletion\t\ty\nfoo\t\tz\n").dictionary;
        assert_eq!(
            dict.pos_tags("sorting"),
            Some(PosTags {
                noun: false,
                verb: true
            })
        );
        assert_eq!(
            dict.pos_tags("completion"),
            Some(PosTags {
                noun: true,
                verb: false
            })
        );
        assert_eq!(
            dict.pos_tags("foo"),
            Some(PosTags {
                noun: true,
                verb: true
            })
        );
        assert_eq!(dict.pos_tags("absent"), None);
    }

    #[test]
    fn context_fill_array() {
        let dict = AntonymDictionary::bundled();
        let ctx = dict.antonym_context(&bag(&["fill", "array"]), PosMode::NounsAndVerbs);
        assert!(ctx.antonyms.contains("empty"));
        assert!(!ctx.self_antonymous);
        assert_eq!(ctx.score(["how", "to", "empty", "an", "array"]), 1);
    }

    #[test]
    fn context_zip_unzip() {
        let dict = AntonymDictionary::bundled();
        let ctx = dict.antonym_context(&bag(&["zip", "unzip", "file"]), PosMode::NounsAndVerbs);
        assert!(ctx.self_antonymous);
        assert_eq!(ctx.score(["zip", "unzip", "file", "compress"]), 0);
    }

    #[test]
    fn context_no_hits() {
        let dict = AntonymDictionary::bundled();
        let ctx = dict.antonym_context(&bag(&["qwerty", "zxcv"]), PosMode::NounsAndVerbs);
        assert!(ctx.antonyms.is_empty());
        assert!(!ctx.self_antonymous);
    }

    #[test]
    fn score_counts_distinct_hits() {
        let ctx = AntonymQueryContext {
            antonyms: ["empty", "drain"].iter().map(|s| s.to_string()).collect(),
            self_antonymous: false,
        };
        assert_eq!(ctx.score(["empty", "drain", "empty", "x"]), 2);
    }

    #[test]
    fn write_round_trips() {
        let dict = AntonymDictionary::bundled();
        let mut out = Vec::new();
        dict.write_to(&mut out).unwrap();
        let reparsed = AntonymDictionary::parse(std::str::from_utf8(&out).unwrap());
        assert_eq!(reparsed.warning_count, 0);
        assert_eq!(reparsed.dictionary, dict);
    }

    proptest! {
        #[test]
        fn score_bounded_and_monotone(
            ants in proptest::collection::btree_set("[a-e]{1,2}", 0..6),
            small in proptest::collection::vec("[a-e]{1,2}", 0..8),
            extra in proptest::collection::vec("[a-e]{1,2}", 0..8),
        ) {
            let ctx = AntonymQueryContext { antonyms: ants, self_antonymous: false };
            let s1 = ctx.score(small.iter().map(String::as_str));
            let s2 = ctx.score(small.iter().chain(extra.iter()).map(String::as_str));
            prop_assert!(s1 <= ctx.antonyms.len());
            prop_assert!(s1 <= s2);
        }
    }
}
