//! Candidate features and their weighted fusion.
//!
//! Every feature yields a raw score and a normalized score in `[0, 1]`.
//! Similarity features are already bounded and pass through (negative
//! sentence cosines are floored at 0). Answer count and total answer score
//! are min-max normalized over the candidate set; question score goes
//! through a fixed ladder; the parent thread's score is min-max normalized
//! over the candidate answers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::config::WeightConfig;
use crate::corpus::{ProcessedPost, Thread};
use crate::embeddings::{IdfMap, Similarity};
use crate::error::{Error, Result};
use crate::pipeline::QueryContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    SentenceTitle,
    AsymTitle,
    AsymBody,
    Tf,
    AnswerCount,
    TotalAnswerScore,
    QuestionScore,
    AnswerAsym,
    AnswerTfidf,
    TopMethod,
    ThreadScore,
}

impl Feature {
    pub const ALL: [Feature; 11] = [
        Feature::SentenceTitle,
        Feature::AsymTitle,
        Feature::AsymBody,
        Feature::Tf,
        Feature::AnswerCount,
        Feature::TotalAnswerScore,
        Feature::QuestionScore,
        Feature::AnswerAsym,
        Feature::AnswerTfidf,
        Feature::TopMethod,
        Feature::ThreadScore,
    ];

    /// Thread features computed in the first ranking stage.
    pub const THREAD_TEXT: [Feature; 4] = [
        Feature::SentenceTitle,
        Feature::AsymTitle,
        Feature::AsymBody,
        Feature::Tf,
    ];

    pub const THREAD_SOCIAL: [Feature; 3] = [
        Feature::AnswerCount,
        Feature::TotalAnswerScore,
        Feature::QuestionScore,
    ];

    pub const ANSWER: [Feature; 4] = [
        Feature::AnswerAsym,
        Feature::AnswerTfidf,
        Feature::TopMethod,
        Feature::ThreadScore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::SentenceTitle => "sentence_title",
            Feature::AsymTitle => "asym_title",
            Feature::AsymBody => "asym_body",
            Feature::Tf => "tf",
            Feature::AnswerCount => "answer_count",
            Feature::TotalAnswerScore => "total_answer_score",
            Feature::QuestionScore => "question_score",
            Feature::AnswerAsym => "answer_asym",
            Feature::AnswerTfidf => "answer_tfidf",
            Feature::TopMethod => "top_method",
            Feature::ThreadScore => "thread_score",
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub raw: BTreeMap<Feature, f64>,
    pub normalized: BTreeMap<Feature, f64>,
}

impl FeatureVector {
    pub fn set(&mut self, feature: Feature, raw: f64, normalized: f64) {
        self.raw.insert(feature, raw);
        self.normalized.insert(feature, normalized.clamp(0.0, 1.0));
    }

    pub fn len(&self) -> usize {
        self.normalized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normalized.is_empty()
    }
}

/// Weighted sum of the normalized scores of `features`.
pub fn final_score(
    fv: &FeatureVector,
    features: &[Feature],
    weights: &WeightConfig,
) -> Result<f64> {
    features.iter().try_fold(0.0, |acc, &f| {
        let s = fv
            .normalized
            .get(&f)
            .ok_or_else(|| Error::MissingFeature(f.name().into()))?;
        Ok(acc + s * weights.weight(f))
    })
}

fn counts<'a, I: IntoIterator<Item = &'a str>>(bag: I) -> BTreeMap<&'a str, f64> {
    let mut m = BTreeMap::new();
    for w in bag {
        *m.entry(w).or_insert(0.0) += 1.0;
    }
    m
}

fn weighted_cosine(a: &BTreeMap<&str, f64>, b: &BTreeMap<&str, f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot = small
        .iter()
        .filter_map(|(w, x)| large.get(w).map(|y| x * y))
        .fold(0.0, |acc, v| acc + v);
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).min(1.0)
    }
}

/// Cosine between the raw term-frequency vectors of two bags.
pub fn tf_score<'a, Q, T>(q: Q, t: T) -> f64
where
    Q: IntoIterator<Item = &'a str>,
    T: IntoIterator<Item = &'a str>,
{
    weighted_cosine(&counts(q), &counts(t))
}

/// Cosine between the TF·IDF vectors of two bags.
pub fn tfidf_score<'a, Q, A>(q: Q, a: A, idf: &IdfMap) -> f64
where
    Q: IntoIterator<Item = &'a str>,
    A: IntoIterator<Item = &'a str>,
{
    let weigh = |mut m: BTreeMap<&'a str, f64>| {
        for (w, x) in m.iter_mut() {
            *x *= idf.idf(w);
        }
        m
    };
    weighted_cosine(&weigh(counts(q)), &weigh(counts(a)))
}

/// Question score ladder: `(inclusive upper bound, value)`; scores above the
/// last bound map to 1.0.
pub const QUESTION_SCORE_LADDER: [(i64, f64); 9] = [
    (1, 0.1),
    (5, 0.2),
    (10, 0.3),
    (25, 0.4),
    (50, 0.5),
    (75, 0.6),
    (100, 0.7),
    (200, 0.8),
    (500, 0.9),
];

pub fn question_score_value(score: i64) -> f64 {
    QUESTION_SCORE_LADDER
        .iter()
        .find(|(upper, _)| score <= *upper)
        .map_or(1.0, |(_, v)| *v)
}

/// Min-max scaling over a candidate set; a degenerate range maps to 1.0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    pub fn over<I: IntoIterator<Item = f64>>(values: I) -> Option<Self> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(Self { min: v, max: v }),
            Some(m) => Some(Self {
                min: m.min.min(v),
                max: m.max.max(v),
            }),
        })
    }

    pub fn apply(&self, v: f64) -> f64 {
        if self.max > self.min {
            ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
        } else {
            1.0
        }
    }
}

pub fn normalize_social(values: &[f64]) -> Vec<f64> {
    match MinMax::over(values.iter().copied()) {
        Some(mm) => values.iter().map(|v| mm.apply(*v)).collect(),
        None => Vec::new(),
    }
}

/// Pulls method-call names out of code.
#[derive(Debug, Clone)]
pub struct MethodExtractor {
    pattern: Regex,
}

const KEYWORDS: [&str; 8] = [
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "return",
    "new",
    "synchronized",
];

impl Default for MethodExtractor {
    fn default() -> Self {
        Self::new(crate::config::DEFAULT_METHOD_PATTERN).expect("default pattern compiles")
    }
}

impl MethodExtractor {
    /// `pattern` must capture the method name in group 1 (or the whole
    /// match, without groups).
    pub fn new(pattern: &str) -> Result<Self> {
        let pattern =
            Regex::new(pattern).map_err(|e| Error::Config(format!("method pattern: {e}")))?;
        Ok(Self { pattern })
    }

    pub fn methods(&self, code: &str) -> BTreeSet<String> {
        self.pattern
            .captures_iter(code)
            .filter_map(|c| c.get(1).or_else(|| c.get(0)))
            .map(|m| m.as_str().to_owned())
            .filter(|m| !KEYWORDS.contains(&m.as_str()))
            .collect()
    }
}

/// The most common method among a set of candidate answers.
#[derive(Debug, Clone, PartialEq)]
pub struct TopMethod {
    pub name: String,
    /// Number of candidate answers whose code calls it.
    pub frequency: usize,
}

impl TopMethod {
    /// Highest answer frequency wins; ties go to the lexicographically
    /// smallest name.
    pub fn find<'a, I: IntoIterator<Item = &'a BTreeSet<String>>>(method_sets: I) -> Option<Self> {
        let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
        for set in method_sets {
            for m in set {
                *freq.entry(m).or_default() += 1;
            }
        }
        // BTreeMap iterates names ascending, so the first maximum is the smallest name.
        let (name, frequency) =
            freq.into_iter()
                .fold(None, |best: Option<(&str, usize)>, (m, f)| match best {
                    Some((_, bf)) if bf >= f => best,
                    _ => Some((m, f)),
                })?;
        Some(Self {
            name: name.to_owned(),
            frequency,
        })
    }

    /// `log2(f_m) / scale`.
    pub fn score(&self, scale: f64) -> f64 {
        (self.frequency as f64).log2() / scale
    }
}

/// Method score of every answer: `log2(f_m) / scale` for answers calling the
/// top method, 0 otherwise.
pub fn top_method_score(
    answers: &[(u64, &str)],
    extractor: &MethodExtractor,
    scale: f64,
) -> BTreeMap<u64, f64> {
    let sets: Vec<BTreeSet<String>> = answers
        .iter()
        .map(|(_, code)| extractor.methods(code))
        .collect();
    let top = TopMethod::find(&sets);
    answers
        .iter()
        .zip(&sets)
        .map(|((id, _), set)| {
            let s = match &top {
                Some(t) if set.contains(&t.name) => t.score(scale),
                _ => 0.0,
            };
            (*id, s)
        })
        .collect()
}

/// Which thread-ranking stage is running.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Text features only.
    First,
    /// Text and social features.
    Second,
}

/// Candidate-set statistics needed by stage-2 social features.
#[derive(Debug, Clone, Copy)]
pub struct ThreadSetContext {
    pub answer_count: MinMax,
    pub total_answer_score: MinMax,
}

impl ThreadSetContext {
    pub fn new(threads: &[&Thread]) -> Option<Self> {
        Some(Self {
            answer_count: MinMax::over(threads.iter().map(|t| t.answer_count as f64))?,
            total_answer_score: MinMax::over(threads.iter().map(|t| t.total_answer_score as f64))?,
        })
    }
}

pub fn thread_features(
    query: &QueryContext,
    sim: &Similarity<'_>,
    thread: &Thread,
    stage: Stage,
    set: Option<&ThreadSetContext>,
) -> FeatureVector {
    let q = || query.bag.iter().map(String::as_str);
    let mut fv = FeatureVector::default();

    let sentence = sim.sentence_similarity(query.sentence_vector.as_deref(), thread.id());
    fv.set(Feature::SentenceTitle, sentence, sentence.max(0.0));
    let title = sim.asym_score(q(), thread.question.title_bag.iter().map(String::as_str));
    fv.set(Feature::AsymTitle, title, title);
    let body = sim.asym_score(q(), thread.body_and_answer_bodies().map(String::as_str));
    fv.set(Feature::AsymBody, body, body);
    let tf = tf_score(q(), thread.full_text().map(String::as_str));
    fv.set(Feature::Tf, tf, tf);

    if stage == Stage::Second {
        let ac = thread.answer_count as f64;
        let tas = thread.total_answer_score as f64;
        let (ac_n, tas_n) = match set {
            Some(s) => (s.answer_count.apply(ac), s.total_answer_score.apply(tas)),
            None => (1.0, 1.0),
        };
        fv.set(Feature::AnswerCount, ac, ac_n);
        fv.set(Feature::TotalAnswerScore, tas, tas_n);
        fv.set(
            Feature::QuestionScore,
            thread.question_score as f64,
            question_score_value(thread.question_score),
        );
    }
    fv
}

/// Candidate-set statistics needed by the answer features.
#[derive(Debug, Clone)]
pub struct AnswerSetContext {
    pub top_method: Option<TopMethod>,
    pub method_scale: f64,
    /// Range of parent-thread final scores over the candidate answers.
    pub thread_score: MinMax,
}

pub fn answer_features(
    query: &QueryContext,
    sim: &Similarity<'_>,
    answer: &ProcessedPost,
    answer_methods: &BTreeSet<String>,
    parent: &Thread,
    parent_final_score: f64,
    set: &AnswerSetContext,
) -> FeatureVector {
    let q = || query.bag.iter().map(String::as_str);
    let title = || parent.question.title_bag.iter().map(String::as_str);
    let mut fv = FeatureVector::default();

    let asym = sim.asym_score(
        q(),
        title().chain(answer.body_bag.iter().map(String::as_str)),
    );
    fv.set(Feature::AnswerAsym, asym, asym);

    let text = title()
        .chain(parent.question.body_bag.iter().map(String::as_str))
        .chain(answer.body_bag.iter().map(String::as_str))
        .chain(answer.code_bag.iter().map(String::as_str));
    let tfidf = tfidf_score(q(), text, sim.idf);
    fv.set(Feature::AnswerTfidf, tfidf, tfidf);

    let method = match &set.top_method {
        Some(t) if answer_methods.contains(&t.name) => t.score(set.method_scale),
        _ => 0.0,
    };
    fv.set(Feature::TopMethod, method, method);

    fv.set(
        Feature::ThreadScore,
        parent_final_score,
        set.thread_score.apply(parent_final_score),
    );
    fv
}
