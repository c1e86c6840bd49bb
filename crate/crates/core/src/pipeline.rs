//! Online search: query → BM25 threads → two-stage thread ranking →
//! per-query answer index → answer ranking → top-N answers.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::antonym::AntonymQueryContext;
use crate::config::WeightConfig;
use crate::corpus::{TextMode, Thread};
use crate::embeddings::Similarity;
use crate::engine::Engine;
use crate::error::Result;
use crate::features::{
    answer_features, final_score, thread_features, AnswerSetContext, Feature, FeatureVector,
    MethodExtractor, MinMax, Stage, ThreadSetContext, TopMethod,
};
use crate::index::{self, sort_ranked};

/// A processed query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryContext {
    pub raw_query: String,
    /// Non-repeated words, first-occurrence order.
    pub bag: Vec<String>,
    #[serde(skip)]
    pub antonyms: AntonymQueryContext,
    #[serde(skip)]
    pub sentence_vector: Option<Vec<f64>>,
}

impl Engine {
    pub fn query_context(&self, query: &str, config: &WeightConfig) -> QueryContext {
        let bag = self.preprocessor.preprocess(query, TextMode::Query);
        let antonyms = self.antonyms.antonym_context(&bag, config.antonym_pos);
        let sentence_vector = Similarity::new(&self.store, &self.idf)
            .sentence_embedding(bag.iter().map(String::as_str));
        QueryContext {
            raw_query: query.to_owned(),
            bag,
            antonyms,
            sentence_vector,
        }
    }

    /// Runs the full pipeline and returns at most `final_n` answers.
    pub fn search(
        &self,
        query: &str,
        config: &WeightConfig,
        final_n: usize,
    ) -> Result<SearchResult> {
        config.validate()?;
        let ctx = self.query_context(query, config);
        let mut diag = Diagnostics::default();
        if ctx.bag.is_empty() {
            diag.note = Some("query is empty after preprocessing".into());
            return Ok(SearchResult::empty(ctx, diag));
        }
        let mut sim = Similarity::new(&self.store, &self.idf);
        sim.clamp_negative = config.clamp_negative_cosine;

        // Candidate threads.
        let hits = self
            .thread_index
            .search_with(&ctx.bag, config.bm25_threads, config.bm25());
        diag.counts.bm25_threads = hits.len();
        let mut pool: Vec<&Thread> = hits.iter().filter_map(|(id, _)| self.thread(*id)).collect();
        if config.antonym_filter.threads() {
            pool.retain(|t| {
                let bag = t.question.title_bag.iter().chain(&t.question.body_bag);
                ctx.antonyms.score(bag.map(String::as_str)) == 0
            });
        }
        diag.counts.after_thread_filter = pool.len();

        // Stage 1: text features only.
        let stage1 = rank_threads(&pool, |t| {
            let fv = thread_features(&ctx, &sim, t, Stage::First, None);
            let score = final_score(&fv, &Feature::THREAD_TEXT, config)?;
            Ok((fv, score))
        })?;
        let kept: Vec<&Thread> = stage1
            .iter()
            .take(config.stage1_keep)
            .map(|c| c.thread)
            .collect();
        diag.counts.stage1 = kept.len();
        diag.threads_stage1 = stage1.iter().map(Scored::diagnostic).collect();

        // Stage 2: all seven thread features.
        let set = ThreadSetContext::new(&kept);
        let social: Vec<Feature> = Feature::THREAD_TEXT
            .into_iter()
            .chain(Feature::THREAD_SOCIAL)
            .collect();
        let mut stage2 = rank_threads(&kept, |t| {
            let fv = thread_features(&ctx, &sim, t, Stage::Second, set.as_ref());
            let score = final_score(&fv, &social, config)?;
            Ok((fv, score))
        })?;
        stage2.truncate(config.stage2_keep);
        diag.counts.stage2 = stage2.len();
        diag.threads_stage2 = stage2.iter().map(Scored::diagnostic).collect();

        // Answers of the surviving threads.
        let survivors: Vec<&Thread> = stage2.iter().map(|c| c.thread).collect();
        let thread_scores: HashMap<u64, f64> =
            stage2.iter().map(|c| (c.thread.id(), c.score)).collect();
        let answer_index = index::build_ephemeral_answer_index(&survivors, config.bm25())?;
        diag.counts.answer_pool = answer_index.len();
        let answer_hits = answer_index.search_with(&ctx.bag, config.answer_k, config.bm25());
        diag.counts.answer_candidates = answer_hits.len();

        let by_answer: HashMap<u64, (&Thread, usize)> = survivors
            .iter()
            .flat_map(|t| {
                t.answers
                    .iter()
                    .enumerate()
                    .map(move |(i, a)| (a.id, (*t, i)))
            })
            .collect();
        let mut candidates: Vec<(&Thread, usize)> =
            answer_hits.iter().map(|(id, _)| by_answer[id]).collect();
        if config.antonym_filter.answers() {
            candidates.retain(|(t, i)| {
                let a = &t.answers[*i];
                let bag = t
                    .question
                    .title_bag
                    .iter()
                    .chain(&a.body_bag)
                    .chain(&a.code_bag);
                ctx.antonyms.score(bag.map(String::as_str)) == 0
            });
        }
        diag.counts.after_answer_filter = candidates.len();
        if candidates.is_empty() {
            return Ok(SearchResult::empty(ctx, diag));
        }

        // Answer features need the candidate-set top method and thread-score range.
        let extractor = MethodExtractor::new(&config.method_pattern)?;
        let methods: Vec<BTreeSet<String>> = candidates
            .par_iter()
            .map(|(t, i)| extractor.methods(&t.answers[*i].code_text()))
            .collect();
        let set = AnswerSetContext {
            top_method: TopMethod::find(&methods),
            method_scale: config.method_scale,
            thread_score: MinMax::over(candidates.iter().map(|(t, _)| thread_scores[&t.id()]))
                .expect("candidates are non-empty"),
        };
        let scored: Vec<(u64, &Thread, usize, FeatureVector, f64)> = candidates
            .par_iter()
            .zip(&methods)
            .map(|((t, i), m)| {
                let a = &t.answers[*i];
                let fv = answer_features(&ctx, &sim, a, m, t, thread_scores[&t.id()], &set);
                let score = final_score(&fv, &Feature::ANSWER, config)?;
                Ok((a.id, *t, *i, fv, score))
            })
            .collect::<Result<_>>()?;

        let mut order: Vec<(u64, f64)> = scored.iter().map(|s| (s.0, s.4)).collect();
        sort_ranked(&mut order);
        let position: HashMap<u64, usize> = order
            .iter()
            .enumerate()
            .map(|(r, (id, _))| (*id, r))
            .collect();
        let mut scored = scored;
        scored.sort_by_key(|s| position[&s.0]);

        diag.answers = scored
            .iter()
            .map(|(id, t, _, fv, score)| CandidateDiagnostic {
                id: *id,
                thread_id: Some(t.id()),
                score: *score,
                features: fv.clone(),
            })
            .collect();
        let hits: Vec<AnswerHit> = scored
            .iter()
            .take(final_n)
            .map(|(id, t, i, _, score)| AnswerHit {
                answer_id: *id,
                thread_id: t.id(),
                score: *score,
                parent_title: t.question.original_title.clone(),
                answer_body: t.answers[*i].original_body.clone(),
            })
            .collect();
        diag.counts.returned = hits.len();
        Ok(SearchResult {
            query: ctx,
            hits,
            diagnostics: diag,
        })
    }
}

struct Scored<'a> {
    thread: &'a Thread,
    features: FeatureVector,
    score: f64,
}

impl Scored<'_> {
    fn diagnostic(&self) -> CandidateDiagnostic {
        CandidateDiagnostic {
            id: self.thread.id(),
            thread_id: None,
            score: self.score,
            features: self.features.clone(),
        }
    }
}

/// Scores every thread in parallel and sorts by (score desc, id asc).
fn rank_threads<'a, F>(threads: &[&'a Thread], score: F) -> Result<Vec<Scored<'a>>>
where
    F: Fn(&Thread) -> Result<(FeatureVector, f64)> + Sync,
{
    let mut scored: Vec<Scored<'a>> = threads
        .par_iter()
        .map(|t| {
            let (features, s) = score(t)?;
            Ok(Scored {
                thread: t,
                features,
                score: s,
            })
        })
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.thread.id().cmp(&b.thread.id()))
    });
    Ok(scored)
}

/// One recommended answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerHit {
    pub answer_id: u64,
    pub thread_id: u64,
    pub score: f64,
    pub parent_title: String,
    pub answer_body: String,
}

/// How many candidates each step produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub bm25_threads: usize,
    pub after_thread_filter: usize,
    pub stage1: usize,
    pub stage2: usize,
    pub answer_pool: usize,
    pub answer_candidates: usize,
    pub after_answer_filter: usize,
    pub returned: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateDiagnostic {
    pub id: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thread_id: Option<u64>,
    pub score: f64,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub counts: StageCounts,
    /// All BM25 candidates after filtering, in stage-1 order.
    pub threads_stage1: Vec<CandidateDiagnostic>,
    /// Stage-2 survivors in final thread order.
    pub threads_stage2: Vec<CandidateDiagnostic>,
    /// Answer candidates in final order (not truncated to N).
    pub answers: Vec<CandidateDiagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub query: QueryContext,
    pub hits: Vec<AnswerHit>,
    pub diagnostics: Diagnostics,
}

impl SearchResult {
    fn empty(query: QueryContext, diagnostics: Diagnostics) -> Self {
        Self {
            query,
            hits: Vec::new(),
            diagnostics,
        }
    }

    pub fn answer_ids(&self) -> Vec<u64> {
        self.hits.iter().map(|h| h.answer_id).collect()
    }
}
