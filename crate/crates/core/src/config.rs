//! Weights, funnel thresholds and filter switches for one pipeline run.
//!
//! Serialized as a flat TOML key/value file; every key is optional and
//! falls back to the default listed in [`WeightConfig::default`]:
//!
//! ```toml
//! thread_sentence_title = 0.5
//! thread_asym_title = 0.5
//! thread_asym_body = 0.5
//! thread_tf = 0.5
//! thread_answer_count = 0.5
//! thread_total_answer_score = 0.5
//! thread_question_score = 0.5
//! answer_asym = 1.0
//! answer_tfidf = 0.5
//! answer_top_method = 0.75
//! answer_thread_score = 0.75
//! bm25_threads = 500
//! stage1_keep = 250
//! stage2_keep = 100
//! answer_k = 150
//! final_n = 10
//! antonym_filter = "off"      # off | TR | ANS | TR_ANS
//! antonym_pos = "NN"          # NN | VB | NN_VB
//! method_scale = 10.0
//! method_pattern = '\b([A-Za-z_][A-Za-z0-9_]*)\s*\('
//! clamp_negative_cosine = true
//! bm25_k = 1.2
//! bm25_b = 0.9
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::antonym::PosMode;
use crate::error::{Error, Result};
use crate::features::Feature;
use crate::index::Bm25Params;

pub const DEFAULT_METHOD_PATTERN: &str = r"\b([A-Za-z_][A-Za-z0-9_]*)\s*\(";

/// Which candidates the antonym filter discards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AntonymTarget {
    #[serde(rename = "off")]
    Off,
    #[serde(rename = "TR")]
    Threads,
    #[serde(rename = "ANS")]
    Answers,
    #[serde(rename = "TR_ANS")]
    ThreadsAndAnswers,
}

impl AntonymTarget {
    pub fn threads(self) -> bool {
        matches!(
            self,
            AntonymTarget::Threads | AntonymTarget::ThreadsAndAnswers
        )
    }

    pub fn answers(self) -> bool {
        matches!(
            self,
            AntonymTarget::Answers | AntonymTarget::ThreadsAndAnswers
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub thread_sentence_title: f64,
    pub thread_asym_title: f64,
    pub thread_asym_body: f64,
    pub thread_tf: f64,
    pub thread_answer_count: f64,
    pub thread_total_answer_score: f64,
    pub thread_question_score: f64,
    pub answer_asym: f64,
    pub answer_tfidf: f64,
    pub answer_top_method: f64,
    pub answer_thread_score: f64,

    pub bm25_threads: usize,
    pub stage1_keep: usize,
    pub stage2_keep: usize,
    pub answer_k: usize,
    pub final_n: usize,

    pub antonym_filter: AntonymTarget,
    pub antonym_pos: PosMode,

    pub method_scale: f64,
    pub method_pattern: String,
    pub clamp_negative_cosine: bool,
    pub bm25_k: f64,
    pub bm25_b: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            thread_sentence_title: 0.5,
            thread_asym_title: 0.5,
            thread_asym_body: 0.5,
            thread_tf: 0.5,
            thread_answer_count: 0.5,
            thread_total_answer_score: 0.5,
            thread_question_score: 0.5,
            answer_asym: 1.0,
            answer_tfidf: 0.5,
            answer_top_method: 0.75,
            answer_thread_score: 0.75,
            bm25_threads: 500,
            stage1_keep: 250,
            stage2_keep: 100,
            answer_k: 150,
            final_n: 10,
            antonym_filter: AntonymTarget::Off,
            antonym_pos: PosMode::Nouns,
            method_scale: 10.0,
            method_pattern: DEFAULT_METHOD_PATTERN.into(),
            clamp_negative_cosine: true,
            bm25_k: crate::index::DEFAULT_K,
            bm25_b: crate::index::DEFAULT_B,
        }
    }
}

impl WeightConfig {
    pub fn weight(&self, feature: Feature) -> f64 {
        match feature {
            Feature::SentenceTitle => self.thread_sentence_title,
            Feature::AsymTitle => self.thread_asym_title,
            Feature::AsymBody => self.thread_asym_body,
            Feature::Tf => self.thread_tf,
            Feature::AnswerCount => self.thread_answer_count,
            Feature::TotalAnswerScore => self.thread_total_answer_score,
            Feature::QuestionScore => self.thread_question_score,
            Feature::AnswerAsym => self.answer_asym,
            Feature::AnswerTfidf => self.answer_tfidf,
            Feature::TopMethod => self.answer_top_method,
            Feature::ThreadScore => self.answer_thread_score,
        }
    }

    pub fn weight_mut(&mut self, feature: Feature) -> &mut f64 {
        match feature {
            Feature::SentenceTitle => &mut self.thread_sentence_title,
            Feature::AsymTitle => &mut self.thread_asym_title,
            Feature::AsymBody => &mut self.thread_asym_body,
            Feature::Tf => &mut self.thread_tf,
            Feature::AnswerCount => &mut self.thread_answer_count,
            Feature::TotalAnswerScore => &mut self.thread_total_answer_score,
            Feature::QuestionScore => &mut self.thread_question_score,
            Feature::AnswerAsym => &mut self.answer_asym,
            Feature::AnswerTfidf => &mut self.answer_tfidf,
            Feature::TopMethod => &mut self.answer_top_method,
            Feature::ThreadScore => &mut self.answer_thread_score,
        }
    }

    pub fn bm25(&self) -> Bm25Params {
        Bm25Params {
            k: self.bm25_k,
            b: self.bm25_b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for f in Feature::ALL {
            let w = self.weight(f);
            if !(w >= 0.0 && w.is_finite()) {
                return bad(format!(
                    "weight for {} must be a non-negative number, got {w}",
                    f.name()
                ));
            }
        }
        if self.bm25_threads == 0
            || self.stage1_keep == 0
            || self.stage2_keep == 0
            || self.answer_k == 0
        {
            return bad("funnel thresholds must be positive".into());
        }
        if !(self.bm25_threads >= self.stage1_keep && self.stage1_keep >= self.stage2_keep) {
            return bad(format!(
                "funnel must not widen: bm25_threads ({}) >= stage1_keep ({}) >= stage2_keep ({})",
                self.bm25_threads, self.stage1_keep, self.stage2_keep
            ));
        }
        if self.method_scale.is_nan() || self.method_scale <= 0.0 {
            return bad(format!(
                "method_scale must be positive, got {}",
                self.method_scale
            ));
        }
        if let Err(e) = regex::Regex::new(&self.method_pattern) {
            return bad(format!("method_pattern: {e}"));
        }
        if self.bm25_k.is_nan() || self.bm25_k < 0.0 || !(0.0..=1.0).contains(&self.bm25_b) {
            return bad(format!(
                "need bm25_k >= 0 and 0 <= bm25_b <= 1, got {} / {}",
                self.bm25_k, self.bm25_b
            ));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }
}
