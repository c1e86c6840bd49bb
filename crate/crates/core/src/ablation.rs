//! Named pipeline variants for ablation studies.
//!
//! `Template` is the default configuration (every thread and answer feature
//! at its default weight, no antonym filter). Other names switch social
//! features off, enable the antonym filter, or knock single features in or
//! out. `CRAR` is `Template` plus the noun antonym filter on answers.

use crate::antonym::PosMode;
use crate::config::{AntonymTarget, WeightConfig};
use crate::error::{Error, Result};
use crate::features::Feature;

const SOCIAL_COMBOS: [&str; 7] = ["TAS", "QS", "AC", "TAS-AC", "QS-TAS", "QS-AC", "All"];
const POS: [&str; 3] = ["NN", "VB", "NN_VB"];
const TARGETS: [&str; 3] = ["TR", "ANS", "TR_ANS"];

/// Thread feature knockouts: (display name, feature).
const THREAD_KNOCKOUTS: [(&str, Feature); 4] = [
    ("TF", Feature::Tf),
    ("Sent2Vec", Feature::SentenceTitle),
    ("Asym.Sim.Body+Ans.Body", Feature::AsymBody),
    ("Asym.Sim.Title", Feature::AsymTitle),
];

const ANSWER_KNOCKOUTS: [(&str, Feature); 4] = [
    ("Top Method", Feature::TopMethod),
    ("TF-IDF", Feature::AnswerTfidf),
    ("Thread Score", Feature::ThreadScore),
    ("Asymmetric Similarity", Feature::AnswerAsym),
];

/// Every accepted baseline name, in a stable documentation order.
pub fn baseline_names() -> Vec<String> {
    let mut names = vec!["Template".to_string(), "Template-Without-SF".to_string()];
    names.extend(SOCIAL_COMBOS.iter().map(|c| format!("Template-SF-{c}")));
    for pos in POS {
        for target in TARGETS {
            names.push(format!("Template-Ant-{pos}-{target}"));
        }
    }
    names.push("Template-Ant-NN-ANS|SF-QS-AC".into());
    names.push("Template-Ant-NN-ANS|SF-All".into());
    names.push("CRAR".into());
    for (name, _) in THREAD_KNOCKOUTS.iter().chain(&ANSWER_KNOCKOUTS) {
        names.push((*name).to_string());
        names.push(format!("CRAR Without {name}"));
    }
    names
}

fn crar() -> WeightConfig {
    WeightConfig {
        antonym_filter: AntonymTarget::Answers,
        antonym_pos: PosMode::Nouns,
        ..WeightConfig::default()
    }
}

/// Keeps only the listed social features (`TAS`, `QS`, `AC`, or `All`).
fn with_social(mut cfg: WeightConfig, combo: &str) -> Option<WeightConfig> {
    let mut keep = Vec::new();
    for part in combo.split('-') {
        match part {
            "TAS" => keep.push(Feature::TotalAnswerScore),
            "QS" => keep.push(Feature::QuestionScore),
            "AC" => keep.push(Feature::AnswerCount),
            "All" => keep.extend(Feature::THREAD_SOCIAL),
            _ => return None,
        }
    }
    for f in Feature::THREAD_SOCIAL {
        if !keep.contains(&f) {
            *cfg.weight_mut(f) = 0.0;
        }
    }
    Some(cfg)
}

fn with_antonyms(mut cfg: WeightConfig, variant: &str) -> Option<WeightConfig> {
    let (pos, target) = POS
        .iter()
        .find_map(|p| {
            variant
                .strip_prefix(p)
                .and_then(|r| r.strip_prefix('-'))
                .map(|r| (*p, r))
        })
        .filter(|(_, t)| TARGETS.contains(t))?;
    cfg.antonym_pos = pos.parse().ok()?;
    cfg.antonym_filter = match target {
        "TR" => AntonymTarget::Threads,
        "ANS" => AntonymTarget::Answers,
        _ => AntonymTarget::ThreadsAndAnswers,
    };
    Some(cfg)
}

fn parse(name: &str) -> Option<WeightConfig> {
    match name {
        "Template" => return Some(WeightConfig::default()),
        "Template-Without-SF" => {
            let mut cfg = WeightConfig::default();
            for f in Feature::THREAD_SOCIAL {
                *cfg.weight_mut(f) = 0.0;
            }
            return Some(cfg);
        }
        "CRAR" | "CRAR (Sent2Vec)" => return Some(crar()),
        _ => {}
    }
    if let Some(rest) = name.strip_prefix("CRAR Without ") {
        let (_, f) = THREAD_KNOCKOUTS
            .iter()
            .chain(&ANSWER_KNOCKOUTS)
            .find(|(n, _)| *n == rest)?;
        let mut cfg = crar();
        *cfg.weight_mut(*f) = 0.0;
        return Some(cfg);
    }
    if let Some((_, f)) = THREAD_KNOCKOUTS.iter().find(|(n, _)| *n == name) {
        let mut cfg = crar();
        for other in Feature::THREAD_TEXT
            .into_iter()
            .chain(Feature::THREAD_SOCIAL)
        {
            if other != *f {
                *cfg.weight_mut(other) = 0.0;
            }
        }
        return Some(cfg);
    }
    if let Some((_, f)) = ANSWER_KNOCKOUTS.iter().find(|(n, _)| *n == name) {
        let mut cfg = crar();
        for other in Feature::ANSWER {
            if other != *f {
                *cfg.weight_mut(other) = 0.0;
            }
        }
        return Some(cfg);
    }
    let rest = name.strip_prefix("Template-")?;
    if let Some(combo) = rest.strip_prefix("SF-") {
        return with_social(WeightConfig::default(), combo);
    }
    let ant = rest.strip_prefix("Ant-")?;
    match ant.split_once('|') {
        Some((ant, sf)) => {
            let cfg = with_antonyms(WeightConfig::default(), ant)?;
            with_social(cfg, sf.strip_prefix("SF-")?)
        }
        None => with_antonyms(WeightConfig::default(), ant),
    }
}

/// The configuration for a named baseline.
pub fn configure_ablation(name: &str) -> Result<WeightConfig> {
    parse(name).ok_or_else(|| Error::UnknownBaseline {
        name: name.to_owned(),
        valid: baseline_names(),
    })
}
