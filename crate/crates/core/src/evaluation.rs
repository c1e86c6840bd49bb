//! Retrieval metrics against a ground truth, and the ablation grid runner.
//!
//! For a ranked list `r` and relevant set `R`, at cutoff `K`:
//!
//! - hit: 1 if any of the top `K` is relevant;
//! - rr: `1 / rank` of the first relevant answer within the top `K`, else 0;
//! - ap: sum of precision@i over relevant positions `i <= K`, divided by
//!   `min(|R|, K)`;
//! - recall: `|R ∩ top K| / |R|`.
//!
//! Corpus figures are unweighted means over every ground-truth query; a
//! query without results contributes zeros.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ablation::configure_ablation;
use crate::engine::Engine;
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub query_id: u64,
    pub query_text: String,
    pub relevant_answer_ids: BTreeSet<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub entries: BTreeMap<u64, TruthEntry>,
}

impl GroundTruth {
    pub fn insert(&mut self, entry: TruthEntry) -> Result<()> {
        if entry.query_id == 0 || entry.relevant_answer_ids.contains(&0) {
            return Err(Error::GroundTruth(format!(
                "query {}: ids must be positive",
                entry.query_id
            )));
        }
        if entry.relevant_answer_ids.is_empty() {
            return Err(Error::GroundTruth(format!(
                "query {} has no relevant answers",
                entry.query_id
            )));
        }
        if self.entries.contains_key(&entry.query_id) {
            return Err(Error::GroundTruth(format!(
                "duplicate query_id {}",
                entry.query_id
            )));
        }
        self.entries.insert(entry.query_id, entry);
        Ok(())
    }

    /// Reads JSONL: `{"query_id", "query_text", "relevant_answer_ids": [...]}`.
    pub fn load(path: &Path) -> Result<Self> {
        let mut truth = GroundTruth::default();
        for (lineno, line) in read_lines(path)? {
            let entry: TruthEntry = serde_json::from_str(&line)
                .map_err(|e| Error::format(path, lineno, e.to_string()))?;
            truth.insert(entry)?;
        }
        Ok(truth)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultLine {
    pub query_id: u64,
    pub ranked_answer_ids: Vec<u64>,
}

pub type Rankings = BTreeMap<u64, Vec<u64>>;

pub fn read_results(path: &Path) -> Result<Rankings> {
    let mut out = Rankings::new();
    for (lineno, line) in read_lines(path)? {
        let r: ResultLine =
            serde_json::from_str(&line).map_err(|e| Error::format(path, lineno, e.to_string()))?;
        if out.insert(r.query_id, r.ranked_answer_ids).is_some() {
            return Err(Error::format(
                path,
                lineno,
                format!("duplicate query_id {}", r.query_id),
            ));
        }
    }
    Ok(out)
}

pub fn write_results<W: Write>(mut out: W, rankings: &Rankings) -> Result<()> {
    for (query_id, ids) in rankings {
        let line = ResultLine {
            query_id: *query_id,
            ranked_answer_ids: ids.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")
            .map_err(|e| Error::io("<results>", e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: u64,
    pub hit: f64,
    pub rr: f64,
    pub ap: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub k: usize,
    pub per_query: Vec<QueryMetrics>,
    pub hit: f64,
    pub mrr: f64,
    pub map: f64,
    pub mr: f64,
}

impl MetricsReport {
    pub fn sum(&self) -> f64 {
        self.hit + self.mrr + self.map + self.mr
    }
}

/// Metrics for one ranking. Repeated ids count at their first position only.
pub fn query_metrics(
    query_id: u64,
    ranking: &[u64],
    relevant: &BTreeSet<u64>,
    k: usize,
) -> QueryMetrics {
    let mut seen = HashSet::new();
    let top = ranking.iter().filter(|id| seen.insert(**id)).take(k);
    let mut found = 0usize;
    let mut first = None;
    let mut precision_sum = 0.0;
    for (i, id) in top.enumerate() {
        if relevant.contains(id) {
            found += 1;
            first.get_or_insert(i + 1);
            precision_sum += found as f64 / (i + 1) as f64;
        }
    }
    let denom = relevant.len().min(k);
    QueryMetrics {
        query_id,
        hit: if found > 0 { 1.0 } else { 0.0 },
        rr: first.map_or(0.0, |r| 1.0 / r as f64),
        ap: if denom == 0 {
            0.0
        } else {
            precision_sum / denom as f64
        },
        recall: if relevant.is_empty() {
            0.0
        } else {
            found as f64 / relevant.len() as f64
        },
    }
}

/// Scores rankings against the ground truth at cutoff `k` (pass
/// `usize::MAX` for no cutoff).
pub fn evaluate(results: &Rankings, truth: &GroundTruth, k: usize) -> Result<MetricsReport> {
    if let Some(unknown) = results.keys().find(|q| !truth.entries.contains_key(q)) {
        return Err(Error::UnknownQuery(*unknown));
    }
    let per_query: Vec<QueryMetrics> = truth
        .entries
        .values()
        .map(|e| {
            let ranking = results.get(&e.query_id).map(Vec::as_slice).unwrap_or(&[]);
            query_metrics(e.query_id, ranking, &e.relevant_answer_ids, k)
        })
        .collect();
    let n = per_query.len().max(1) as f64;
    let mean =
        |f: fn(&QueryMetrics) -> f64| per_query.iter().map(f).fold(0.0, |acc, v| acc + v) / n;
    Ok(MetricsReport {
        k,
        hit: mean(|m| m.hit),
        mrr: mean(|m| m.rr),
        map: mean(|m| m.ap),
        mr: mean(|m| m.recall),
        per_query,
    })
}

/// Runs `engine` over every ground-truth query with the named baseline.
/// Queries are evaluated in parallel; output order is by query id.
pub fn run_baseline(
    engine: &Engine,
    baseline: &str,
    truth: &GroundTruth,
    final_n: usize,
) -> Result<Rankings> {
    let cfg = configure_ablation(baseline)?;
    truth
        .entries
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|e| {
            Ok((
                e.query_id,
                engine.search(&e.query_text, &cfg, final_n)?.answer_ids(),
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub baseline: String,
    pub report: MetricsReport,
    #[serde(skip)]
    pub rankings: Rankings,
}

/// One row per baseline, sorted by Hit + MRR + MAP + MR ascending (ties keep
/// input order).
pub fn run_ablation_grid<S: AsRef<str>>(
    engine: &Engine,
    baselines: &[S],
    truth: &GroundTruth,
    k: usize,
) -> Result<Vec<GridRow>> {
    let mut rows = baselines
        .iter()
        .map(|b| {
            let rankings = run_baseline(engine, b.as_ref(), truth, k)?;
            let report = evaluate(&rankings, truth, k)?;
            Ok(GridRow {
                baseline: b.as_ref().to_owned(),
                report,
                rankings,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.report.sum().total_cmp(&b.report.sum()));
    Ok(rows)
}

/// CSV with header `baseline,Hit,MRR,MAP,MR`, values to six decimals.
pub fn write_report_csv<W: Write>(mut out: W, rows: &[GridRow]) -> std::io::Result<()> {
    writeln!(out, "baseline,Hit,MRR,MAP,MR")?;
    for r in rows {
        let name = if r.baseline.contains([',', '"']) {
            format!("\"{}\"", r.baseline.replace('"', "\"\""))
        } else {
            r.baseline.clone()
        };
        writeln!(
            out,
            "{name},{:.6},{:.6},{:.6},{:.6}",
            r.report.hit, r.report.mrr, r.report.map, r.report.mr
        )?;
    }
    Ok(())
}
