//! Run a handful of ablation baselines over a ground truth and print the
//! metrics table.
//!
//! ```text
//! cargo run --example evaluate_baselines
//! ```

use std::io;

use crowdrank::evaluation::{write_report_csv, DEFAULT_K};
use crowdrank::{build_artifacts, run_ablation_grid, BuildOptions, GroundTruth};

fn main() -> crowdrank::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");
    let out = std::env::temp_dir().join("crowdrank-example-eval");
    let (engine, _) = build_artifacts(
        format!("{dir}/corpus.jsonl").as_ref(),
        &out,
        &BuildOptions::default(),
    )?;
    let engine = engine.with_antonyms(crowdrank::AntonymDictionary::bundled());
    let truth = GroundTruth::load(format!("{dir}/ground_truth.jsonl").as_ref())?;

    let baselines = [
        "Template",
        "Template-Without-SF",
        "Template-Ant-NN-ANS",
        "CRAR",
        "CRAR Without TF-IDF",
    ];
    let rows = run_ablation_grid(&engine, &baselines, &truth, DEFAULT_K)?;
    write_report_csv(io::stdout().lock(), &rows).expect("stdout");

    let best = rows.last().expect("at least one baseline");
    println!("\nper-query reciprocal rank for {}:", best.baseline);
    for m in &best.report.per_query {
        println!(
            "  query {}: rr {:.3}, recall {:.3}",
            m.query_id, m.rr, m.recall
        );
    }
    Ok(())
}
