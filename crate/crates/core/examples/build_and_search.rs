//! Build artifacts from a corpus dump, reopen them, and search.
//!
//! ```text
//! cargo run --example build_and_search -- "how to fill an array"
//! ```

use crowdrank::{build_artifacts, configure_ablation, AntonymDictionary, BuildOptions, Engine};

fn main() -> crowdrank::Result<()> {
    let corpus = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample/corpus.jsonl");
    let out = std::env::temp_dir().join("crowdrank-example-index");
    let (_, summary) = build_artifacts(corpus.as_ref(), &out, &BuildOptions::default())?;
    println!(
        "built {} threads, {} answers into {}",
        summary.thread_count,
        summary.answer_count,
        out.display()
    );

    let engine = Engine::open(&out, AntonymDictionary::bundled())?;
    let query = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "how to fill an array".into());
    let config = configure_ablation("CRAR")?;
    let result = engine.search(&query, &config, 5)?;
    let c = &result.diagnostics.counts;
    println!(
        "query bag {:?}: {} threads -> {} -> {} -> {} answers",
        result.query.bag, c.bm25_threads, c.stage1, c.stage2, c.answer_candidates
    );
    for (rank, hit) in result.hits.iter().enumerate() {
        println!(
            "{}. [{:.3}] {} / answer {}",
            rank + 1,
            hit.score,
            hit.parent_title,
            hit.answer_id
        );
    }
    Ok(())
}
