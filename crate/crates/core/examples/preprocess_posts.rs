//! Split markup into prose and code, preprocess it, and rebuild threads.
//!
//! ```text
//! cargo run --example preprocess_posts [corpus.jsonl]
//! ```

use std::path::PathBuf;

use crowdrank::corpus::{self, separate_code};
use crowdrank::{Preprocessor, TagFilter, TextMode};

fn main() -> crowdrank::Result<()> {
    let html = "<p>Use <code>Math.toRadians(deg)</code> &amp; you're done.</p>";
    let (prose, code) = separate_code(html);
    println!("prose: {prose:?}\ncode:  {code:?}");

    let pre = Preprocessor::default();
    let query = "How do I convert angle from radians to degrees?";
    println!("query bag: {:?}", pre.preprocess(query, TextMode::Query));

    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/data/sample/corpus.jsonl"
            ))
        });
    let dump = corpus::load_dump(&path, &TagFilter::default())?;
    let set = corpus::build_threads(&dump.posts, &pre);
    println!(
        "\n{} posts kept, {} lines skipped, {} threads, {} orphan answers",
        dump.posts.len(),
        dump.warning_count,
        set.threads.len(),
        set.orphan_answers
    );
    for t in set.threads.iter().take(3) {
        println!("\n#{} {}", t.id(), t.question.original_title);
        println!("  title bag: {:?}", t.question.title_bag);
        for a in &t.answers {
            println!(
                "  answer {} (score {}): code {:?}",
                a.id, a.score, a.code_bag
            );
        }
    }
    Ok(())
}
