//! Build a BM25 index over arbitrary documents and query it.
//!
//! ```text
//! cargo run --example bm25_index -- "reverse string"
//! ```

use crowdrank::index::{build_index, DocRef, Indexable};
use crowdrank::{Bm25Params, Preprocessor, TextMode};

struct Note {
    id: u64,
    words: Vec<String>,
}

impl Indexable for Note {
    fn doc_id(&self) -> u64 {
        self.id
    }

    fn terms(&self) -> Vec<&str> {
        self.words.iter().map(String::as_str).collect()
    }

    fn payload(&self) -> DocRef {
        DocRef::Answer {
            parent_thread_id: 0,
        }
    }
}

fn main() -> crowdrank::Result<()> {
    let pre = Preprocessor::default();
    let notes: Vec<Note> = [
        "reverse a string with StringBuilder reverse",
        "reverse the order of a list",
        "string concatenation in loops is slow",
        "join strings with a separator",
    ]
    .iter()
    .zip(1..)
    .map(|(text, id)| Note {
        id,
        words: pre.preprocess(text, TextMode::Corpus),
    })
    .collect();
    let index = build_index(&notes, Bm25Params::default())?;
    println!("{} docs, avgdl {:.2}", index.len(), index.stats.avgdl);

    let query = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "reverse string".into());
    let bag = pre.preprocess(&query, TextMode::Query);
    for (id, score) in index.search(&bag, 10) {
        println!(
            "{id}  {score:.4}  {}",
            notes[id as usize - 1].words.join(" ")
        );
    }
    Ok(())
}
