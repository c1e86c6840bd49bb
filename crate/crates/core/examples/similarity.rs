//! Embedding, TF and TF-IDF similarities between word bags.
//!
//! ```text
//! cargo run --example similarity
//! ```

use crowdrank::embeddings::{cosine, DEFAULT_DIM, DEFAULT_SEED};
use crowdrank::features::{tf_score, tfidf_score};
use crowdrank::{EmbeddingStore, IdfMap, Preprocessor, Similarity, TextMode};

fn main() -> crowdrank::Result<()> {
    let pre = Preprocessor::default();
    let docs = [
        "convert angle from degrees to radians",
        "read a text file line by line",
        "convert a string to an integer",
        "sort a list of strings",
    ];
    let bags: Vec<Vec<String>> = docs
        .iter()
        .map(|d| pre.preprocess(d, TextMode::Corpus))
        .collect();
    let idf = IdfMap::from_documents(bags.iter());
    let store = EmbeddingStore::fallback(DEFAULT_DIM, DEFAULT_SEED);
    let sim = Similarity::new(&store, &idf);

    let a = store
        .word_vector("radians")
        .expect("fallback always has a vector");
    let b = store
        .word_vector("degrees")
        .expect("fallback always has a vector");
    println!("cos(radians, degrees) = {:.4}", cosine(&a, &b)?);

    let query = pre.preprocess("convert degrees to radians", TextMode::Query);
    let q = || query.iter().map(String::as_str);
    println!(
        "\n{:<40} {:>6} {:>6} {:>6} {:>6}",
        "document", "asym", "both", "tf", "tfidf"
    );
    for (doc, bag) in docs.iter().zip(&bags) {
        let t = || bag.iter().map(String::as_str);
        println!(
            "{doc:<40} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
            sim.asym(q(), t()),
            sim.asym_score(q(), t()),
            tf_score(q(), t()),
            tfidf_score(q(), t(), &idf)
        );
    }
    Ok(())
}
