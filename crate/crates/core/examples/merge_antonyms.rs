//! Merge antonym lists and score candidates against a query.
//!
//! ```text
//! cargo run --example merge_antonyms
//! ```

use crowdrank::antonym::merge_lists;
use crowdrank::{AntonymDictionary, PosMode, Preprocessor, TextMode};

fn main() -> crowdrank::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");
    let merged = merge_lists(&[
        format!("{dir}/antonyms_a.tsv"),
        format!("{dir}/antonyms_b.tsv"),
    ])?;
    println!(
        "merged {} entries ({} malformed lines skipped)",
        merged.dictionary.len(),
        merged.warning_count
    );
    let decode: Vec<&str> = merged.dictionary.antonyms("decode").collect();
    println!("decode <-> {decode:?}");

    let dict = AntonymDictionary::bundled();
    let pre = Preprocessor::default();
    for query in ["fill an array", "file compression", "zip unzip file"] {
        let bag = pre.preprocess(query, TextMode::Query);
        let ctx = dict.antonym_context(&bag, PosMode::NounsAndVerbs);
        println!(
            "\n{query:?}: antonyms {:?}, self-antonymous {}",
            ctx.antonyms, ctx.self_antonymous
        );
        for candidate in [
            "empty the array first",
            "decompression of a file",
            "unzip the archive",
        ] {
            let words = pre.preprocess(candidate, TextMode::Corpus);
            println!(
                "  {candidate:<26} -> {}",
                ctx.score(words.iter().map(String::as_str))
            );
        }
    }
    Ok(())
}
