//! Synthetic corpora shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crowdrank::corpus::{build_threads, PostKind};
use crowdrank::evaluation::TruthEntry;
use crowdrank::{
    AntonymDictionary, Bm25Params, Engine, GroundTruth, Preprocessor, RawPost, Vectors,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn question(id: u64, title: &str, body: &str, score: i64) -> RawPost {
    RawPost {
        id,
        post_kind: PostKind::Question,
        parent_id: None,
        title: Some(title.to_owned()),
        body_html: format!("<p>{body}</p>"),
        score,
        tags: vec!["java".into()],
    }
}

pub fn answer(id: u64, parent: u64, prose: &str, code: &str, score: i64) -> RawPost {
    RawPost {
        id,
        post_kind: PostKind::Answer,
        parent_id: Some(parent),
        title: None,
        body_html: format!("<p>{prose}</p><pre><code>{code}</code></pre>"),
        score,
        tags: vec![],
    }
}

/// `n` words drawn from a pool of `pool` filler words.
pub fn filler(rng: &mut impl Rng, pool: usize, n: usize) -> String {
    (0..n)
        .map(|_| format!("filler{}", rng.gen_range(0..pool)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn engine(posts: &[RawPost]) -> Engine {
    let pre = Preprocessor::default();
    let set = build_threads(posts, &pre);
    Engine::build(
        set.threads,
        Vectors::default(),
        AntonymDictionary::bundled(),
        pre,
        Bm25Params::default(),
    )
    .expect("engine builds")
}

pub fn truth(entries: Vec<(u64, String, Vec<u64>)>) -> GroundTruth {
    let mut t = GroundTruth::default();
    for (query_id, query_text, rel) in entries {
        t.insert(TruthEntry {
            query_id,
            query_text,
            relevant_answer_ids: rel.into_iter().collect::<BTreeSet<_>>(),
        })
        .expect("valid truth entry");
    }
    t
}

pub fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) {
    let mut f = fs::File::create(path).unwrap();
    for r in rows {
        serde_json::to_writer(&mut f, r).unwrap();
        f.write_all(b"\n").unwrap();
    }
}

pub fn write_truth(path: &Path, truth: &GroundTruth) {
    let rows: Vec<&TruthEntry> = truth.entries.values().collect();
    write_jsonl(path, &rows);
}

/// A corpus plus the ground truth it was built for.
pub struct Synthetic {
    pub posts: Vec<RawPost>,
    pub truth: GroundTruth,
}

impl Synthetic {
    pub fn write(&self, dir: &Path) -> (PathBuf, PathBuf) {
        let corpus = dir.join("corpus.jsonl");
        let truth = dir.join("truth.jsonl");
        write_jsonl(&corpus, &self.posts);
        write_truth(&truth, &self.truth);
        (corpus, truth)
    }
}

fn query_words(q: usize) -> [String; 3] {
    [format!("alpha{q}"), format!("beta{q}"), format!("gamma{q}")]
}

/// `threads` threads, `queries` of which are planted: the planted thread
/// carries every query word in its title and body, the top social counters,
/// and one answer with every query word in prose and code. The remaining
/// threads are filler, a third of them mentioning one or two words of a
/// random query. Filler answers call uniquely named methods.
pub fn planted(threads: usize, queries: usize, seed: u64) -> Synthetic {
    let mut rng = rng(seed);
    let mut posts = Vec::new();
    let mut entries = Vec::new();
    let mut next = 1u64;
    let mut id = || {
        next += 1;
        next
    };
    for q in 0..queries {
        let [a, b, c] = query_words(q);
        let qid = id();
        posts.push(question(
            qid,
            &format!("{a} {b} {c} {}", filler(&mut rng, 400, 1)),
            &format!(
                "{} {a} {b} {c} {}",
                filler(&mut rng, 400, 4),
                filler(&mut rng, 400, 4)
            ),
            1000,
        ));
        let planted = id();
        posts.push(answer(
            planted,
            qid,
            &format!("{a} {b} {c} {}", filler(&mut rng, 400, 6)),
            &format!("{a}({b}, {c});"),
            1000,
        ));
        for _ in 0..5 {
            let aid = id();
            posts.push(answer(
                aid,
                qid,
                &filler(&mut rng, 400, 8),
                &format!("helper{aid}(x);"),
                rng.gen_range(1..5),
            ));
        }
        entries.push((q as u64 + 1, format!("{a} {b} {c}"), vec![planted]));
    }
    for _ in queries..threads {
        let mut title = filler(&mut rng, 400, 4);
        let mut body = filler(&mut rng, 400, 10);
        if rng.gen_bool(1.0 / 3.0) {
            let words = query_words(rng.gen_range(0..queries));
            let take = rng.gen_range(1..=2);
            let picked: Vec<&String> = words.choose_multiple(&mut rng, take).collect();
            title.push_str(&format!(" {}", picked[0]));
            if let Some(w) = picked.get(1) {
                body.push_str(&format!(" {w}"));
            }
        }
        let qid = id();
        posts.push(question(qid, &title, &body, rng.gen_range(1..100)));
        for _ in 0..rng.gen_range(1..=4) {
            let aid = id();
            posts.push(answer(
                aid,
                qid,
                &filler(&mut rng, 400, 8),
                &format!("helper{aid}(y);"),
                rng.gen_range(1..50),
            ));
        }
    }
    Synthetic {
        posts,
        truth: truth(entries),
    }
}

/// Per query, `per_query` threads share the query words and random filler;
/// one of them (the relevant one) is popular, the rest are not. All answers
/// of the popular thread are relevant.
pub fn social(queries: usize, per_query: usize, seed: u64) -> Synthetic {
    let mut rng = rng(seed);
    let mut posts = Vec::new();
    let mut entries = Vec::new();
    let mut next = 1u64;
    for q in 0..queries {
        let (a, b) = (format!("delta{q}"), format!("epsilon{q}"));
        let popular = rng.gen_range(0..per_query);
        let mut relevant = Vec::new();
        for t in 0..per_query {
            next += 1;
            let qid = next;
            let hot = t == popular;
            posts.push(question(
                qid,
                &format!("{a} {b} {}", filler(&mut rng, 60, 2)),
                &format!("{a} {}", filler(&mut rng, 60, 6)),
                if hot { 600 } else { rng.gen_range(1..4) },
            ));
            let n_answers = if hot { 4 } else { rng.gen_range(1..=2) };
            for _ in 0..n_answers {
                next += 1;
                posts.push(answer(
                    next,
                    qid,
                    &format!("{a} {b} {}", filler(&mut rng, 60, 5)),
                    &format!("m{}(z);", rng.gen_range(0..30)),
                    if hot {
                        rng.gen_range(100..300)
                    } else {
                        rng.gen_range(1..3)
                    },
                ));
                if hot {
                    relevant.push(next);
                }
            }
        }
        entries.push((q as u64 + 1, format!("{a} {b}"), relevant));
    }
    Synthetic {
        posts,
        truth: truth(entries),
    }
}

/// Noun pairs from the bundled lexicon: the query uses the first word, the
/// distractors discuss the second.
pub const ANTONYM_PAIRS: [(&str, &str); 10] = [
    ("compression", "decompression"),
    ("connection", "disconnection"),
    ("serialization", "deserialization"),
    ("encryption", "decryption"),
    ("client", "server"),
    ("request", "response"),
    ("reader", "writer"),
    ("input", "output"),
    ("prefix", "suffix"),
    ("uppercase", "lowercase"),
];

/// Per query one relevant, modestly scored thread about `topic word`, and
/// popular distractor threads that mention the query words alongside the
/// antonym.
pub fn antonym_distractors(distractors: usize, seed: u64) -> Synthetic {
    let mut rng = rng(seed);
    let mut posts = Vec::new();
    let mut entries = Vec::new();
    let mut next = 1u64;
    for (q, (word, opposite)) in ANTONYM_PAIRS.iter().enumerate() {
        let topic = format!("zeta{q}");
        next += 1;
        let qid = next;
        posts.push(question(
            qid,
            &format!("{topic} {word} {}", filler(&mut rng, 80, 2)),
            &format!("{topic} {word} {}", filler(&mut rng, 80, 6)),
            3,
        ));
        next += 1;
        posts.push(answer(
            next,
            qid,
            &format!("{topic} {word} {}", filler(&mut rng, 80, 5)),
            &format!("{topic}(v);"),
            2,
        ));
        entries.push((q as u64 + 1, format!("{topic} {word}"), vec![next]));
        for _ in 0..distractors {
            next += 1;
            let did = next;
            posts.push(question(
                did,
                &format!("{topic} {word} {opposite} {}", filler(&mut rng, 80, 1)),
                &format!("{topic} {word} {opposite} {}", filler(&mut rng, 80, 5)),
                400,
            ));
            for _ in 0..3 {
                next += 1;
                posts.push(answer(
                    next,
                    did,
                    &format!("{topic} {word} {opposite} {}", filler(&mut rng, 80, 4)),
                    &format!("{topic}(v);"),
                    rng.gen_range(50..150),
                ));
            }
        }
    }
    Synthetic {
        posts,
        truth: truth(entries),
    }
}

/// `threads` threads that all contain `common`, each with one to three
/// answers, for exercising the candidate funnel.
pub fn wide(threads: usize, common: &str, seed: u64) -> Vec<RawPost> {
    let mut rng = rng(seed);
    let mut posts = Vec::new();
    let mut next = 1u64;
    for _ in 0..threads {
        next += 1;
        let qid = next;
        posts.push(question(
            qid,
            &format!("{common} {}", filler(&mut rng, 200, 3)),
            &filler(&mut rng, 200, 8),
            rng.gen_range(1..300),
        ));
        for _ in 0..rng.gen_range(1..=3) {
            next += 1;
            posts.push(answer(
                next,
                qid,
                &format!("{} {common}", filler(&mut rng, 200, 6)),
                &format!("f{}(a);", rng.gen_range(0..20)),
                rng.gen_range(1..100),
            ));
        }
    }
    posts
}
