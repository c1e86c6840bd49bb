//! Command-line front end: merge antonym lists, build an index, search it,
//! and evaluate baselines against a ground truth.
//!
//! Exit status: 0 on success, 1 on a data or fatal error, 2 on a usage error
//! (bad flags, unknown baseline, missing input file).

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;

use crowdrank::antonym::{merge_lists, AntonymDictionary};
use crowdrank::evaluation::{self, GridRow, GroundTruth, Rankings, DEFAULT_K};
use crowdrank::{
    baseline_names, configure_ablation, BuildOptions, Engine, Error, TagFilter, WeightConfig,
};

const FORMATS: &str = "\
File formats:
  corpus         JSONL, one post per line:
                 {id, post_kind: question|answer, parent_id?, title?, body_html, score, tags?}
  antonym list   TSV: word<TAB>pos flags (n, v, nv or empty)<TAB>comma-separated antonyms
  vectors        text: header `count dim`, then `key v1 ... vdim` per line
  stopwords      one word per line, `#` starts a comment
  weight config  TOML, flat keys (see `WeightConfig` docs)
  ground truth   JSONL: {query_id, query_text, relevant_answer_ids: [...]}
  queries        JSONL: {query_id, query_text}
  results        JSONL: {query_id, ranked_answer_ids: [...]}
  report         CSV: baseline,Hit,MRR,MAP,MR";

#[derive(Parser)]
#[command(name = "crowdrank", version, about = "Thread-then-answer retrieval over Q&A dumps", after_help = FORMATS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Merge antonym lists into one symmetric dictionary.
    #[command(after_help = FORMATS)]
    MergeAntonyms {
        /// Antonym lists to merge.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output dictionary path.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Build the thread index and supporting artifacts from a corpus dump.
    #[command(after_help = FORMATS)]
    BuildIndex(BuildArgs),
    /// Return the top answers for a natural-language query.
    #[command(after_help = FORMATS)]
    Search(SearchArgs),
    /// Run baselines over a ground truth and write a metrics report.
    #[command(after_help = FORMATS)]
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Corpus dump (JSONL).
    corpus: PathBuf,
    /// Directory to write artifacts into.
    out_dir: PathBuf,
    /// Stopword list replacing the bundled one.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Pre-trained word vectors; without them a seeded hash embedder is used.
    #[arg(long)]
    word_vectors: Option<PathBuf>,
    /// Pre-computed title vectors keyed by question id.
    #[arg(long, requires = "word_vectors")]
    sentence_vectors: Option<PathBuf>,
    /// Dimension of the fallback embedder.
    #[arg(long, default_value_t = crowdrank::embeddings::DEFAULT_DIM)]
    dim: usize,
    /// Seed of the fallback embedder.
    #[arg(long, default_value_t = crowdrank::embeddings::DEFAULT_SEED)]
    seed: u64,
    /// Keep questions with a tag containing this substring.
    #[arg(long, default_value = "java")]
    tag: String,
    /// Drop questions with a tag containing this substring (repeatable).
    #[arg(long = "exclude-tag", default_values_t = vec!["javascript".to_string()])]
    exclude_tags: Vec<String>,
    /// Accept every question regardless of tags.
    #[arg(long, conflicts_with_all = ["tag", "exclude_tags"])]
    all_tags: bool,
}

#[derive(Args)]
struct EngineArgs {
    /// Index directory written by `build-index`.
    #[arg(long)]
    index: PathBuf,
    /// Antonym dictionary; defaults to the bundled one.
    #[arg(long)]
    antonyms: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Args)]
struct SearchArgs {
    /// The query text.
    query: String,
    #[command(flatten)]
    engine: EngineArgs,
    /// Named pipeline variant.
    #[arg(long, default_value = "CRAR", conflicts_with = "config")]
    baseline: String,
    /// Weight configuration (TOML) instead of a named baseline.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of answers to return (defaults to the configuration's value).
    #[arg(short = 'n', long)]
    top: Option<usize>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutputFormat,
    /// Include per-candidate feature values.
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground truth (JSONL).
    #[arg(long)]
    truth: PathBuf,
    /// Query texts overriding those in the ground truth (JSONL).
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Index directory; required unless `--results` is given.
    #[arg(long, required_unless_present = "results")]
    index: Option<PathBuf>,
    #[arg(long)]
    antonyms: Option<PathBuf>,
    /// Baselines to run (repeatable, or `all`).
    #[arg(long = "baseline", default_values_t = vec!["CRAR".to_string()])]
    baselines: Vec<String>,
    /// Cutoff for every metric.
    #[arg(short = 'k', long, default_value_t = DEFAULT_K)]
    k: usize,
    /// Score an existing results file instead of running baselines.
    #[arg(long, conflicts_with = "index")]
    results: Option<PathBuf>,
    /// Directory to write one results file per baseline.
    #[arg(long)]
    results_dir: Option<PathBuf>,
    /// CSV report path; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure tagged with the exit status it maps to.
enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownBaseline { .. } => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::MergeAntonyms { inputs, out } => merge_antonyms(&inputs, &out),
        Command::BuildIndex(args) => build_index(args),
        Command::Search(args) => search(args),
        Command::Evaluate(args) => evaluate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn require_file(path: &Path) -> CmdResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("no such file: {}", path.display())))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn merge_antonyms(inputs: &[PathBuf], out: &Path) -> CmdResult {
    for p in inputs {
        require_file(p)?;
    }
    let merged = merge_lists(inputs)?;
    if merged.warning_count > 0 {
        warn!("skipped {} malformed lines", merged.warning_count);
    }
    if merged.dictionary.is_empty() {
        warn!("merged dictionary is empty");
    }
    let mut w = create(out)?;
    merged.dictionary.write_to(&mut w)?;
    w.flush()?;
    println!("entries: {}", merged.dictionary.len());
    Ok(())
}

fn build_index(args: BuildArgs) -> CmdResult {
    require_file(&args.corpus)?;
    for p in [&args.stopwords, &args.word_vectors, &args.sentence_vectors]
        .into_iter()
        .flatten()
    {
        require_file(p)?;
    }
    let tag_filter = if args.all_tags {
        TagFilter::any()
    } else {
        TagFilter {
            include: args.tag,
            exclude: args.exclude_tags,
        }
    };
    let opts = BuildOptions {
        tag_filter,
        stopwords: args.stopwords,
        word_vectors: args.word_vectors,
        sentence_vectors: args.sentence_vectors,
        dim: args.dim,
        seed: args.seed,
        ..BuildOptions::default()
    };
    let (_, summary) = crowdrank::build_artifacts(&args.corpus, &args.out_dir, &opts)?;
    if summary.thread_count == 0 {
        warn!("index is empty");
    }
    println!("posts loaded:   {}", summary.posts_loaded);
    println!("skipped lines:  {}", summary.skipped_lines);
    println!("orphan answers: {}", summary.orphan_answers);
    println!("threads:        {}", summary.thread_count);
    println!("answers:        {}", summary.answer_count);
    println!("vocabulary:     {}", summary.vocab_size);
    println!("seed:           {}", summary.seed);
    Ok(())
}

fn open_engine(index: &Path, antonyms: Option<&Path>) -> Result<Engine, Failure> {
    if !index.join("manifest.json").is_file() {
        return Err(Failure::Data(format!(
            "{} is not an index directory",
            index.display()
        )));
    }
    let dict = match antonyms {
        Some(p) => {
            require_file(p)?;
            AntonymDictionary::load(p)?
        }
        None => AntonymDictionary::bundled(),
    };
    Ok(Engine::open(index, dict)?)
}

fn search(args: SearchArgs) -> CmdResult {
    let config = match &args.config {
        Some(p) => {
            require_file(p)?;
            WeightConfig::load(p).map_err(|e| Failure::Usage(e.to_string()))?
        }
        None => configure_ablation(&args.baseline)?,
    };
    let engine = open_engine(&args.engine.index, args.engine.antonyms.as_deref())?;
    let n = args.top.unwrap_or(config.final_n);
    let result = engine.search(&args.query, &config, n)?;
    if let Some(note) = &result.diagnostics.note {
        warn!("{note}");
    }
    let seed = engine.embedding_config().seed;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match args.format {
        OutputFormat::Json => {
            for (rank, hit) in result.hits.iter().enumerate() {
                let mut row = serde_json::json!({
                    "rank": rank + 1,
                    "answer_id": hit.answer_id,
                    "thread_id": hit.thread_id,
                    "score": hit.score,
                    "title": hit.parent_title,
                    "answer": hit.answer_body,
                    "seed": seed,
                });
                if args.explain {
                    if let Some(d) = result
                        .diagnostics
                        .answers
                        .iter()
                        .find(|d| d.id == hit.answer_id)
                    {
                        row["features"] = serde_json::to_value(&d.features).map_err(Error::from)?;
                    }
                }
                writeln!(out, "{row}")?;
            }
            if args.explain {
                let diag =
                    serde_json::json!({ "query": result.query, "diagnostics": result.diagnostics });
                writeln!(out, "{diag}")?;
            }
        }
        OutputFormat::Text => {
            writeln!(
                out,
                "query: {}  [{}]  seed {seed}",
                args.query,
                result.query.bag.join(" ")
            )?;
            for (rank, hit) in result.hits.iter().enumerate() {
                writeln!(
                    out,
                    "{:>3}. answer {} (thread {})  score {:.4}\n     {}\n     {}",
                    rank + 1,
                    hit.answer_id,
                    hit.thread_id,
                    hit.score,
                    hit.parent_title,
                    snippet(&hit.answer_body, 160)
                )?;
                if args.explain {
                    if let Some(d) = result
                        .diagnostics
                        .answers
                        .iter()
                        .find(|d| d.id == hit.answer_id)
                    {
                        for (f, v) in &d.features.normalized {
                            writeln!(out, "       {:<22} {v:.4}", f.name())?;
                        }
                    }
                }
            }
            if args.explain {
                let c = &result.diagnostics.counts;
                writeln!(
                    out,
                    "funnel: bm25 {} -> filtered {} -> stage1 {} -> stage2 {} -> answers {} -> candidates {} -> filtered {} -> returned {}",
                    c.bm25_threads,
                    c.after_thread_filter,
                    c.stage1,
                    c.stage2,
                    c.answer_pool,
                    c.answer_candidates,
                    c.after_answer_filter,
                    c.returned
                )?;
            }
        }
    }
    Ok(())
}

fn snippet(text: &str, max: usize) -> String {
    let flat = text.split_whitespace().collect::<Vec<_>>().join(" ");
    match flat.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &flat[..i]),
        None => flat,
    }
}

#[derive(serde::Deserialize)]
struct QueryLine {
    query_id: u64,
    query_text: String,
}

fn override_queries(truth: &mut GroundTruth, path: &Path) -> CmdResult {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let q: QueryLine = serde_json::from_str(line)
            .map_err(|e| Failure::Data(format!("{}:{}: {e}", path.display(), i + 1)))?;
        match truth.entries.get_mut(&q.query_id) {
            Some(entry) => entry.query_text = q.query_text,
            None => return Err(Error::UnknownQuery(q.query_id).into()),
        }
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> CmdResult {
    require_file(&args.truth)?;
    if args.k == 0 {
        return Err(Failure::Usage("K must be positive".into()));
    }
    let mut truth = GroundTruth::load(&args.truth)?;
    if let Some(q) = &args.queries {
        require_file(q)?;
        override_queries(&mut truth, q)?;
    }

    let rows: Vec<GridRow> = if let Some(results) = &args.results {
        require_file(results)?;
        let rankings = evaluation::read_results(results)?;
        let report = evaluation::evaluate(&rankings, &truth, args.k)?;
        vec![GridRow {
            baseline: results
                .file_stem()
                .map_or("results".into(), |s| s.to_string_lossy().into_owned()),
            report,
            rankings,
        }]
    } else {
        let baselines: Vec<String> = if args.baselines.iter().any(|b| b == "all") {
            baseline_names()
        } else {
            args.baselines.clone()
        };
        for b in &baselines {
            configure_ablation(b)?;
        }
        let index = args.index.as_deref().expect("clap enforces --index");
        let engine = open_engine(index, args.antonyms.as_deref())?;
        evaluation::run_ablation_grid(&engine, &baselines, &truth, args.k)?
    };

    if let Some(dir) = &args.results_dir {
        fs::create_dir_all(dir)?;
        for row in &rows {
            write_rankings(
                &dir.join(format!("{}.jsonl", file_name(&row.baseline))),
                &row.rankings,
            )?;
        }
    }
    match &args.out {
        Some(path) => {
            let mut w = create(path)?;
            evaluation::write_report_csv(&mut w, &rows)?;
            w.flush()?;
        }
        None => evaluation::write_report_csv(io::stdout().lock(), &rows)?,
    }
    Ok(())
}

fn write_rankings(path: &Path, rankings: &Rankings) -> CmdResult {
    let mut w = create(path)?;
    evaluation::write_results(&mut w, rankings)?;
    w.flush()?;
    Ok(())
}

/// Baseline names contain spaces and `|`; keep file names portable.
fn file_name(baseline: &str) -> String {
    baseline
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
