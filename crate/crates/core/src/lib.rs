//! Two-stage retrieval of code answers from Stack Overflow-style Q&A dumps.
//!
//! Given a natural-language programming task, whole threads are ranked
//! first (BM25 candidates, then text features, then text plus social
//! features), and only the answers of the best threads are indexed and
//! ranked with their own features. See the crate `examples/` for one
//! runnable program per capability.

pub mod ablation;
pub mod antonym;
pub mod config;
pub mod corpus;
pub mod embeddings;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod index;
pub mod pipeline;

pub use ablation::{baseline_names, configure_ablation};
pub use antonym::{AntonymDictionary, AntonymQueryContext, PosMode};
pub use config::{AntonymTarget, WeightConfig};
pub use corpus::{Preprocessor, RawPost, TagFilter, TextMode, Thread};
pub use embeddings::{EmbeddingStore, IdfMap, Similarity};
pub use engine::{build_artifacts, BuildOptions, BuildSummary, Engine, Vectors};
pub use error::{Error, Result};
pub use evaluation::{evaluate, run_ablation_grid, GroundTruth, MetricsReport};
pub use features::{Feature, FeatureVector};
pub use index::{Bm25Params, InvertedIndex};
pub use pipeline::{AnswerHit, QueryContext, SearchResult};
