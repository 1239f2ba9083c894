//! Extreme multi-label classification as multi-answer extractive QA.
//!
//! A label hierarchy is cut into subtrees at a chosen level. Every labeled
//! document is paired with the comma-delimited name list of each subtree, and
//! the list entries matching the document's labels become the answers. The
//! resulting pairs are tagged word by word with an IO scheme, and predicted
//! tags are scored either by exact chunk boundaries or by whole categories.
//!
//! Pipeline stages exchange JSON Lines files; see [`cli`] for the commands.

pub mod cli;
pub mod corpus;
pub mod dataset;
pub mod jsonl;
pub mod metrics;
pub mod sampler;
pub mod tagging;
pub mod taxonomy;

use thiserror::Error;

pub use corpus::{ConceptCatalog, DocumentRecord};
pub use dataset::{build_samples, render_categories, reorder_categories, BuiltSample, CategoriesList, Segment};
pub use metrics::{evaluate_classification, evaluate_strict, extract_chunks, EvalReport, Mode};
pub use sampler::{draw_sample, sample_size, SamplePlan};
pub use tagging::{align_to_subtokens, tag_sample, word_tokenize, TagSequence, TaggedSample};
pub use taxonomy::{load_taxonomy, PartitionStats, Subtree, TaxonomyTree};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Taxonomy(#[from] taxonomy::TaxonomyError),
    #[error(transparent)]
    Corpus(#[from] corpus::CorpusError),
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Tagging(#[from] tagging::TaggingError),
    #[error(transparent)]
    Sampler(#[from] sampler::SamplerError),
    #[error(transparent)]
    Jsonl(#[from] jsonl::JsonlError),
    #[error("sample {sample_id}: {source}")]
    Metrics {
        sample_id: String,
        #[source]
        source: metrics::MetricsError,
    },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("prediction for unknown sample {0:?}")]
    UnknownSample(String),
    #[error("duplicate prediction for sample {0:?}")]
    DuplicatePrediction(String),
    #[error("{0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
