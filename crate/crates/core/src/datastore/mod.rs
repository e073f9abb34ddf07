//! Parsing, validation and persistence of screening datasets.

mod corpus;
mod dataset;
mod embeddings;
mod qrels;
mod synthetic;
mod validate;

pub use corpus::{
    attach_pools, format_corpus, format_topics, parse_corpus, parse_pools, parse_topics, Corpus,
    DocumentRecord, Topic,
};
pub use dataset::{Dataset, DatasetPaths};
pub use embeddings::{EmbeddingSet, MAGIC};
pub use qrels::{format_qrels, parse_qrels, Qrels};
pub use synthetic::{embed_text, seeded_hash, synthetic_embeddings};
pub use validate::{validate_dataset, DocRef, ValidationReport};

/// Embedding-file key prefix for topic query vectors.
pub const TOPIC_PREFIX: &str = "topic:";

pub fn topic_key(topic_id: &str) -> String {
    format!("{TOPIC_PREFIX}{topic_id}")
}
