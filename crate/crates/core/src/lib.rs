//! Extractive summarization in two trained stages over frozen embeddings:
//! a sentence-ranking projection fit with a triplet softmax objective, and
//! a cluster-attention model that reconstructs sentence vectors and filters
//! the ranked list by each sentence's weight on the document's leading
//! cluster. Supporting pieces: deterministic text processing, exact ROUGE
//! scoring, extractive-oracle label generation, and batch pipeline commands
//! with plain-text file formats.

pub mod cluster;
pub mod embed;
pub mod error;
pub mod formats;
pub mod math;
mod matfile;
pub mod oracle;
pub mod pipeline;
pub mod rank;
pub mod rouge;
pub mod textproc;

pub use error::{Error, Result};
