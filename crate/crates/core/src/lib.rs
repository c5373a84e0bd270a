//! Sentence-level prompt relevance scoring.
//!
//! Sentences and writing prompts are mapped to vectors by one of four
//! methods (TF-IDF, summed word embeddings, IDF-scaled embeddings and
//! learned per-word weights over frozen embeddings) and compared by cosine.
//! The [`trainer`] learns the per-word weights from plain text alone, and
//! [`eval`] measures how well each method identifies the prompt a sentence
//! was written for.

pub mod corpus;
pub mod embeddings;
mod error;
pub mod eval;
pub mod synthetic;
pub mod trainer;
pub mod vectorize;

pub use corpus::{LabeledDataset, Sample, SegmentedCorpus, Sentence, Token};
pub use embeddings::{EmbeddingTable, IdfTable, WeightTable};
pub use error::{Error, Result};
pub use eval::{EvalReport, ScoreMatrix};
pub use trainer::{TrainReport, Trainer, TrainerConfig};
pub use vectorize::{cosine, Method, SentenceVec};
