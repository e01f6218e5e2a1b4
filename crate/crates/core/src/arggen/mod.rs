//! Argument extraction by filling event templates with an encoder-decoder.
//!
//! The decoder may only copy tokens from its input (plus a few reserved
//! symbols), candidates come from beam search, and an optional reranker adds
//! the likelihood of "<filler> is a <type> ." statements so that fillers of
//! the wrong entity type lose.

pub mod backend;
pub mod copy_lm;
pub mod decode;
pub mod extract;
pub mod mock;
pub mod rerank;
pub mod train;
pub mod vocab;

pub use backend::{GeneratorBackend, TrainableBackend};
pub use copy_lm::{CopyLm, CopyLmConfig};
pub use decode::{beam_search, constrained_step, copy_mask, greedy_decode, Candidate, DecodeConfig};
pub use extract::{extract_arguments, ArgumentPrediction, ExtractConfig, Extraction};
pub use rerank::{clarifications, rerank};
pub use vocab::{TokenId, Vocab};
