//! Document-level event extraction.
//!
//! Arguments are extracted by generating a filled-in event template with a
//! copy-restricted encoder-decoder ([`arggen`]); triggers can be found
//! zero-shot from a handful of keywords per type with a projection-based CRF
//! tagger ([`tapkey`]). [`metrics`] scores both under head, coreference,
//! informative-mention and span matching.

pub mod arggen;
pub mod corpus;
pub mod error;
pub mod jsonl;
pub mod metrics;
pub mod numeric;
pub mod ontology;
pub mod pipeline;
pub mod span;
pub mod splits;
pub mod synth;
pub mod tapkey;
pub mod template;

pub use error::{Error, Result};
pub use span::Span;
