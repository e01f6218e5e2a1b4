//! Zero-shot trigger tagging seeded by keywords.
//!
//! Each event type is represented by a class vector averaged from contextual
//! embeddings of its keywords. A linear-chain CRF over IO tags scores tokens
//! against learned reference vectors inside a subspace chosen so that every
//! class vector lines up with its reference. Nothing trained is tied to a
//! particular class beyond its reference vector, so new types can be added
//! from keywords alone.

pub mod class_vector;
pub mod crf;
pub mod embed;
pub mod inflect;
pub mod label;
pub mod linalg;
pub mod model;
pub mod train;

pub use class_vector::{build_class_vector, ClassVector};
pub use embed::{ContextEmbedder, ContextEmbedderConfig, EmbeddingBackend};
pub use label::{predict_triggers, pseudo_label, TriggerPrediction};
pub use model::TapKeyModel;
pub use train::{Objective, TaggedSequence, TapKeyTrainConfig};
