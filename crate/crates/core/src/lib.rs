//! Data tooling for robust character detection with named-entity recognition.
//!
//! The crate covers the whole pipeline around an NER model without being one:
//!
//! - [`corpus`]: CoNLL parsing/serialization and the IOB2 span codec.
//! - [`namegen`]: compositional name generation from part inventories.
//! - [`augment`]: mention-replacement augmentation (add, upsample-and-balance, replace).
//! - [`context`]: context windows around target sentences and prediction projection.
//! - [`metrics`]: span-exact scoring, multi-run confidence intervals, error-set algebra.
//! - [`heuristics`]: flagging suspected annotation errors and applying reviewed decisions.
//! - [`tagger`]: a small averaged-perceptron baseline tagger.
//!
//! Everything that draws random numbers goes through [`rng::SeededSampler`], so
//! outputs are reproducible from a seed regardless of thread count.

pub mod augment;
pub mod context;
pub mod corpus;
pub mod error;
pub mod heuristics;
pub mod jsonl;
pub mod label;
pub mod metrics;
pub mod namegen;
pub mod rng;
pub mod synth;
pub mod tagger;

pub use corpus::{Document, EntitySpan, Sentence, TagScheme, Token};
pub use error::{Error, Result};
pub use label::{EntityClass, NerLabel};
pub use rng::SeededSampler;
