//! Style-synchrony simulation: text features, persona space, update policies,
//! prompt translation, replay evaluation and statistics.

pub mod error;
pub mod llmloop;
pub mod metrics;
pub mod persona;
pub mod policies;
pub mod promptgen;
pub mod replay;
pub mod stats;
pub mod synth;
pub mod textfeat;
pub mod vector;

pub use error::{Error, Result};
pub use vector::{RawStyleVector, StyleVector, DIM, FEATURE_NAMES};
