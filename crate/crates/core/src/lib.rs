//! Gender-bias evaluation and mitigation for vision-language assistants.
//!
//! The crate is organised along the evaluation pipeline:
//!
//! - [`prompts`]: attribute catalogs, prompt variations and byte-exact rendering
//! - [`curation`]: image manifest filtering, judge scoring, balanced sampling, Cohen's kappa
//! - [`adapter`]: the model abstraction, option-probability extraction, mocks and probes
//! - [`stats`] / [`bias`]: two-sample tests, correlations and per-attribute bias statistics
//! - [`nn`]: a small reverse-mode autodiff tape and a toy transformer assistant
//! - [`debias`]: equalization-loss fine-tuning, LoRA, soft prompts, pruning, prompt engineering

pub mod adapter;
pub mod bias;
pub mod curation;
pub mod debias;
pub mod error;
pub mod hashing;
pub mod nn;
pub mod prompts;
pub mod stats;

pub use error::{Error, Result};
