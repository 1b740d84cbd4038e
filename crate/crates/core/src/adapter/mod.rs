//! Uniform access to vision-language assistants.
//!
//! A [`ModelAdapter`] returns the full next-token distribution for an
//! (image, prompt) pair. Everything else here (option probabilities,
//! calibration, probes, the evaluation harness) is computed from that
//! distribution and the adapter's token sets.

mod chat;
mod config;
mod harness;
mod log;
mod mock;
mod query;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::curation::{Gender, ImageRecord, Source};
use crate::nn::Differentiable;
use crate::prompts::PromptInstance;
use crate::{Error, Result};

pub use chat::ChatTemplate;
pub use config::{resolve_model_path, AdapterConfig, AdapterKind, FeatureSource, MODEL_CACHE_ENV};
pub use harness::{evaluate_pairs, parallel_map, EvalOptions, EvalSummary};
pub use log::{read_response_log, LogHeader, ResponseLog, ResponseLogWriter};
pub use mock::{BetaMock, FixedMock, FnMock, GenderBeta, MockVocab, OracleMock, PlantedMock, UniformMock};
pub use query::{
    calibration_mass, letter_probabilities, query_options, run_probe, unsure_ratio, OptionResponse, Probe, ProbeOutcome,
};

pub type TokenId = u32;

/// Image as seen by an adapter. Mocks may read the labels; real models only
/// the features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInput {
    pub id: String,
    #[serde(default)]
    pub gender: Option<Gender>,
    #[serde(default)]
    pub source: Option<Source>,
    /// Ground-truth label for probes other than gender (e.g. an occupation).
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub features: Option<Vec<f64>>,
}

impl ImageInput {
    pub fn from_record(r: &ImageRecord) -> ImageInput {
        ImageInput { id: r.id.clone(), gender: Some(r.gender), source: Some(r.source), label: None, features: None }
    }

    pub fn with_features(mut self, features: Vec<f64>) -> ImageInput {
        self.features = Some(features);
        self
    }
}

/// One request to a model.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub image: &'a ImageInput,
    pub text: &'a str,
    /// Structured prompt, when the text came from the prompt catalog.
    pub prompt: Option<&'a PromptInstance>,
}

/// Token ids that count as each option letter (bare and whitespace-prefixed
/// variants). Sets are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTokenSets(BTreeMap<char, Vec<TokenId>>);

impl SymbolTokenSets {
    pub fn new(sets: BTreeMap<char, Vec<TokenId>>) -> Result<SymbolTokenSets> {
        let mut seen = BTreeSet::new();
        for (letter, ids) in &sets {
            if ids.is_empty() {
                return Err(Error::Config(format!("empty token set for symbol {letter}")));
            }
            for id in ids {
                if !seen.insert(*id) {
                    return Err(Error::Config(format!("token {id} assigned to more than one symbol")));
                }
            }
        }
        Ok(SymbolTokenSets(sets))
    }

    pub fn tokens(&self, letter: char) -> Result<&[TokenId]> {
        self.0
            .get(&letter)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Capability(format!("adapter has no token set for symbol {letter}")))
    }

    pub fn letters(&self) -> impl Iterator<Item = char> + '_ {
        self.0.keys().copied()
    }
}

/// A locally runnable assistant (or a mock) that exposes first-token probabilities.
pub trait ModelAdapter: Send + Sync {
    fn model_id(&self) -> &str;

    fn vocab_size(&self) -> usize;

    fn symbol_tokens(&self) -> &SymbolTokenSets;

    /// Tokens that start the answer text `answer` (case and leading-space variants).
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId>;

    /// Probability of every vocabulary token as the first generated token.
    fn next_token_distribution(&self, query: &Query<'_>) -> Result<Vec<f64>>;

    /// Maximum number of concurrent requests the harness may issue.
    fn max_in_flight(&self) -> usize {
        1
    }

    /// How symbol probabilities are read off the distribution; logged per run.
    fn token_policy(&self) -> String {
        "sum over bare and whitespace-prefixed symbol tokens".to_string()
    }

    /// Gradient and parameter access, for adapters that support debiasing.
    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        None
    }

    fn as_differentiable_mut(&mut self) -> Option<&mut dyn Differentiable> {
        None
    }
}

impl<T: ModelAdapter + ?Sized> ModelAdapter for Box<T> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        (**self).symbol_tokens()
    }
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId> {
        (**self).answer_tokens(answer)
    }
    fn next_token_distribution(&self, query: &Query<'_>) -> Result<Vec<f64>> {
        (**self).next_token_distribution(query)
    }
    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
    fn token_policy(&self) -> String {
        (**self).token_policy()
    }
    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        (**self).as_differentiable()
    }
    fn as_differentiable_mut(&mut self) -> Option<&mut dyn Differentiable> {
        (**self).as_differentiable_mut()
    }
}
