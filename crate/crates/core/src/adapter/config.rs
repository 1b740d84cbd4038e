//! Declarative adapter configuration (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    BetaMock, ChatTemplate, FixedMock, GenderBeta, ModelAdapter, OracleMock, PlantedMock, Query, SymbolTokenSets,
    TokenId, UniformMock,
};
use crate::curation::Gender;
use crate::hashing::config_hash;
use crate::nn::{Differentiable, ToyConfig, ToyVla};
use crate::{Error, Result};

/// Overrides the directory relative model paths are resolved against.
pub const MODEL_CACHE_ENV: &str = "VLBIAS_MODEL_CACHE";

/// Where a model gets image features from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    /// Derived from the image id and gender label.
    #[default]
    Synthetic,
    /// Read from the image record; missing features are a data error.
    Provided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanPair {
    pub male_mean: f64,
    pub female_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdapterKind {
    Fixed {
        letters: BTreeMap<String, f64>,
        #[serde(default)]
        words: BTreeMap<String, f64>,
    },
    Uniform {
        vocab_size: usize,
        variants: usize,
    },
    Beta {
        male_mean: f64,
        female_mean: f64,
        sd: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        symbol_mass: f64,
        #[serde(default)]
        overrides: BTreeMap<String, MeanPair>,
    },
    Planted {
        delta: f64,
        planted: BTreeMap<String, Gender>,
    },
    Oracle {
        #[serde(default)]
        anti: bool,
    },
    Toy {
        #[serde(default)]
        checkpoint: Option<String>,
        #[serde(default)]
        init: Option<ToyConfig>,
        #[serde(default)]
        features: FeatureSource,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterConfig {
    pub model_id: String,
    /// Model family, used to average gaps across related models.
    #[serde(default)]
    pub series: Option<String>,
    #[serde(default)]
    pub max_in_flight: Option<usize>,
    #[serde(default)]
    pub device: Option<String>,
    /// Builtin template name or path to a descriptor file.
    #[serde(default)]
    pub chat_template: Option<String>,
    pub model: AdapterKind,
}

/// Resolve a model path: absolute paths and paths that exist are used as
/// given; anything else is looked up under `$VLBIAS_MODEL_CACHE`.
pub fn resolve_model_path(path: &str) -> PathBuf {
    let p = Path::new(path);
    if p.is_absolute() || p.exists() {
        return p.to_path_buf();
    }
    match std::env::var_os(MODEL_CACHE_ENV) {
        Some(root) => Path::new(&root).join(p),
        None => p.to_path_buf(),
    }
}

struct Configured {
    inner: Box<dyn ModelAdapter>,
    model_id: String,
    max_in_flight: Option<usize>,
}

impl ModelAdapter for Configured {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        self.inner.symbol_tokens()
    }
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId> {
        self.inner.answer_tokens(answer)
    }
    fn next_token_distribution(&self, query: &Query<'_>) -> Result<Vec<f64>> {
        self.inner.next_token_distribution(query)
    }
    fn max_in_flight(&self) -> usize {
        self.max_in_flight.unwrap_or_else(|| self.inner.max_in_flight()).max(1)
    }
    fn token_policy(&self) -> String {
        self.inner.token_policy()
    }
    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        self.inner.as_differentiable()
    }
    fn as_differentiable_mut(&mut self) -> Option<&mut dyn Differentiable> {
        self.inner.as_differentiable_mut()
    }
}

impl AdapterConfig {
    pub fn from_toml(text: &str) -> Result<AdapterConfig> {
        toml::from_str(text).map_err(|e| Error::Config(format!("adapter config: {e}")))
    }

    pub fn load(path: &Path) -> Result<AdapterConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read adapter config {}: {e}", path.display())))?;
        AdapterConfig::from_toml(&text)
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }

    /// Load or initialise the toy model named by a `toy` config.
    pub fn build_toy(&self) -> Result<ToyVla> {
        let AdapterKind::Toy { checkpoint, init, features } = &self.model else {
            return Err(Error::Capability(format!("model {} is not a trainable toy model", self.model_id)));
        };
        let mut model = match (checkpoint, init) {
            (Some(path), _) => {
                let resolved = resolve_model_path(path);
                ToyVla::load(&resolved)
                    .map_err(|e| Error::Config(format!("cannot load checkpoint {}: {e}", resolved.display())))?
            }
            (None, Some(cfg)) => ToyVla::new(&self.model_id, cfg.clone())?,
            (None, None) => ToyVla::new(&self.model_id, ToyConfig::default())?,
        };
        model.model_id = self.model_id.clone();
        model.features = *features;
        if let Some(t) = &self.chat_template {
            model.chat_template = ChatTemplate::resolve(t)?;
        }
        Ok(model)
    }

    pub fn build(&self) -> Result<Box<dyn ModelAdapter>> {
        let id = self.model_id.as_str();
        let inner: Box<dyn ModelAdapter> = match &self.model {
            AdapterKind::Fixed { letters, words } => {
                let mut ls = Vec::new();
                for (k, p) in letters {
                    let mut chars = k.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) => ls.push((c, *p)),
                        _ => return Err(Error::Config(format!("fixed mock letter key '{k}' must be one character"))),
                    }
                }
                let ws: Vec<(&str, f64)> = words.iter().map(|(w, p)| (w.as_str(), *p)).collect();
                Box::new(FixedMock::new(id, &ls, &ws)?)
            }
            AdapterKind::Uniform { vocab_size, variants } => Box::new(UniformMock::new(*vocab_size, *variants)?),
            AdapterKind::Beta { male_mean, female_mean, sd, seed, symbol_mass, overrides } => {
                let mut m = BetaMock::new(id, GenderBeta::from_moments(*male_mean, *female_mean, *sd)?, *seed)?
                    .with_symbol_mass(*symbol_mass);
                for (attr, pair) in overrides {
                    m = m.with_override(attr, GenderBeta::from_moments(pair.male_mean, pair.female_mean, *sd)?);
                }
                Box::new(m)
            }
            AdapterKind::Planted { delta, planted } => Box::new(PlantedMock::new(id, planted.clone(), *delta)?),
            AdapterKind::Oracle { anti } => Box::new(OracleMock::new(*anti)?),
            AdapterKind::Toy { .. } => Box::new(self.build_toy()?),
        };
        Ok(Box::new(Configured { inner, model_id: self.model_id.clone(), max_in_flight: self.max_in_flight }))
    }
}
