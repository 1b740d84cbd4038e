use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::hashing::config_hash;
use crate::prompts::InstructionPosition;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    FullFt,
    LoraFt,
    PromptTune,
    Prune,
    PromptEngineer,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::FullFt => "full_ft",
            Method::LoraFt => "lora_ft",
            Method::PromptTune => "prompt_tune",
            Method::Prune => "prune",
            Method::PromptEngineer => "prompt_engineer",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s {
            "full_ft" => Ok(Method::FullFt),
            "lora_ft" => Ok(Method::LoraFt),
            "prompt_tune" => Ok(Method::PromptTune),
            "prune" => Ok(Method::Prune),
            "prompt_engineer" => Ok(Method::PromptEngineer),
            _ => Err(Error::Config(format!("unknown debiasing method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub loss_below: f64,
    pub consecutive: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoraConfig {
    pub rank: usize,
    pub alpha: f64,
    pub dropout: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PromptTuneConfig {
    pub num_virtual_tokens: usize,
    pub insert_after_bos: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide each score by its maximum over all units of the model.
    #[default]
    Max,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub ratio: f64,
    pub bias_samples: usize,
    pub perf_samples: usize,
    pub normalization: Normalization,
    pub reduction: Reduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineerConfig {
    pub instruction_id: u8,
    pub position: InstructionPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebiasConfig {
    pub method: Method,
    pub learning_rate: f64,
    pub max_steps: usize,
    pub batch_size: usize,
    pub early_stop: EarlyStop,
    pub lora: LoraConfig,
    pub prompt_tune: PromptTuneConfig,
    pub prune: PruneConfig,
    pub engineer: EngineerConfig,
    pub seed: u64,
    /// Abort when the loss stays above this multiple of the first loss ...
    pub divergence_factor: f64,
    /// ... for this many consecutive steps.
    pub divergence_window: usize,
}

impl DebiasConfig {
    pub fn defaults(method: Method) -> DebiasConfig {
        let (learning_rate, max_steps) = match method {
            Method::PromptTune => (1e-3, 10_000),
            _ => (1e-4, 20_000),
        };
        DebiasConfig {
            method,
            learning_rate,
            max_steps,
            batch_size: 1,
            early_stop: EarlyStop { loss_below: 0.05, consecutive: 10 },
            lora: LoraConfig { rank: 128, alpha: 128.0, dropout: 0.0 },
            prompt_tune: PromptTuneConfig { num_virtual_tokens: 20, insert_after_bos: true },
            prune: PruneConfig {
                ratio: 0.1,
                bias_samples: 512,
                perf_samples: 512,
                normalization: Normalization::Max,
                reduction: Reduction::Sum,
            },
            engineer: EngineerConfig { instruction_id: 3, position: InstructionPosition::Before },
            seed: 0,
            divergence_factor: 10.0,
            divergence_window: 100,
        }
    }

    /// Parse TOML; keys that are not given take the defaults of the method.
    pub fn from_toml(text: &str) -> Result<DebiasConfig> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("debias config: {e}")))?;
        let method: Method = user
            .get("method")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Config("debias config needs a 'method'".into()))?
            .parse()?;
        let mut base = toml::Table::try_from(DebiasConfig::defaults(method))
            .map_err(|e| Error::Config(format!("debias defaults: {e}")))?;
        merge(&mut base, user);
        let cfg: DebiasConfig =
            toml::Value::Table(base).try_into().map_err(|e| Error::Config(format!("debias config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.prune.ratio) {
            return Err(Error::Config(format!("prune ratio must be in [0, 1), got {}", self.prune.ratio)));
        }
        if !(1..=3).contains(&self.engineer.instruction_id) {
            return Err(Error::Config("instruction id must be 1, 2 or 3".into()));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

fn merge(base: &mut toml::Table, user: toml::Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
