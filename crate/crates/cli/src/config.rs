use std::path::Path;

use serde::{Deserialize, Serialize};
use vlbias::bias::BiasConfig;
use vlbias::curation::CurationConfig;
use vlbias::debias::DebiasConfig;
use vlbias::prompts::VariationConfig;

use crate::error::{read_input, CliError, CliResult, ExitClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSettings {
    pub groups: Vec<String>,
    /// "train", "test" or "both".
    pub split: String,
    /// "all", "train" or "test" half of each catalog.
    pub attributes: String,
    pub variation: VariationConfig,
}

impl Default for PromptSettings {
    fn default() -> Self {
        PromptSettings {
            groups: vec!["traits".into(), "skills".into(), "occupations".into()],
            split: "test".into(),
            attributes: "all".into(),
            variation: VariationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PipelineConfig {
    pub curation: CurationConfig,
    pub prompts: PromptSettings,
    pub bias: BiasConfig,
    /// Raw `[debias]` table, merged over method defaults once the method is known.
    pub debias: Option<toml::Table>,
}

fn section<T: for<'de> Deserialize<'de> + Default>(table: &toml::Table, key: &str) -> CliResult<T> {
    match table.get(key) {
        None => Ok(T::default()),
        Some(v) => v.clone().try_into().map_err(|e| CliError::config(format!("[{key}]: {e}"))),
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> CliResult<PipelineConfig> {
        let table: toml::Table = toml::from_str(text).map_err(|e| CliError::config(format!("pipeline config: {e}")))?;
        if let Some(k) = table.keys().find(|k| !["curation", "prompts", "bias", "debias"].contains(&k.as_str())) {
            return Err(CliError::config(format!("unknown config section [{k}]")));
        }
        let debias = match table.get("debias") {
            None => None,
            Some(toml::Value::Table(t)) => Some(t.clone()),
            Some(_) => return Err(CliError::config("[debias] must be a table")),
        };
        Ok(PipelineConfig {
            curation: section(&table, "curation")?,
            prompts: section(&table, "prompts")?,
            bias: section(&table, "bias")?,
            debias,
        })
    }

    pub fn load(path: Option<&Path>) -> CliResult<PipelineConfig> {
        match path {
            None => Ok(PipelineConfig::default()),
            Some(p) => PipelineConfig::from_toml(&read_input(p, ExitClass::Config)?),
        }
    }

    /// The `[debias]` section with `method` replaced when given.
    pub fn debias_config(&self, method: Option<&str>) -> CliResult<DebiasConfig> {
        let mut table = self.debias.clone().unwrap_or_default();
        if let Some(m) = method {
            table.insert("method".into(), toml::Value::String(m.into()));
        }
        if !table.contains_key("method") {
            return Err(CliError::config("no debiasing method: pass --method or set [debias].method"));
        }
        let text = toml::to_string(&table).map_err(|e| CliError::config(format!("[debias]: {e}")))?;
        Ok(DebiasConfig::from_toml(&text)?)
    }
}
