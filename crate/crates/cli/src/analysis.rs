use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vlbias::bias::{BiasStatistic, ModelBiasSummary, Pooling};
use vlbias::prompts::PromptGroup;
use vlbias::stats::TTestFlavor;

use crate::error::{read_input, CliError, CliResult, ExitClass};

/// Everything `analyze` learned about a set of models; input to `report` and `correlate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub run_id: String,
    pub alpha: f64,
    pub flavor: TTestFlavor,
    pub pooling: Pooling,
    pub models: Vec<ModelAnalysis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAnalysis {
    pub model_id: String,
    pub series: String,
    pub calibration_mass: f64,
    pub unsure_ratio: f64,
    pub summaries: Vec<ModelBiasSummary>,
    /// Keyed by `group/attribute`.
    pub discretized_gaps: BTreeMap<String, f64>,
}

impl ModelAnalysis {
    pub fn summary(&self, group: PromptGroup) -> Option<&ModelBiasSummary> {
        self.summaries.iter().find(|s| s.group == group)
    }
}

impl Analysis {
    /// Missing or unreadable analysis input is a configuration problem for the
    /// commands that consume it.
    pub fn load(path: &Path) -> CliResult<Analysis> {
        let text = read_input(path, ExitClass::Config)?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{} is not an analysis file: {e}", path.display())))
    }

    pub fn groups(&self) -> Vec<PromptGroup> {
        PromptGroup::ALL
            .into_iter()
            .filter(|g| self.models.iter().any(|m| m.summary(*g).is_some()))
            .collect()
    }

    /// Per-series statistics of one group, in model order.
    pub fn series_stats(&self, group: PromptGroup) -> Vec<(String, Vec<BiasStatistic>)> {
        self.models
            .iter()
            .filter_map(|m| m.summary(group).map(|s| (m.series.clone(), s.per_attribute.clone())))
            .collect()
    }
}
