//! Building the evaluation image set: ingestion, filtering, judge scoring,
//! balanced sampling and annotator agreement.

mod filter;
mod judge;
mod kappa;
mod record;
mod sample;

use serde::{Deserialize, Serialize};

pub use filter::{apply_occupation_filter, filter_eligible, is_minor, removal_curve, Diagnostic, FilterOutcome};
pub use judge::{score_all, score_occupation_content, JudgeOutcome};
pub use kappa::{cohens_kappa, kappa_curve, Agreement, Contingency};
pub use record::{read_jsonl_manifest, read_source_manifest, write_jsonl_manifest, BBox, Gender, ImageRecord, Source};
pub use sample::{balanced_sample, CellCount, SampleOutcome, SampleReport, Shortfall};

use crate::hashing::config_hash;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    /// Images drawn per source dataset, split evenly between genders.
    pub per_dataset_count: usize,
    /// Images whose judge score exceeds this are removed. 1.0 disables the filter.
    pub occupation_threshold: f64,
    pub drop_minors: bool,
    pub drop_phase_activity: bool,
    /// Relative margin added around bounding boxes before cropping.
    pub crop_padding: f64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            per_dataset_count: 1000,
            occupation_threshold: 0.25,
            drop_minors: true,
            drop_phase_activity: true,
            crop_padding: 0.0,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.occupation_threshold > 0.0 && self.occupation_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "occupation threshold must be in (0, 1], got {}",
                self.occupation_threshold
            )));
        }
        if self.per_dataset_count == 0 || !self.per_dataset_count.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "per-dataset count must be positive and even, got {}",
                self.per_dataset_count
            )));
        }
        if !(0.0..1.0).contains(&self.crop_padding) {
            return Err(Error::Config("crop padding must be in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}
