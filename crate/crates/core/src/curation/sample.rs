use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::record::{Gender, ImageRecord, Source};
use super::CurationConfig;
use crate::hashing::fnv_parts;
use crate::{Error, Result};

/// An ethnicity cell that could not supply its full quota.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub dataset: Source,
    pub gender: Gender,
    pub ethnicity: Option<String>,
    pub requested: usize,
    pub available: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub dataset: Source,
    pub gender: Gender,
    pub ethnicity: Option<String>,
    pub count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleReport {
    pub cells: Vec<CellCount>,
    pub shortfalls: Vec<Shortfall>,
}

#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub records: Vec<ImageRecord>,
    pub report: SampleReport,
}

/// Order candidates of one cell: highest-resolution crops first for bbox
/// datasets (ties by id), a seeded shuffle otherwise.
fn order_cell(mut cell: Vec<ImageRecord>, dataset: Source, seed: u64, salt: &[&str]) -> Vec<ImageRecord> {
    cell.sort_by(|a, b| a.id.cmp(&b.id));
    if dataset.uses_bbox() {
        cell.sort_by(|a, b| b.pixel_area().cmp(&a.pixel_area()).then_with(|| a.id.cmp(&b.id)));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv_parts(salt));
        cell.shuffle(&mut rng);
    }
    cell
}

/// Draw a gender-balanced, ethnicity-balanced sample of `per_dataset_count`
/// images from every dataset present in `records`.
///
/// Ethnicity quotas split each gender's half evenly over the dataset's
/// ethnicity labels (remainders go to the alphabetically first cells). A cell
/// that runs short is reported and the deficit is filled from the remaining
/// images of the same gender. Running out of images of one gender is an error.
pub fn balanced_sample(records: &[ImageRecord], config: &CurationConfig, seed: u64) -> Result<SampleOutcome> {
    config.validate()?;
    let mut ids = HashSet::new();
    for r in records {
        if !ids.insert(r.id.as_str()) {
            return Err(Error::Data(format!("duplicate image id '{}'", r.id)));
        }
    }
    let per_gender = config.per_dataset_count / 2;
    let datasets: BTreeSet<Source> = records.iter().map(|r| r.source).collect();

    let mut selected = Vec::new();
    let mut report = SampleReport::default();
    for dataset in datasets {
        let in_dataset: Vec<&ImageRecord> = records.iter().filter(|r| r.source == dataset).collect();
        let cells: BTreeSet<Option<String>> = in_dataset.iter().map(|r| r.ethnicity.clone()).collect();
        for gender in [Gender::Male, Gender::Female] {
            let pool: Vec<&ImageRecord> = in_dataset.iter().copied().filter(|r| r.gender == gender).collect();
            if pool.len() < per_gender {
                return Err(Error::PoolExhausted {
                    dataset: dataset.to_string(),
                    gender: gender.to_string(),
                    requested: per_gender,
                    available: pool.len(),
                });
            }
            let k = cells.len();
            let base = per_gender / k;
            let remainder = per_gender % k;
            let mut taken = Vec::with_capacity(per_gender);
            let mut leftovers = Vec::new();
            for (ci, cell) in cells.iter().enumerate() {
                let quota = base + usize::from(ci < remainder);
                let members: Vec<ImageRecord> = pool.iter().filter(|r| &r.ethnicity == cell).map(|r| (*r).clone()).collect();
                let cell_label = cell.as_deref().unwrap_or("");
                let ordered = order_cell(members, dataset, seed, &[dataset.as_str(), gender.as_str(), cell_label]);
                if ordered.len() < quota {
                    log::warn!(
                        "{dataset}/{gender}/{cell_label}: only {} of {quota} images available, filling from other cells",
                        ordered.len()
                    );
                    report.shortfalls.push(Shortfall {
                        dataset,
                        gender,
                        ethnicity: cell.clone(),
                        requested: quota,
                        available: ordered.len(),
                    });
                }
                let mut it = ordered.into_iter();
                taken.extend(it.by_ref().take(quota));
                leftovers.extend(it);
            }
            if taken.len() < per_gender {
                let fill = order_cell(leftovers, dataset, seed, &[dataset.as_str(), gender.as_str(), "\u{0}fill"]);
                let need = per_gender - taken.len();
                taken.extend(fill.into_iter().take(need));
            }
            debug_assert_eq!(taken.len(), per_gender);
            let mut counts: BTreeMap<Option<String>, usize> = BTreeMap::new();
            for r in &taken {
                *counts.entry(r.ethnicity.clone()).or_default() += 1;
            }
            for (ethnicity, count) in counts {
                report.cells.push(CellCount { dataset, gender, ethnicity, count });
            }
            selected.extend(taken);
        }
    }
    selected.sort_by(|a, b| a.source.cmp(&b.source).then_with(|| a.id.cmp(&b.id)));
    Ok(SampleOutcome { records: selected, report })
}
