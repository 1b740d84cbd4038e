use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::adapter::OptionResponse;
use crate::curation::{Gender, ImageRecord, Source};
use crate::prompts::{AttributeQuery, OptionSemantic, PromptGroup, PromptInstance, Split};
use crate::{Error, Result};

/// Which responses are pooled into one distribution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pooling {
    /// `None` pools every dataset.
    pub datasets: Option<Vec<Source>>,
    /// `None` pools both prompt splits.
    pub split: Option<Split>,
}

impl Default for Pooling {
    fn default() -> Self {
        Pooling { datasets: None, split: Some(Split::Test) }
    }
}

impl Pooling {
    pub fn dataset(source: Source) -> Pooling {
        Pooling { datasets: Some(vec![source]), ..Pooling::default() }
    }

    fn admits(&self, source: Source, split: Split) -> bool {
        self.datasets.as_ref().is_none_or(|d| d.contains(&source)) && self.split.is_none_or(|s| s == split)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub gender: Gender,
    pub source: Source,
}

/// Join tables from image and prompt ids to the labels a log line needs.
#[derive(Debug, Clone, Default)]
pub struct EvalIndex {
    pub images: HashMap<String, ImageMeta>,
    pub prompts: HashMap<String, (AttributeQuery, Split)>,
}

impl EvalIndex {
    pub fn new(images: &[ImageRecord], prompts: &[PromptInstance]) -> EvalIndex {
        EvalIndex {
            images: images.iter().map(|r| (r.id.clone(), ImageMeta { gender: r.gender, source: r.source })).collect(),
            prompts: prompts.iter().map(|p| (p.prompt_id.clone(), (p.attribute.clone(), p.template.split))).collect(),
        }
    }

    fn join(&self, r: &OptionResponse) -> Result<(ImageMeta, &AttributeQuery, Split)> {
        let img = self
            .images
            .get(&r.image_id)
            .ok_or_else(|| Error::Join(format!("response for unknown image '{}'", r.image_id)))?;
        let (attr, split) = self
            .prompts
            .get(&r.prompt_id)
            .ok_or_else(|| Error::Join(format!("response for unknown prompt '{}'", r.prompt_id)))?;
        Ok((*img, attr, *split))
    }
}

/// p(yes) samples for one attribute, split by image gender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderSplitDistribution {
    pub attribute: AttributeQuery,
    pub model_id: String,
    pub samples_male: Vec<f64>,
    pub samples_female: Vec<f64>,
    pub pooling: Pooling,
}

impl GenderSplitDistribution {
    pub fn samples(&self, g: Gender) -> &[f64] {
        match g {
            Gender::Male => &self.samples_male,
            Gender::Female => &self.samples_female,
        }
    }
}

fn model_of(log: &[OptionResponse]) -> Result<String> {
    let first = log.first().map(|r| r.model_id.clone()).unwrap_or_default();
    if let Some(other) = log.iter().find(|r| r.model_id != first) {
        return Err(Error::Data(format!("log mixes models '{first}' and '{}'", other.model_id)));
    }
    Ok(first)
}

/// Distributions for every attribute present in the log. Every line must
/// join to a known image and prompt.
pub fn build_all_distributions(
    log: &[OptionResponse],
    index: &EvalIndex,
    pooling: &Pooling,
) -> Result<BTreeMap<(PromptGroup, String), GenderSplitDistribution>> {
    let model_id = model_of(log)?;
    let mut out: BTreeMap<(PromptGroup, String), GenderSplitDistribution> = BTreeMap::new();
    for r in log {
        let (img, attr, split) = index.join(r)?;
        if !pooling.admits(img.source, split) {
            continue;
        }
        let d = out.entry((attr.group, attr.attribute.clone())).or_insert_with(|| GenderSplitDistribution {
            attribute: attr.clone(),
            model_id: model_id.clone(),
            samples_male: Vec::new(),
            samples_female: Vec::new(),
            pooling: pooling.clone(),
        });
        match img.gender {
            Gender::Male => d.samples_male.push(r.p_yes),
            Gender::Female => d.samples_female.push(r.p_yes),
        }
    }
    for d in out.values() {
        if d.samples_male.is_empty() || d.samples_female.is_empty() {
            return Err(Error::EmptyDistribution(format!(
                "{} has no {} samples",
                d.attribute.attribute,
                if d.samples_male.is_empty() { "male" } else { "female" }
            )));
        }
    }
    Ok(out)
}

/// One sample per (image, prompt) line matching `attribute` and `pooling`.
pub fn build_distributions(
    log: &[OptionResponse],
    index: &EvalIndex,
    attribute: &AttributeQuery,
    pooling: &Pooling,
) -> Result<GenderSplitDistribution> {
    let model_id = model_of(log)?;
    let (mut male, mut female) = (Vec::new(), Vec::new());
    for r in log {
        let (img, attr, split) = index.join(r)?;
        if attr.group != attribute.group || attr.attribute != attribute.attribute || !pooling.admits(img.source, split) {
            continue;
        }
        match img.gender {
            Gender::Male => male.push(r.p_yes),
            Gender::Female => female.push(r.p_yes),
        }
    }
    if male.is_empty() || female.is_empty() {
        return Err(Error::EmptyDistribution(format!(
            "{} ({}): {} male and {} female samples",
            attribute.attribute,
            attribute.group,
            male.len(),
            female.len()
        )));
    }
    Ok(GenderSplitDistribution {
        attribute: attribute.clone(),
        model_id,
        samples_male: male,
        samples_female: female,
        pooling: pooling.clone(),
    })
}

/// Rate of "yes" as the most likely option on male images minus the rate on
/// female images.
pub fn discretized_gap(
    log: &[OptionResponse],
    index: &EvalIndex,
    attribute: &AttributeQuery,
    pooling: &Pooling,
) -> Result<f64> {
    let mut counts = [(0usize, 0usize); 2];
    for r in log {
        let (img, attr, split) = index.join(r)?;
        if attr.group != attribute.group || attr.attribute != attribute.attribute || !pooling.admits(img.source, split) {
            continue;
        }
        let c = &mut counts[(img.gender == Gender::Female) as usize];
        c.1 += 1;
        if r.argmax_option == OptionSemantic::Yes {
            c.0 += 1;
        }
    }
    let [(my, mn), (fy, fn_)] = counts;
    if mn == 0 || fn_ == 0 {
        return Err(Error::EmptyDistribution(format!("{} has no samples for one gender", attribute.attribute)));
    }
    Ok(my as f64 / mn as f64 - fy as f64 / fn_ as f64)
}
