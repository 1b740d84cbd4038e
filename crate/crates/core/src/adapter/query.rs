//! Option probabilities and suitability probes.

use serde::{Deserialize, Serialize};

use super::{ImageInput, ModelAdapter, Query};
use crate::prompts::{probe_prompts, OptionSemantic, OptionSymbol, PromptInstance, OCCUPATION_PROBE_LABELS};
use crate::{Error, Result};

/// First-token probabilities of the three options for one (image, prompt).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionResponse {
    pub model_id: String,
    pub image_id: String,
    pub prompt_id: String,
    pub p_yes: f64,
    pub p_no: f64,
    pub p_unsure: f64,
    pub symbol_mass: f64,
    pub argmax_option: OptionSemantic,
}

impl OptionResponse {
    pub fn prob(&self, s: OptionSemantic) -> f64 {
        match s {
            OptionSemantic::Yes => self.p_yes,
            OptionSemantic::No => self.p_no,
            OptionSemantic::Unsure => self.p_unsure,
        }
    }
}

/// Ties go to yes, then no.
fn argmax(p_yes: f64, p_no: f64, p_unsure: f64) -> OptionSemantic {
    if p_yes >= p_no && p_yes >= p_unsure {
        OptionSemantic::Yes
    } else if p_no >= p_unsure {
        OptionSemantic::No
    } else {
        OptionSemantic::Unsure
    }
}

fn checked_distribution<A: ModelAdapter + ?Sized>(adapter: &A, query: &Query<'_>) -> Result<Vec<f64>> {
    let dist = adapter.next_token_distribution(query)?;
    if dist.len() != adapter.vocab_size() {
        return Err(Error::Transport(format!(
            "model {} returned {} probabilities for a vocabulary of {}",
            adapter.model_id(),
            dist.len(),
            adapter.vocab_size()
        )));
    }
    if dist.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Transport(format!("model {} returned invalid probabilities", adapter.model_id())));
    }
    Ok(dist)
}

/// Sum the distribution over each letter's token set.
pub fn letter_probabilities<A: ModelAdapter + ?Sized>(adapter: &A, dist: &[f64], letters: &[char]) -> Result<Vec<f64>> {
    let sets = adapter.symbol_tokens();
    letters
        .iter()
        .map(|l| {
            let ids = sets.tokens(*l)?;
            ids.iter()
                .map(|id| {
                    dist.get(*id as usize)
                        .copied()
                        .ok_or_else(|| Error::Capability(format!("token id {id} outside the vocabulary")))
                })
                .sum()
        })
        .collect()
}

/// Raw (un-renormalised) probabilities of yes, no and unsure for one pair.
pub fn query_options<A: ModelAdapter + ?Sized>(
    adapter: &A,
    image: &ImageInput,
    prompt: &PromptInstance,
) -> Result<OptionResponse> {
    let query = Query { image, text: &prompt.text, prompt: Some(prompt) };
    let dist = checked_distribution(adapter, &query)?;
    let letters: Vec<char> = OptionSymbol::ALL.iter().map(|s| s.letter()).collect();
    let probs = letter_probabilities(adapter, &dist, &letters)?;
    let mut by_meaning = [0.0; 3];
    for (sym, p) in OptionSymbol::ALL.iter().zip(&probs) {
        let slot = match prompt.semantic(*sym) {
            OptionSemantic::Yes => 0,
            OptionSemantic::No => 1,
            OptionSemantic::Unsure => 2,
        };
        by_meaning[slot] = *p;
    }
    let [p_yes, p_no, p_unsure] = by_meaning;
    Ok(OptionResponse {
        model_id: adapter.model_id().to_string(),
        image_id: image.id.clone(),
        prompt_id: prompt.prompt_id.clone(),
        p_yes,
        p_no,
        p_unsure,
        symbol_mass: probs.iter().sum(),
        argmax_option: argmax(p_yes, p_no, p_unsure),
    })
}

/// Mean probability mass on the option letters.
pub fn calibration_mass(responses: &[OptionResponse]) -> Result<f64> {
    if responses.is_empty() {
        return Err(Error::Insufficient("calibration mass needs at least one response".into()));
    }
    Ok(responses.iter().map(|r| r.symbol_mass).sum::<f64>() / responses.len() as f64)
}

/// Fraction of responses whose most likely option is "unsure".
pub fn unsure_ratio(responses: &[OptionResponse]) -> Result<f64> {
    if responses.is_empty() {
        return Err(Error::Insufficient("unsure ratio needs at least one response".into()));
    }
    let n = responses.iter().filter(|r| r.argmax_option == OptionSemantic::Unsure).count();
    Ok(n as f64 / responses.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    Gender,
    Occupation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOutcome {
    pub probe: Probe,
    pub accuracy: f64,
    pub evaluated: usize,
    pub correct: usize,
    /// (image id, reason) for images without a usable label.
    pub skipped: Vec<(String, String)>,
    pub calibration_mass: f64,
}

/// Classification accuracy of the argmax option letter against image labels.
pub fn run_probe<A: ModelAdapter + ?Sized>(adapter: &A, images: &[ImageInput], probe: Probe) -> Result<ProbeOutcome> {
    let prompts = probe_prompts();
    let (text, labels): (&str, Vec<&str>) = match probe {
        Probe::Gender => (&prompts.gender_probe, vec!["male", "female"]),
        Probe::Occupation => (&prompts.occupation_probe, OCCUPATION_PROBE_LABELS.to_vec()),
    };
    let letters: Vec<char> = (0..labels.len()).map(|i| (b'A' + i as u8) as char).collect();
    let mut skipped = Vec::new();
    let (mut evaluated, mut correct, mut mass) = (0usize, 0usize, 0.0);
    for image in images {
        let truth = match probe {
            Probe::Gender => image.gender.map(|g| g.as_str().to_string()),
            Probe::Occupation => image.label.as_ref().map(|l| l.to_ascii_lowercase()),
        };
        let Some(truth) = truth else {
            log::warn!("probe skips image {}: no label", image.id);
            skipped.push((image.id.clone(), "missing label".to_string()));
            continue;
        };
        let Some(truth_idx) = labels.iter().position(|l| l.eq_ignore_ascii_case(&truth)) else {
            skipped.push((image.id.clone(), format!("label '{truth}' is not a probe option")));
            continue;
        };
        let query = Query { image, text, prompt: None };
        let dist = checked_distribution(adapter, &query)?;
        let probs = letter_probabilities(adapter, &dist, &letters)?;
        // first maximum wins
        let pred = probs
            .iter()
            .enumerate()
            .fold(0, |best, (i, p)| if *p > probs[best] { i } else { best });
        evaluated += 1;
        mass += probs.iter().sum::<f64>();
        if pred == truth_idx {
            correct += 1;
        }
    }
    if evaluated == 0 {
        return Err(Error::Insufficient("no image carried a usable probe label".into()));
    }
    Ok(ProbeOutcome {
        probe,
        accuracy: correct as f64 / evaluated as f64,
        evaluated,
        correct,
        skipped,
        calibration_mass: mass / evaluated as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_tie_order() {
        assert_eq!(argmax(0.3, 0.3, 0.3), OptionSemantic::Yes);
        assert_eq!(argmax(0.1, 0.3, 0.3), OptionSemantic::No);
        assert_eq!(argmax(0.1, 0.2, 0.3), OptionSemantic::Unsure);
    }
}
