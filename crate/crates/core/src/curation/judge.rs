use serde::{Deserialize, Serialize};

use super::filter::Diagnostic;
use super::record::ImageRecord;
use crate::adapter::{parallel_map, ImageInput, ModelAdapter, Query};
use crate::prompts::probe_prompts;
use crate::{Error, Result};

/// p(yes) of the judge probe for one image. Probability is summed over the
/// adapter's tokens for "yes" (and likewise "no"); an image on which the
/// judge puts no mass on either answer is an error.
pub fn score_occupation_content<A: ModelAdapter + ?Sized>(judge: &A, image: &ImageInput) -> Result<f64> {
    let text = probe_prompts().judge_probe;
    let dist = judge.next_token_distribution(&Query { image, text: &text, prompt: None })?;
    let mass = |answer: &str| -> f64 {
        let mut ids = judge.answer_tokens(answer);
        ids.sort_unstable();
        ids.dedup();
        ids.iter().filter_map(|i| dist.get(*i as usize)).sum()
    };
    let (yes, no) = (mass("yes"), mass("no"));
    if yes + no <= 0.0 {
        return Err(Error::JudgeNoMass(image.id.clone()));
    }
    Ok(yes.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct JudgeOutcome {
    /// Records with `occupation_score` filled in.
    pub scored: Vec<ImageRecord>,
    pub unresolved: Vec<Diagnostic>,
}

/// Score every record, fanning out up to the judge's in-flight limit.
pub fn score_all<A: ModelAdapter + ?Sized>(judge: &A, records: &[ImageRecord]) -> JudgeOutcome {
    let results = parallel_map(records, judge.max_in_flight(), |r| score_occupation_content(judge, &ImageInput::from_record(r)));
    let mut out = JudgeOutcome::default();
    for (r, res) in records.iter().zip(results) {
        match res {
            Ok(score) => {
                let mut r = r.clone();
                r.occupation_score = Some(score);
                out.scored.push(r);
            }
            Err(e) => {
                log::warn!("judge could not score {}: {e}", r.id);
                out.unresolved.push(Diagnostic { id: r.id.clone(), reason: e.to_string() });
            }
        }
    }
    out
}
