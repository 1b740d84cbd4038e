use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub kappa: f64,
    /// Observed agreement p_o.
    pub accuracy: f64,
}

/// 2x2 contingency table of two binary annotators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Contingency {
    pub yes_yes: u64,
    pub yes_no: u64,
    pub no_yes: u64,
    pub no_no: u64,
}

impl Contingency {
    pub fn from_labels(a: &[bool], b: &[bool]) -> Contingency {
        let mut t = Contingency::default();
        for (&x, &y) in a.iter().zip(b) {
            match (x, y) {
                (true, true) => t.yes_yes += 1,
                (true, false) => t.yes_no += 1,
                (false, true) => t.no_yes += 1,
                (false, false) => t.no_no += 1,
            }
        }
        t
    }

    pub fn total(&self) -> u64 {
        self.yes_yes + self.yes_no + self.no_yes + self.no_no
    }

    /// Cohen's kappa with marginal-product chance agreement.
    pub fn kappa(&self) -> Result<Agreement> {
        let n = self.total() as f64;
        if n == 0.0 {
            return Err(Error::Insufficient("empty contingency table".into()));
        }
        let p_o = (self.yes_yes + self.no_no) as f64 / n;
        let a_yes = (self.yes_yes + self.yes_no) as f64 / n;
        let b_yes = (self.yes_yes + self.no_yes) as f64 / n;
        let p_e = a_yes * b_yes + (1.0 - a_yes) * (1.0 - b_yes);
        if (1.0 - p_e).abs() < f64::EPSILON {
            return Err(Error::UndefinedKappa);
        }
        Ok(Agreement { kappa: (p_o - p_e) / (1.0 - p_e), accuracy: p_o })
    }
}

/// Agreement between two binary label vectors of equal length (at least 2).
pub fn cohens_kappa(labels_a: &[bool], labels_b: &[bool]) -> Result<Agreement> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::Data(format!(
            "label vectors differ in length: {} vs {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    if labels_a.len() < 2 {
        return Err(Error::Insufficient("kappa needs at least two items".into()));
    }
    Contingency::from_labels(labels_a, labels_b).kappa()
}

/// Kappa between judge scores binarized at each threshold (`score > t` means
/// "reveals an occupation") and reference labels. Thresholds at which kappa is
/// undefined yield `None`.
pub fn kappa_curve(scores: &[f64], reference: &[bool], thresholds: &[f64]) -> Result<Vec<(f64, Option<f64>)>> {
    if scores.len() != reference.len() {
        return Err(Error::Data("scores and reference labels differ in length".into()));
    }
    thresholds
        .iter()
        .map(|&t| {
            let judged: Vec<bool> = scores.iter().map(|&s| s > t).collect();
            match cohens_kappa(&judged, reference) {
                Ok(a) => Ok((t, Some(a.kappa))),
                Err(Error::UndefinedKappa) => Ok((t, None)),
                Err(e) => Err(e),
            }
        })
        .collect()
}
