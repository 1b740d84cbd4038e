use serde::{Deserialize, Serialize};

use super::config::{Normalization, Reduction};
use super::train::{batch_loss, TrainExample};
use crate::adapter::ModelAdapter;
use crate::nn::{Differentiable, Matrix, Unit, UnitSlices};
use crate::{Error, Result};

/// First-order Taylor importance of one parameter.
pub fn taylor_importance(grad: f64, weight: f64) -> f64 {
    (grad * weight).abs()
}

/// Aggregate per-parameter importance over a unit's parameters.
pub fn unit_importance(grads: &[f64], weights: &[f64], reduction: Reduction) -> f64 {
    let sum: f64 = grads.iter().zip(weights).map(|(g, w)| taylor_importance(*g, *w)).sum();
    match reduction {
        Reduction::Sum => sum,
        Reduction::Mean if !grads.is_empty() => sum / grads.len() as f64,
        Reduction::Mean => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub unit: Unit,
    /// Normalised bias importance.
    pub i_bias: f64,
    /// Normalised performance importance.
    pub i_perf: f64,
    /// i_perf - i_bias; the lowest units are pruned first.
    pub i_combined: f64,
    pub raw_bias: f64,
    pub raw_perf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub rows: Vec<ImportanceRow>,
    pub normalization: Normalization,
    pub reduction: Reduction,
    pub bias_samples: usize,
    pub perf_samples: usize,
}

fn unit_scores(
    model: &dyn Differentiable,
    units: &[UnitSlices],
    batch: &[TrainExample],
    reduction: Reduction,
) -> Result<Vec<f64>> {
    let refs: Vec<&TrainExample> = batch.iter().collect();
    let (_, grads) = batch_loss(model, &refs, None)?;
    let grad_of = |name: &str| -> Result<&Matrix> {
        grads
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g)
            .ok_or_else(|| Error::Capability(format!("no gradient for {name}")))
    };
    units
        .iter()
        .map(|u| {
            let (mut g_all, mut w_all) = (Vec::new(), Vec::new());
            for (name, slice) in &u.parts {
                let w = model.param(name).ok_or_else(|| Error::Capability(format!("no parameter {name}")))?;
                let g = grad_of(name)?;
                for i in slice.entries(w) {
                    g_all.push(g.data[i]);
                    w_all.push(w.data[i]);
                }
            }
            Ok(unit_importance(&g_all, &w_all, reduction))
        })
        .collect()
}

fn normalise(v: &[f64], mode: Normalization) -> Vec<f64> {
    let max = v.iter().cloned().fold(0.0, f64::max);
    match mode {
        Normalization::Max if max > 0.0 => v.iter().map(|x| x / max).collect(),
        _ => v.to_vec(),
    }
}

/// Score every prunable unit by bias importance (equalization loss on
/// `bias_batch`) and performance importance (answer loss on `perf_batch`),
/// each from the gradient of the batch-mean loss.
pub fn compute_importance(
    adapter: &dyn ModelAdapter,
    bias_batch: &[TrainExample],
    perf_batch: &[TrainExample],
    normalization: Normalization,
    reduction: Reduction,
) -> Result<ImportanceTable> {
    let model = adapter
        .as_differentiable()
        .ok_or_else(|| Error::Capability(format!("model {} does not expose gradients", adapter.model_id())))?;
    if bias_batch.is_empty() || perf_batch.is_empty() {
        return Err(Error::Insufficient("importance needs nonempty bias and performance batches".into()));
    }
    let units = model.structural_units();
    let raw_bias = unit_scores(model, &units, bias_batch, reduction)?;
    let raw_perf = unit_scores(model, &units, perf_batch, reduction)?;
    let (nb, np) = (normalise(&raw_bias, normalization), normalise(&raw_perf, normalization));
    let rows = units
        .iter()
        .enumerate()
        .map(|(i, u)| ImportanceRow {
            unit: u.unit,
            i_bias: nb[i],
            i_perf: np[i],
            i_combined: np[i] - nb[i],
            raw_bias: raw_bias[i],
            raw_perf: raw_perf[i],
        })
        .collect();
    Ok(ImportanceTable {
        rows,
        normalization,
        reduction,
        bias_samples: bias_batch.len(),
        perf_samples: perf_batch.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_cases() {
        assert_eq!(taylor_importance(2.0, -3.0), 6.0);
        assert_eq!(unit_importance(&[1.0, -2.0], &[0.0, 0.0], Reduction::Sum), 0.0);
        assert_eq!(unit_importance(&[1.0, -2.0], &[1.0, 1.0], Reduction::Mean), 1.5);
        assert_eq!(normalise(&[0.0, 2.0, 1.0], Normalization::Max), vec![0.0, 1.0, 0.5]);
        assert_eq!(normalise(&[0.0, 0.0], Normalization::Max), vec![0.0, 0.0]);
    }
}
