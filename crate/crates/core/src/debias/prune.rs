use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::importance::{ImportanceRow, ImportanceTable};
use crate::adapter::ModelAdapter;
use crate::nn::{Unit, UnitKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModulePrune {
    pub layer: usize,
    pub kind: UnitKind,
    pub units: usize,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub ratio: f64,
    pub removed: Vec<Unit>,
    pub modules: Vec<ModulePrune>,
    /// "structural": units are deleted from the weight matrices.
    pub mode: String,
}

/// Remove the floor(ratio * n) lowest-scoring units of every module (MLP
/// channels and attention heads ranked separately per layer; ties broken by
/// unit index).
pub fn prune(adapter: &mut dyn ModelAdapter, table: &ImportanceTable, ratio: f64) -> Result<PruneReport> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::Prune(format!("ratio must be in [0, 1), got {ratio}")));
    }
    let id = adapter.model_id().to_string();
    let model = adapter
        .as_differentiable_mut()
        .ok_or_else(|| Error::Capability(format!("model {id} does not expose structural units")))?;
    let units: BTreeSet<Unit> = model.structural_units().into_iter().map(|u| u.unit).collect();
    let scored: BTreeSet<Unit> = table.rows.iter().map(|r| r.unit).collect();
    if units != scored || table.rows.len() != units.len() {
        return Err(Error::Prune("importance table does not match the model's units".into()));
    }
    let mut modules: BTreeMap<(usize, UnitKind), Vec<&ImportanceRow>> = BTreeMap::new();
    for r in &table.rows {
        modules.entry((r.unit.layer, r.unit.kind)).or_default().push(r);
    }
    let mut removed = Vec::new();
    let mut report_modules = Vec::new();
    for ((layer, kind), mut rows) in modules {
        let n = rows.len();
        let k = (ratio * n as f64).floor() as usize;
        if k >= n {
            return Err(Error::Prune(format!("ratio {ratio} would remove every unit of layer {layer} {kind:?}")));
        }
        rows.sort_by(|a, b| a.i_combined.total_cmp(&b.i_combined).then(a.unit.index.cmp(&b.unit.index)));
        removed.extend(rows[..k].iter().map(|r| r.unit));
        report_modules.push(ModulePrune { layer, kind, units: n, removed: k });
    }
    if !removed.is_empty() {
        model.remove_units(&removed)?;
    }
    removed.sort();
    Ok(PruneReport { ratio, removed, modules: report_modules, mode: "structural".to_string() })
}
