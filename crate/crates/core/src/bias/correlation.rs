use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::summary::ModelBiasSummary;
use crate::stats::{pearson, spearman};
use crate::{Error, Result};

/// Symmetric matrix of Pearson correlations between models' gap vectors.
/// `None` marks entries involving a constant gap vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapCorrelation {
    pub models: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn model_gap_correlation(summaries: &[ModelBiasSummary]) -> Result<GapCorrelation> {
    let Some(first) = summaries.first() else {
        return Err(Error::Insufficient("no models to correlate".into()));
    };
    let names: Vec<String> = {
        let mut v: Vec<String> = first.per_attribute.iter().map(|s| s.attribute.attribute.clone()).collect();
        v.sort();
        v
    };
    let mut vectors = Vec::new();
    for s in summaries {
        let gaps: BTreeMap<&str, f64> = s.per_attribute.iter().map(|x| (x.attribute.attribute.as_str(), x.gap)).collect();
        if gaps.len() != names.len() || names.iter().any(|n| !gaps.contains_key(n.as_str())) {
            return Err(Error::Coverage(format!("model {} covers a different attribute set", s.model_id)));
        }
        vectors.push(names.iter().map(|n| gaps[n.as_str()]).collect::<Vec<f64>>());
    }
    let n = summaries.len();
    let mut values = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let r = pearson(&vectors[i], &vectors[j])?;
            let r = if i == j { r.map(|_| 1.0) } else { r };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(GapCorrelation { models: summaries.iter().map(|s| s.model_id.clone()).collect(), values })
}

/// One row of the shipped labor-statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaborRow {
    pub occupation: String,
    pub pct_female: f64,
    pub source_table: u32,
}

const LABOR_CSV: &str = include_str!("../../data/labor_statistics.csv");

pub fn parse_labor_table(text: &str) -> Result<Vec<LaborRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let rows: Vec<LaborRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    for r in &rows {
        if !(0.0..=100.0).contains(&r.pct_female) {
            return Err(Error::Data(format!("{}: female share {} outside [0, 100]", r.occupation, r.pct_female)));
        }
    }
    Ok(rows)
}

/// Share of women per occupation (2023 U.S. labor statistics).
pub fn load_labor_table() -> Vec<LaborRow> {
    parse_labor_table(LABOR_CSV).expect("shipped labor table parses")
}

pub const LABOR_CONVENTION: &str = "spearman(pct_female, -gap)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaborCorrelation {
    /// Positive when female-dominated occupations get female-leaning gaps.
    pub rho: f64,
    pub n: usize,
    pub convention: String,
    pub occupations: Vec<String>,
}

pub fn labor_correlation(gaps: &BTreeMap<String, f64>, table: &[LaborRow]) -> Result<LaborCorrelation> {
    let mut occupations = Vec::new();
    let (mut female, mut neg_gap) = (Vec::new(), Vec::new());
    for row in table {
        if let Some(g) = gaps.get(&row.occupation) {
            occupations.push(row.occupation.clone());
            female.push(row.pct_female);
            neg_gap.push(-g);
        }
    }
    if occupations.len() < 3 {
        return Err(Error::Insufficient(format!(
            "labor correlation needs at least 3 shared occupations, found {}",
            occupations.len()
        )));
    }
    let rho = spearman(&female, &neg_gap)?
        .ok_or_else(|| Error::Insufficient("labor correlation is undefined for constant inputs".into()))?;
    Ok(LaborCorrelation { rho, n: occupations.len(), convention: LABOR_CONVENTION.to_string(), occupations })
}
