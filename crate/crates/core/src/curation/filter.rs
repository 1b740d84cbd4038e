use serde::{Deserialize, Serialize};

use super::record::{ImageRecord, Source};
use super::CurationConfig;
use crate::{Error, Result};

/// Why a record was dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub kept: Vec<ImageRecord>,
    pub minors: usize,
    pub activity: usize,
    pub rejected: Vec<Diagnostic>,
}

const MINOR_LABELS: [&str; 8] = ["child", "children", "kid", "baby", "infant", "teen", "teenager", "young"];

/// Whether an age annotation denotes a child or teenager.
///
/// Numeric ranges ("3-9", "10-19") are minors when their upper bound is below
/// 20; a few keyword labels used by the source datasets are recognised too.
pub fn is_minor(age_class: &str) -> bool {
    let a = age_class.trim().to_ascii_lowercase();
    if MINOR_LABELS.contains(&a.as_str()) {
        return true;
    }
    let nums: Vec<u32> = a
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .filter_map(|s| s.parse().ok())
        .collect();
    match nums.as_slice() {
        [lo, hi] => lo < hi && *hi < 20,
        [single] if a.starts_with(|c: char| c.is_ascii_digit()) && !a.contains("more") && !a.contains('+') => *single < 18,
        _ => false,
    }
}

/// Drop minors and Phase images with activity annotations; order is preserved.
/// Records without an age annotation are rejected with a diagnostic.
pub fn filter_eligible(records: &[ImageRecord], config: &CurationConfig) -> FilterOutcome {
    let mut out = FilterOutcome::default();
    for r in records {
        if r.age_class.trim().is_empty() {
            out.rejected.push(Diagnostic { id: r.id.clone(), reason: "missing age_class".into() });
            continue;
        }
        if config.drop_minors && is_minor(&r.age_class) {
            out.minors += 1;
            continue;
        }
        if config.drop_phase_activity && r.source == Source::Phase && r.activity.is_some() {
            out.activity += 1;
            continue;
        }
        out.kept.push(r.clone());
    }
    out
}

/// Keep records whose occupation score is at most `threshold`; removal needs a
/// strictly greater score.
pub fn apply_occupation_filter(records: &[ImageRecord], threshold: f64) -> Result<Vec<ImageRecord>> {
    let unscored: Vec<String> = records.iter().filter(|r| r.occupation_score.is_none()).map(|r| r.id.clone()).collect();
    if !unscored.is_empty() {
        return Err(Error::Unscored(unscored));
    }
    Ok(records
        .iter()
        .filter(|r| r.occupation_score.is_some_and(|s| s <= threshold))
        .cloned()
        .collect())
}

/// Fraction of scored records that a threshold would remove, for each threshold.
pub fn removal_curve(records: &[ImageRecord], thresholds: &[f64]) -> Vec<(f64, f64)> {
    let scores: Vec<f64> = records.iter().filter_map(|r| r.occupation_score).collect();
    thresholds
        .iter()
        .map(|&t| {
            let removed = scores.iter().filter(|&&s| s > t).count();
            let ratio = if scores.is_empty() { 0.0 } else { removed as f64 / scores.len() as f64 };
            (t, ratio)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::record::Gender;

    fn rec(id: &str, source: Source, age: &str, score: Option<f64>) -> ImageRecord {
        ImageRecord {
            id: id.into(),
            path: None,
            source,
            gender: Gender::Male,
            ethnicity: None,
            age_class: age.into(),
            bbox: None,
            resolution: (1, 1),
            occupation_score: score,
            activity: None,
        }
    }

    #[test]
    fn minor_detection() {
        for m in ["0-2", "3-9", "10-19", "Young", "child"] {
            assert!(is_minor(m), "{m}");
        }
        for a in ["20-29", "more than 70", "Middle", "Older", "70+", "adult"] {
            assert!(!is_minor(a), "{a}");
        }
    }

    #[test]
    fn eligibility() {
        let cfg = CurationConfig::default();
        let mut phase = rec("p", Source::Phase, "30-39", None);
        phase.activity = Some("playing music".into());
        let recs = vec![
            rec("kid", Source::Pata, "3-9", None),
            phase,
            rec("adult", Source::Pata, "30-39", None),
            rec("noage", Source::Pata, "", None),
        ];
        let out = filter_eligible(&recs, &cfg);
        assert_eq!(out.kept.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), vec!["adult"]);
        assert_eq!((out.minors, out.activity), (1, 1));
        assert_eq!(out.rejected.len(), 1);
        assert_eq!(out.rejected[0].id, "noage");
    }

    #[test]
    fn occupation_threshold_boundary_is_kept() {
        let recs: Vec<_> = [0.1, 0.3, 0.25, 0.24]
            .iter()
            .enumerate()
            .map(|(i, s)| rec(&i.to_string(), Source::Pata, "20-29", Some(*s)))
            .collect();
        let kept = apply_occupation_filter(&recs, 0.25).unwrap();
        let scores: Vec<f64> = kept.iter().map(|r| r.occupation_score.unwrap()).collect();
        assert_eq!(scores, vec![0.1, 0.25, 0.24]);
        assert_eq!(apply_occupation_filter(&recs, 1.0).unwrap().len(), 4);
        assert!(apply_occupation_filter(&recs, 0.0).unwrap().is_empty());
    }

    #[test]
    fn unscored_records_error_lists_ids() {
        let recs = vec![rec("a", Source::Pata, "20-29", Some(0.1)), rec("b", Source::Pata, "20-29", None)];
        match apply_occupation_filter(&recs, 0.25) {
            Err(Error::Unscored(ids)) => assert_eq!(ids, vec!["b".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn removal_curve_is_monotone() {
        let recs: Vec<_> = (0..50)
            .map(|i| rec(&i.to_string(), Source::Pata, "20-29", Some(crate::hashing::unit_interval(i))))
            .collect();
        let thresholds: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let curve = removal_curve(&recs, &thresholds);
        for w in curve.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        assert_eq!(curve.last().unwrap().1, 0.0);
    }
}
