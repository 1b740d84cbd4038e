use serde::Serialize;
use vlbias::curation::{
    apply_occupation_filter, balanced_sample, filter_eligible, kappa_curve, read_source_manifest, removal_curve,
    score_all, write_jsonl_manifest, Diagnostic, Shortfall,
};

use super::{load_adapter, load_labels, write_csv, write_json, write_text, Ctx};
use crate::args::CurateArgs;
use crate::error::{read_input, CliError, CliResult, Context, ExitClass};
use crate::manifest::{RunManifest, RunRecorder, Stage};

#[derive(Serialize)]
struct CurateReport {
    run_id: String,
    input_records: usize,
    minors_removed: usize,
    activity_removed: usize,
    rejected: Vec<Diagnostic>,
    judge_unresolved: Vec<Diagnostic>,
    occupation_threshold: f64,
    occupation_removed: usize,
    selected: usize,
    shortfalls: Vec<Shortfall>,
    removal_curve: Vec<(f64, f64)>,
    kappa_curve: Option<Vec<(f64, Option<f64>)>>,
}

#[derive(Serialize)]
struct CellRow<'a> {
    dataset: &'a str,
    gender: &'a str,
    ethnicity: &'a str,
    count: usize,
}

fn thresholds() -> Vec<f64> {
    (1..=20).map(|i| i as f64 / 20.0).collect()
}

pub fn run(ctx: &Ctx, args: &CurateArgs) -> CliResult<RunManifest> {
    let mut cfg = ctx.config.curation.clone();
    if let Some(t) = args.occupation_threshold {
        cfg.occupation_threshold = t;
    }
    if let Some(n) = args.per_dataset {
        cfg.per_dataset_count = n;
    }
    cfg.validate()?;
    let mut rec = RunRecorder::new(Stage::Curate, ctx.seed, &ctx.out_dir);
    rec.config("curation", cfg.hash());

    let mut records = Vec::new();
    for m in &args.manifests {
        let text = read_input(m, ExitClass::Data)?;
        records.extend(read_source_manifest(text.as_bytes(), cfg.crop_padding).context(format!("manifest {}", m.display()))?);
        rec.input(m)?;
    }
    let input_records = records.len();
    let eligible = filter_eligible(&records, &cfg);
    log::info!(
        "{input_records} records: {} minors, {} activity images, {} rejected",
        eligible.minors,
        eligible.activity,
        eligible.rejected.len()
    );

    let mut kept = eligible.kept;
    let mut judge_unresolved = Vec::new();
    if let Some(j) = &args.judge {
        let acfg = load_adapter(j)?;
        rec.config("judge", acfg.hash());
        rec.input(j)?;
        let judge = acfg.build()?;
        let (scored, unscored): (Vec<_>, Vec<_>) = kept.into_iter().partition(|r| r.occupation_score.is_some());
        log::info!("judge {} scores {} images", acfg.model_id, unscored.len());
        let outcome = score_all(judge.as_ref(), &unscored);
        kept = scored;
        kept.extend(outcome.scored);
        judge_unresolved = outcome.unresolved;
    }

    let filter_on = cfg.occupation_threshold < 1.0;
    let candidates = if filter_on { apply_occupation_filter(&kept, cfg.occupation_threshold)? } else { kept.clone() };
    let occupation_removed = kept.len() - candidates.len();

    let curve = removal_curve(&kept, &thresholds());
    let kappa = match &args.reference_labels {
        None => None,
        Some(path) => {
            rec.input(path)?;
            let labels = load_labels(path)?;
            let (mut scores, mut reference) = (Vec::new(), Vec::new());
            for r in &kept {
                if let (Some(s), Some(l)) = (r.occupation_score, labels.get(&r.id)) {
                    let yes = match l.to_ascii_lowercase().as_str() {
                        "1" | "true" | "yes" => true,
                        "0" | "false" | "no" => false,
                        other => return Err(CliError::data(format!("reference label '{other}' for {} is not yes/no", r.id))),
                    };
                    scores.push(s);
                    reference.push(yes);
                }
            }
            Some(kappa_curve(&scores, &reference, &thresholds())?)
        }
    };

    let outcome = balanced_sample(&candidates, &cfg, ctx.seed)?;
    let dir = ctx.stage_dir("curate")?;
    let curated = dir.join("curated.jsonl");
    write_text(&curated, &write_jsonl_manifest(&outcome.records)?)?;
    rec.output(&curated);

    let cells: Vec<CellRow> = outcome
        .report
        .cells
        .iter()
        .map(|c| CellRow {
            dataset: c.dataset.as_str(),
            gender: c.gender.as_str(),
            ethnicity: c.ethnicity.as_deref().unwrap_or(""),
            count: c.count,
        })
        .collect();
    let cells_path = dir.join("cell_counts.csv");
    write_csv(&cells_path, &cells)?;
    rec.output(&cells_path);

    let report = CurateReport {
        run_id: rec.run_id(),
        input_records,
        minors_removed: eligible.minors,
        activity_removed: eligible.activity,
        rejected: eligible.rejected,
        judge_unresolved,
        occupation_threshold: cfg.occupation_threshold,
        occupation_removed,
        selected: outcome.records.len(),
        shortfalls: outcome.report.shortfalls,
        removal_curve: curve,
        kappa_curve: kappa,
    };
    let report_path = dir.join("report.json");
    write_json(&report_path, &report)?;
    rec.output(&report_path);
    println!("curated {} images into {}", report.selected, curated.display());
    rec.finish()
}
