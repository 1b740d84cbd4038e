use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use vlbias::adapter::{calibration_mass, read_response_log, unsure_ratio};
use vlbias::bias::{
    bias_statistic, build_all_distributions, dataset_breakdown, discretized_gap, rank_models, summarize_model_over,
    BiasStatistic, EvalIndex,
};
use vlbias::prompts::{load_attribute_catalog, AttributeQuery, PromptGroup};

use super::{load_images, load_prompts, write_csv, write_json, Ctx};
use crate::analysis::{Analysis, ModelAnalysis};
use crate::args::AnalyzeArgs;
use crate::error::{read_input, CliError, CliResult, Context, ExitClass};
use crate::manifest::{RunManifest, RunRecorder, Stage};

#[derive(Serialize)]
struct StatRow<'a> {
    model: &'a str,
    series: &'a str,
    group: String,
    attribute: &'a str,
    mu_male: f64,
    mu_female: f64,
    gap: f64,
    t: f64,
    df: f64,
    p: f64,
    n_male: usize,
    n_female: usize,
    significant: bool,
    direction: String,
    degenerate: bool,
    p_clamped: bool,
    discretized_gap: Option<f64>,
}

#[derive(Serialize)]
struct DatasetRow<'a> {
    model: &'a str,
    group: String,
    attribute: &'a str,
    dataset: &'a str,
    gap: f64,
    p: f64,
    n_male: usize,
    n_female: usize,
    significant: bool,
}

#[derive(Serialize)]
struct RankRow {
    rank: usize,
    model: String,
    ratio_significant: f64,
}

fn parse_series(items: &[String]) -> CliResult<BTreeMap<String, String>> {
    items
        .iter()
        .map(|s| match s.split_once('=') {
            Some((m, series)) if !m.is_empty() && !series.is_empty() => Ok((m.to_string(), series.to_string())),
            _ => Err(CliError::config(format!("--series expects MODEL=SERIES, got '{s}'"))),
        })
        .collect()
}

pub fn run(ctx: &Ctx, args: &AnalyzeArgs) -> CliResult<RunManifest> {
    let mut bias = ctx.config.bias.clone();
    if let Some(a) = args.alpha {
        bias.alpha = a;
    }
    if !(bias.alpha > 0.0 && bias.alpha < 1.0) {
        return Err(CliError::config(format!("alpha must be in (0, 1), got {}", bias.alpha)));
    }
    let series = parse_series(&args.series)?;
    let images = load_images(&args.images)?;
    let prompts = load_prompts(&args.prompts)?;
    let index = EvalIndex::new(&images, &prompts);
    let mut rec = RunRecorder::new(Stage::Analyze, ctx.seed, &ctx.out_dir);
    rec.config("bias", vlbias::hashing::config_hash(&bias));
    rec.input(&args.images)?.input(&args.prompts)?;

    // attributes each group is expected to cover, in catalog order
    let mut present: BTreeMap<PromptGroup, BTreeSet<String>> = BTreeMap::new();
    for p in &prompts {
        if bias.pooling.split.is_none_or(|s| s == p.template.split) {
            present.entry(p.attribute.group).or_default().insert(p.attribute.attribute.clone());
        }
    }
    let expected: BTreeMap<PromptGroup, Vec<AttributeQuery>> = present
        .iter()
        .map(|(g, names)| (*g, load_attribute_catalog(*g).into_iter().filter(|a| names.contains(&a.attribute)).collect()))
        .collect();

    let mut models = Vec::new();
    let mut stat_rows_owned: Vec<(String, String, BiasStatistic, Option<f64>)> = Vec::new();
    let mut dataset_rows_owned = Vec::new();
    for path in &args.logs {
        rec.input(path)?;
        let text = read_input(path, ExitClass::Data)?;
        let log = read_response_log(&text).context(format!("response log {}", path.display()))?;
        if log.truncated {
            log::warn!("{}: ignoring a partially written last line", path.display());
        }
        let responses = log.responses;
        let Some(first) = responses.first() else {
            return Err(CliError::data(format!("{} has no responses", path.display())));
        };
        let model_id = first.model_id.clone();
        let model_series = series.get(&model_id).cloned().unwrap_or_else(|| model_id.clone());
        let dists = build_all_distributions(&responses, &index, &bias.pooling).context(format!("{}", path.display()))?;
        let mut by_group: BTreeMap<PromptGroup, Vec<BiasStatistic>> = BTreeMap::new();
        let mut discretized = BTreeMap::new();
        for ((group, name), d) in &dists {
            let s = bias_statistic(d, bias.alpha, bias.flavor)?;
            let dg = discretized_gap(&responses, &index, &d.attribute, &bias.pooling)?;
            discretized.insert(format!("{group}/{name}"), dg);
            for (source, ds) in dataset_breakdown(&responses, &index, &d.attribute, &bias)? {
                dataset_rows_owned.push((model_id.clone(), source, ds));
            }
            stat_rows_owned.push((model_id.clone(), model_series.clone(), s.clone(), Some(dg)));
            by_group.entry(*group).or_default().push(s);
        }
        let mut summaries = Vec::new();
        for (group, stats) in by_group {
            let Some(want) = expected.get(&group) else {
                return Err(CliError::data(format!("{}: responses for {group} prompts not in the prompt dump", path.display())));
            };
            summaries.push(summarize_model_over(&stats, want, bias.alpha).context(format!("{model_id} {group}"))?);
        }
        for s in &summaries {
            log::info!("{model_id} {}: {}/{} significant", s.group, s.n_significant, s.n_attributes);
        }
        models.push(ModelAnalysis {
            model_id,
            series: model_series,
            calibration_mass: calibration_mass(&responses)?,
            unsure_ratio: unsure_ratio(&responses)?,
            summaries,
            discretized_gaps: discretized,
        });
    }
    let ids: BTreeSet<&str> = models.iter().map(|m| m.model_id.as_str()).collect();
    if ids.len() != models.len() {
        return Err(CliError::data("two logs belong to the same model"));
    }

    let dir = ctx.stage_dir("analyze")?;
    let analysis = Analysis {
        run_id: rec.run_id(),
        alpha: bias.alpha,
        flavor: bias.flavor,
        pooling: bias.pooling.clone(),
        models,
    };
    let analysis_path = dir.join("analysis.json");
    write_json(&analysis_path, &analysis)?;
    rec.output(&analysis_path);

    let stat_rows: Vec<StatRow> = stat_rows_owned
        .iter()
        .map(|(m, series, s, dg)| StatRow {
            model: m,
            series,
            group: s.attribute.group.to_string(),
            attribute: &s.attribute.attribute,
            mu_male: s.mu_male,
            mu_female: s.mu_female,
            gap: s.gap,
            t: s.t,
            df: s.df,
            p: s.p,
            n_male: s.n_male,
            n_female: s.n_female,
            significant: s.significant,
            direction: format!("{:?}", s.direction).to_lowercase(),
            degenerate: s.degenerate,
            p_clamped: s.p_clamped,
            discretized_gap: *dg,
        })
        .collect();
    let stats_path = dir.join("stats.csv");
    write_csv(&stats_path, &stat_rows)?;
    rec.output(&stats_path);

    let dataset_rows: Vec<DatasetRow> = dataset_rows_owned
        .iter()
        .map(|(m, source, s)| DatasetRow {
            model: m,
            group: s.attribute.group.to_string(),
            attribute: &s.attribute.attribute,
            dataset: source.as_str(),
            gap: s.gap,
            p: s.p,
            n_male: s.n_male,
            n_female: s.n_female,
            significant: s.significant,
        })
        .collect();
    let per_dataset = dir.join("per_dataset.csv");
    write_csv(&per_dataset, &dataset_rows)?;
    rec.output(&per_dataset);

    for group in analysis.groups() {
        let summaries: Vec<_> = analysis.models.iter().filter_map(|m| m.summary(group).cloned()).collect();
        let rows: Vec<RankRow> = rank_models(&summaries)
            .into_iter()
            .enumerate()
            .map(|(i, (model, ratio_significant))| RankRow { rank: i + 1, model, ratio_significant })
            .collect();
        let path = dir.join(format!("ranking_{group}.csv"));
        write_csv(&path, &rows)?;
        rec.output(&path);
        for r in &rows {
            println!("{group}: #{} {} ratio {:.3}", r.rank, r.model, r.ratio_significant);
        }
    }
    rec.finish()
}
