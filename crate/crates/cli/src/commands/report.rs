use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use vlbias::adapter::{read_response_log, OptionResponse};
use vlbias::bias::{rank_models, series_mean_gaps};
use vlbias::prompts::{load_attribute_catalog, PromptGroup};

use super::{fmt_f, load_prompts, write_table, write_text, Ctx};
use crate::analysis::Analysis;
use crate::args::ReportArgs;
use crate::error::{read_input, CliError, CliResult, Context, ExitClass};
use crate::manifest::{RunManifest, RunRecorder, Stage};
use crate::svg;

/// Mean gap of each attribute over all models, in catalog order.
fn mean_gaps(analysis: &Analysis, group: PromptGroup) -> Vec<(String, f64)> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for m in &analysis.models {
        if let Some(s) = m.summary(group) {
            for st in &s.per_attribute {
                let e = acc.entry(st.attribute.attribute.clone()).or_insert((0.0, 0));
                e.0 += st.gap;
                e.1 += 1;
            }
        }
    }
    load_attribute_catalog(group)
        .into_iter()
        .filter_map(|a| acc.get(&a.attribute).map(|(s, n)| (a.attribute.clone(), s / *n as f64)))
        .collect()
}

type Ranked = Vec<(String, f64)>;

/// The `n` most male-leaning (largest positive gap) and most female-leaning
/// (most negative gap) attributes.
pub fn top_biased(gaps: &[(String, f64)], n: usize) -> (Ranked, Ranked) {
    let mut male: Vec<_> = gaps.iter().filter(|(_, g)| *g > 0.0).cloned().collect();
    male.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    male.truncate(n);
    let mut female: Vec<_> = gaps.iter().filter(|(_, g)| *g < 0.0).cloned().collect();
    female.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    female.truncate(n);
    (male, female)
}

/// (debiased - original) / original, in percent.
pub fn percent_delta(original: f64, debiased: f64) -> Option<f64> {
    (original != 0.0).then(|| 100.0 * (debiased - original) / original)
}

struct Out<'a> {
    dir: &'a Path,
    rec: &'a mut RunRecorder,
}

impl Out<'_> {
    fn figure(&mut self, name: &str, svg: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
        let svg_path = self.dir.join(format!("{name}.svg"));
        let csv_path = self.dir.join(format!("{name}.csv"));
        write_text(&svg_path, svg)?;
        write_table(&csv_path, header, rows)?;
        self.rec.output(svg_path);
        self.rec.output(csv_path);
        Ok(())
    }
}

fn heatmaps(analysis: &Analysis, out: &mut Out, run_id: &str) -> CliResult<()> {
    for group in analysis.groups() {
        let means = series_mean_gaps(&analysis.series_stats(group));
        let cols: Vec<String> = load_attribute_catalog(group)
            .into_iter()
            .map(|a| a.attribute)
            .filter(|a| means.values().any(|m| m.contains_key(a)))
            .collect();
        let rows: Vec<String> = means.keys().cloned().collect();
        let values: Vec<Vec<Option<f64>>> =
            rows.iter().map(|r| cols.iter().map(|c| means[r].get(c).copied()).collect()).collect();
        let svg = svg::heatmap(&format!("Mean gap by series: {group}"), &rows, &cols, &values, run_id);
        let mut header = vec!["series".to_string()];
        header.extend(cols.iter().cloned());
        let table: Vec<Vec<String>> = rows
            .iter()
            .zip(&values)
            .map(|(r, vs)| {
                let mut row = vec![r.clone()];
                row.extend(vs.iter().map(|v| v.map(fmt_f).unwrap_or_default()));
                row
            })
            .collect();
        out.figure(&format!("heatmap_{group}"), &svg, &header, &table)?;
    }
    Ok(())
}

fn top_charts(analysis: &Analysis, n: usize, out: &mut Out, run_id: &str) -> CliResult<()> {
    for group in analysis.groups() {
        let (male, female) = top_biased(&mean_gaps(analysis, group), n);
        for (side, items, color) in [("male", male, "#2166ac"), ("female", female, "#b2182b")] {
            let svg = svg::hbar(&format!("Top {n} {side}-biased {group}"), &items, color, run_id);
            let rows: Vec<Vec<String>> = items
                .iter()
                .enumerate()
                .map(|(i, (a, g))| vec![(i + 1).to_string(), a.clone(), fmt_f(*g)])
                .collect();
            out.figure(&format!("top_{group}_{side}"), &svg, &["rank".into(), "attribute".into(), "mean_gap".into()], &rows)?;
        }
    }
    Ok(())
}

fn rankings(analysis: &Analysis, out: &mut Out, run_id: &str) -> CliResult<()> {
    for group in analysis.groups() {
        let summaries: Vec<_> = analysis.models.iter().filter_map(|m| m.summary(group).cloned()).collect();
        let ranked = rank_models(&summaries);
        let svg = svg::vbar(&format!("Ratio of {group} with significant gap"), &ranked, 1.0, run_id);
        let rows: Vec<Vec<String>> = ranked
            .iter()
            .enumerate()
            .map(|(i, (m, r))| vec![(i + 1).to_string(), m.clone(), fmt_f(*r)])
            .collect();
        out.figure(&format!("ranking_{group}"), &svg, &["rank".into(), "model".into(), "ratio_significant".into()], &rows)?;
    }
    Ok(())
}

fn load_benchmarks(path: &Path) -> CliResult<BTreeMap<(String, String), f64>> {
    let text = read_input(path, ExitClass::Config)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for row in rdr.deserialize::<(String, String, f64)>() {
        let (model, bench, score) = row.context(format!("benchmarks {}", path.display()))?;
        out.insert((model, bench), score);
    }
    Ok(out)
}

fn debias_table(analysis: &Analysis, baseline: &str, benchmarks: &BTreeMap<(String, String), f64>, out: &mut Out) -> CliResult<()> {
    let Some(base) = analysis.models.iter().find(|m| m.model_id == baseline) else {
        return Err(CliError::config(format!("baseline model '{baseline}' is not in the analysis")));
    };
    let benches: Vec<String> = benchmarks.keys().map(|(_, b)| b.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let mut header = vec!["model".to_string()];
    header.extend(PromptGroup::ALL.iter().map(|g| g.to_string()));
    for b in &benches {
        header.push(b.clone());
        header.push(format!("{b}_delta_pct"));
    }
    let mut ordered = vec![base];
    ordered.extend(analysis.models.iter().filter(|m| m.model_id != baseline));
    let mut rows = Vec::new();
    for m in &ordered {
        let mut row = vec![m.model_id.clone()];
        for g in PromptGroup::ALL {
            row.push(m.summary(g).map(|s| fmt_f(s.ratio_significant)).unwrap_or_default());
        }
        for b in &benches {
            let score = benchmarks.get(&(m.model_id.clone(), b.clone()));
            let orig = benchmarks.get(&(baseline.to_string(), b.clone()));
            row.push(score.map(|s| fmt_f(*s)).unwrap_or_default());
            let delta = match (orig, score) {
                (Some(o), Some(s)) => percent_delta(*o, *s).map(|d| format!("{d:.2}")).unwrap_or_default(),
                _ => String::new(),
            };
            row.push(delta);
        }
        rows.push(row);
    }
    let csv_path = out.dir.join("debias_table.csv");
    write_table(&csv_path, &header, &rows)?;
    out.rec.output(&csv_path);

    let mut md = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
    for r in &rows {
        md.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    let md_path = out.dir.join("debias_table.md");
    write_text(&md_path, &md)?;
    out.rec.output(&md_path);
    Ok(())
}

struct PanelInputs {
    /// prompt id -> `group/attribute`
    attr_of: BTreeMap<String, String>,
    logs: Vec<(String, Vec<OptionResponse>)>,
}

fn load_panel_inputs(args: &ReportArgs) -> CliResult<PanelInputs> {
    let prompt_path = args.prompts.as_ref().ok_or_else(|| CliError::config("option panels need --prompts"))?;
    let prompts = load_prompts(prompt_path)?;
    let attr_of =
        prompts.iter().map(|p| (p.prompt_id.clone(), format!("{}/{}", p.attribute.group, p.attribute.attribute))).collect();
    let mut logs = Vec::new();
    for path in &args.panel_logs {
        let log = read_response_log(&read_input(path, ExitClass::Config)?).context(format!("{}", path.display()))?;
        let model = log.responses.first().map(|r| r.model_id.clone()).unwrap_or_default();
        logs.push((model, log.responses));
    }
    Ok(PanelInputs { attr_of, logs })
}

fn panels(args: &ReportArgs, inputs: &PanelInputs, out: &mut Out, run_id: &str) -> CliResult<()> {
    let PanelInputs { attr_of, logs } = inputs;
    let images: Vec<String> = if args.panel_images.is_empty() {
        let all: BTreeSet<&str> = logs.iter().flat_map(|(_, rs)| rs.iter().map(|r| r.image_id.as_str())).collect();
        all.into_iter().take(2).map(String::from).collect()
    } else {
        args.panel_images.clone()
    };
    for image in &images {
        // mean option probabilities per (attribute, model) over prompt variants
        let mut acc: BTreeMap<(String, usize), ([f64; 3], usize)> = BTreeMap::new();
        for (li, (_, rs)) in logs.iter().enumerate() {
            for r in rs.iter().filter(|r| &r.image_id == image) {
                let attr = attr_of
                    .get(&r.prompt_id)
                    .ok_or_else(|| CliError::data(format!("panel log has unknown prompt '{}'", r.prompt_id)))?;
                let e = acc.entry((attr.clone(), li)).or_insert(([0.0; 3], 0));
                e.0[0] += r.p_yes;
                e.0[1] += r.p_no;
                e.0[2] += r.p_unsure;
                e.1 += 1;
            }
        }
        if acc.is_empty() {
            return Err(CliError::data(format!("no panel responses for image '{image}'")));
        }
        let attrs: Vec<String> = acc.keys().map(|(a, _)| a.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let mut series = Vec::new();
        for (model, _) in logs {
            for opt in ["yes", "no", "unsure"] {
                series.push(format!("{model}: {opt}"));
            }
        }
        let mut values = Vec::new();
        let mut rows = Vec::new();
        for a in &attrs {
            let mut v = Vec::new();
            for (li, (model, _)) in logs.iter().enumerate() {
                let mean = acc.get(&(a.clone(), li)).map(|(s, n)| s.map(|x| x / *n as f64)).unwrap_or([0.0; 3]);
                v.extend(mean);
                rows.push(vec![image.clone(), model.clone(), a.clone(), fmt_f(mean[0]), fmt_f(mean[1]), fmt_f(mean[2])]);
            }
            values.push(v);
        }
        let svg = svg::grouped_bars(&format!("Option distribution for image {image}"), &attrs, &series, &values, run_id);
        let safe: String = image.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
        let header: Vec<String> = ["image", "model", "attribute", "p_yes", "p_no", "p_unsure"].iter().map(|s| s.to_string()).collect();
        out.figure(&format!("panel_{safe}"), &svg, &header, &rows)?;
    }
    Ok(())
}

pub fn run(ctx: &Ctx, args: &ReportArgs) -> CliResult<RunManifest> {
    let analysis = Analysis::load(&args.analysis)?;
    let mut rec = RunRecorder::new(Stage::Report, ctx.seed, &ctx.out_dir);
    rec.config("report", vlbias::hashing::config_hash(&(args.top, &args.baseline, &args.panel_images)));
    rec.input(&args.analysis)?;
    let benchmarks = match &args.benchmarks {
        Some(p) => {
            rec.input(p)?;
            load_benchmarks(p)?
        }
        None => BTreeMap::new(),
    };
    let panel_inputs = if args.panel_logs.is_empty() {
        None
    } else {
        let inputs = load_panel_inputs(args)?;
        for p in args.prompts.iter().chain(&args.panel_logs) {
            rec.input(p)?;
        }
        Some(inputs)
    };
    let run_id = rec.run_id();
    let dir = ctx.stage_dir("report")?;
    let mut out = Out { dir: &dir, rec: &mut rec };
    heatmaps(&analysis, &mut out, &run_id)?;
    top_charts(&analysis, args.top, &mut out, &run_id)?;
    rankings(&analysis, &mut out, &run_id)?;
    if let Some(b) = &args.baseline {
        debias_table(&analysis, b, &benchmarks, &mut out)?;
    }
    if let Some(inputs) = &panel_inputs {
        panels(args, inputs, &mut out, &run_id)?;
    }
    println!("wrote {} report files to {}", rec.outputs().len(), dir.display());
    rec.finish()
}
