use std::collections::BTreeMap;

use serde::Serialize;
use vlbias::bias::{labor_correlation, load_labor_table, model_gap_correlation, parse_labor_table};
use vlbias::prompts::PromptGroup;
use vlbias::Error;

use super::{fmt_f, write_csv, write_table, Ctx};
use crate::analysis::Analysis;
use crate::args::CorrelateArgs;
use crate::error::{read_input, CliResult, Context, ExitClass};
use crate::manifest::{RunManifest, RunRecorder, Stage};

#[derive(Serialize)]
struct LaborRowOut<'a> {
    model: &'a str,
    rho: Option<f64>,
    n: usize,
    convention: &'a str,
    note: String,
}

pub fn run(ctx: &Ctx, args: &CorrelateArgs) -> CliResult<RunManifest> {
    let analysis = Analysis::load(&args.analysis)?;
    let mut rec = RunRecorder::new(Stage::Correlate, ctx.seed, &ctx.out_dir);
    rec.input(&args.analysis)?;
    let table = match &args.labor {
        Some(p) => {
            rec.input(p)?;
            parse_labor_table(&read_input(p, ExitClass::Data)?).context(format!("labor table {}", p.display()))?
        }
        None => load_labor_table(),
    };
    let dir = ctx.stage_dir("correlate")?;

    for group in analysis.groups() {
        let summaries: Vec<_> = analysis.models.iter().filter_map(|m| m.summary(group).cloned()).collect();
        let corr = model_gap_correlation(&summaries).context(format!("{group}"))?;
        let mut header = vec!["model".to_string()];
        header.extend(corr.models.iter().cloned());
        let rows: Vec<Vec<String>> = corr
            .models
            .iter()
            .zip(&corr.values)
            .map(|(m, vs)| {
                let mut row = vec![m.clone()];
                row.extend(vs.iter().map(|v| v.map(fmt_f).unwrap_or_default()));
                row
            })
            .collect();
        let path = dir.join(format!("gap_correlation_{group}.csv"));
        write_table(&path, &header, &rows)?;
        rec.output(path);
    }

    let mut labor_rows = Vec::new();
    for m in &analysis.models {
        let Some(s) = m.summary(PromptGroup::Occupations) else { continue };
        let gaps: BTreeMap<String, f64> = s.gap_vector().into_iter().collect();
        let row = match labor_correlation(&gaps, &table) {
            Ok(c) => LaborRowOut { model: &m.model_id, rho: Some(c.rho), n: c.n, convention: vlbias::bias::LABOR_CONVENTION, note: String::new() },
            Err(e @ Error::Insufficient(_)) => LaborRowOut {
                model: &m.model_id,
                rho: None,
                n: 0,
                convention: vlbias::bias::LABOR_CONVENTION,
                note: e.to_string(),
            },
            Err(e) => return Err(e.into()),
        };
        if let Some(rho) = row.rho {
            println!("{}: labor correlation {rho:.3} over {} occupations", m.model_id, row.n);
        }
        labor_rows.push(row);
    }
    if !labor_rows.is_empty() {
        let path = dir.join("labor_correlation.csv");
        write_csv(&path, &labor_rows)?;
        rec.output(path);
    }
    rec.finish()
}
