use std::path::PathBuf;

use vlbias::adapter::{evaluate_pairs, run_probe, EvalOptions, ImageInput, LogHeader, Probe, ResponseLogWriter};
use vlbias::hashing::sha256_hex;

use super::{load_adapter, load_images, load_labels, load_prompts, write_json, Ctx};
use crate::args::{EvaluateArgs, ProbeArg};
use crate::error::{CliError, CliResult, Context, ExitClass};
use crate::manifest::{RunManifest, RunRecorder, Stage};

fn safe_name(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

pub fn run(ctx: &Ctx, args: &EvaluateArgs) -> CliResult<RunManifest> {
    let acfg = load_adapter(&args.adapter)?;
    let adapter = acfg.build()?;
    let records = load_images(&args.images)?;
    let mut rec = RunRecorder::new(Stage::Evaluate, ctx.seed, &ctx.out_dir);
    rec.config("adapter", acfg.hash());
    rec.input(&args.adapter)?.input(&args.images)?;
    let dir = ctx.stage_dir("evaluate")?;

    if let Some(probe) = args.probe {
        let mut images: Vec<ImageInput> = records.iter().map(ImageInput::from_record).collect();
        if let Some(path) = &args.labels {
            rec.input(path)?;
            let labels = load_labels(path)?;
            for img in &mut images {
                img.label = labels.get(&img.id).cloned();
            }
        }
        let probe = match probe {
            ProbeArg::Gender => Probe::Gender,
            ProbeArg::Occupation => Probe::Occupation,
        };
        let outcome = run_probe(adapter.as_ref(), &images, probe)?;
        let path = dir.join(format!("probe-{}-{:?}.json", safe_name(&acfg.model_id), probe).to_lowercase());
        write_json(&path, &outcome)?;
        rec.output(&path);
        println!(
            "{:?} probe on {}: accuracy {:.3} over {} images, calibration mass {:.3}",
            probe, acfg.model_id, outcome.accuracy, outcome.evaluated, outcome.calibration_mass
        );
        return rec.finish();
    }

    let prompt_path = args.prompts.as_ref().ok_or_else(|| CliError::config("evaluate needs --prompts unless --probe is given"))?;
    let prompt_text = crate::error::read_input(prompt_path, ExitClass::Data)?;
    let prompts = load_prompts(prompt_path)?;
    rec.input(prompt_path)?;
    let images_text = crate::error::read_input(&args.images, ExitClass::Data)?;
    let header = LogHeader {
        model_id: acfg.model_id.clone(),
        prompt_config_hash: sha256_hex(prompt_text.as_bytes())[..16].to_string(),
        curation_hash: sha256_hex(images_text.as_bytes())[..16].to_string(),
        seed: ctx.seed,
        token_policy: adapter.token_policy(),
    };
    let log_path: PathBuf = args.log.clone().unwrap_or_else(|| dir.join(format!("{}.jsonl", safe_name(&acfg.model_id))));
    let mut writer = ResponseLogWriter::open(&log_path, &header).context(format!("response log {}", log_path.display()))?;
    let done = writer.existing().done_pairs();
    let images: Vec<ImageInput> = records.iter().map(ImageInput::from_record).collect();
    let options = EvalOptions { retries: args.retries, ..EvalOptions::default() };
    let result = evaluate_pairs(adapter.as_ref(), &images, &prompts, &done, &options, |r| writer.append(&r));
    drop(writer);
    let summary = match result {
        Ok(s) => s,
        Err(e) => {
            return Err(CliError::new(
                ExitClass::Runtime,
                anyhow::anyhow!("evaluation stopped, partial log kept at {}: {e}", log_path.display()),
            ))
        }
    };
    rec.output(&log_path);
    println!(
        "{}: {} pairs, {} already logged, {} written to {}",
        acfg.model_id,
        summary.total_pairs,
        summary.skipped_existing,
        summary.written,
        log_path.display()
    );
    rec.finish()
}
