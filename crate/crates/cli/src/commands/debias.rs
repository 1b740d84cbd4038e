use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use vlbias::adapter::{AdapterConfig, AdapterKind, ImageInput};
use vlbias::debias::{
    compute_importance, engineer_prompt, finetune, prompt_tune, prune, read_qa_triples, write_checkpoint,
    DebiasConfig, Method, StopReason, TrainExample, TrainReport,
};
use vlbias::nn::ToyVla;
use vlbias::prompts::{write_prompt_dump, PromptGroup, PromptInstance, Split};

use super::{load_adapter, load_images, load_prompts, write_csv, write_json, write_text, Ctx};
use crate::args::{DebiasArgs, MethodArg};
use crate::error::{read_input, CliError, CliResult, Context, ExitClass};
use crate::manifest::{RunManifest, RunRecorder, Stage};

#[derive(Serialize)]
struct ImportanceCsv {
    layer: usize,
    kind: String,
    index: usize,
    i_bias: f64,
    i_perf: f64,
    i_combined: f64,
    raw_bias: f64,
    raw_perf: f64,
}

fn method_name(m: MethodArg) -> &'static str {
    match m {
        MethodArg::FullFt => "full_ft",
        MethodArg::LoraFt => "lora_ft",
        MethodArg::PromptTune => "prompt_tune",
        MethodArg::Prune => "prune",
        MethodArg::PromptEngineer => "prompt_engineer",
    }
}

fn equalize_examples(model: &ToyVla, images: &[ImageInput], prompts: &[PromptInstance]) -> CliResult<Vec<TrainExample>> {
    let mut out = Vec::with_capacity(images.len() * prompts.len());
    for img in images {
        for p in prompts {
            out.push(TrainExample::equalize(model, img.clone(), p)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::data("no training examples: empty image or prompt set"));
    }
    Ok(out)
}

/// Adapter TOML that loads the debiased checkpoint, so `evaluate` can run it.
fn write_followup_adapter(base: &AdapterConfig, dir: &Path, method: Method) -> CliResult<()> {
    let model_path = std::fs::canonicalize(dir.join("model.json"))?;
    let AdapterKind::Toy { features, .. } = &base.model else {
        return Err(CliError::config("debiasing needs a toy adapter"));
    };
    let cfg = AdapterConfig {
        model_id: format!("{}+{method}", base.model_id),
        model: AdapterKind::Toy { checkpoint: Some(model_path.display().to_string()), init: None, features: *features },
        ..base.clone()
    };
    let text = toml::to_string(&cfg).map_err(|e| CliError::config(format!("adapter config: {e}")))?;
    write_text(&dir.join("adapter.toml"), &text)
}

fn check_stop(report: &TrainReport, dir: &Path) -> CliResult<()> {
    match report.stop {
        StopReason::Diverged => Err(CliError::new(
            ExitClass::Runtime,
            anyhow::anyhow!(
                "training diverged after {} steps (loss {:.4}); trace kept in {}",
                report.steps,
                report.final_loss().unwrap_or(f64::NAN),
                dir.display()
            ),
        )),
        StopReason::MaxSteps => {
            log::warn!("stopped at the step limit with loss {:.4}", report.final_loss().unwrap_or(f64::NAN));
            Ok(())
        }
        StopReason::EarlyStop => Ok(()),
    }
}

pub fn run(ctx: &Ctx, args: &DebiasArgs) -> CliResult<RunManifest> {
    let mut cfg: DebiasConfig = ctx.config.debias_config(args.method.map(method_name))?;
    if let Some(s) = args.max_steps {
        cfg.max_steps = s;
    }
    if let Some(lr) = args.learning_rate {
        cfg.learning_rate = lr;
    }
    if let Some(r) = args.ratio {
        cfg.prune.ratio = r;
    }
    cfg.seed = ctx.seed;
    cfg.validate()?;
    let mut rec = RunRecorder::new(Stage::Debias, ctx.seed, &ctx.out_dir);
    rec.config("debias", cfg.hash());
    rec.input(&args.prompts)?;
    let prompts = load_prompts(&args.prompts)?;
    let root = ctx.stage_dir("debias")?;

    if cfg.method == Method::PromptEngineer {
        let engineered = prompts.iter().map(|p| engineer_prompt(p, &cfg.engineer)).collect::<Result<Vec<_>, _>>()?;
        let dir = root.join(format!("prompt_engineer-{}", &cfg.hash()[..12]));
        std::fs::create_dir_all(&dir)?;
        let path = dir.join("prompts.jsonl");
        write_text(&path, &write_prompt_dump(&engineered)?)?;
        rec.output(&path);
        println!("wrote {} engineered prompts to {}", engineered.len(), path.display());
        return rec.finish();
    }

    let adapter_path = args.adapter.as_ref().ok_or_else(|| CliError::config(format!("{} needs --adapter", cfg.method)))?;
    let acfg = load_adapter(adapter_path)?;
    rec.config("adapter", acfg.hash());
    rec.input(adapter_path)?;
    let mut model = acfg.build_toy()?;
    let images_path = args.images.as_ref().ok_or_else(|| CliError::config(format!("{} needs --images", cfg.method)))?;
    rec.input(images_path)?;
    let images: Vec<ImageInput> = load_images(images_path)?.iter().map(ImageInput::from_record).collect();
    let train_prompts: Vec<PromptInstance> = prompts.into_iter().filter(|p| p.template.split == Split::Train).collect();
    if train_prompts.is_empty() {
        return Err(CliError::config("the prompt dump has no train-split variants to train on"));
    }

    match cfg.method {
        Method::FullFt | Method::LoraFt => {
            let examples = equalize_examples(&model, &images, &train_prompts)?;
            log::info!("{} on {} examples", cfg.method, examples.len());
            let report = finetune(&mut model, &examples, &cfg)?;
            let dir = write_checkpoint(&root, &cfg, Some(&report), &model)?;
            check_stop(&report, &dir)?;
            write_followup_adapter(&acfg, &dir, cfg.method)?;
            rec.output(&dir);
            println!("{}: {} steps, final loss {:.4}, checkpoint {}", cfg.method, report.steps, report.final_loss().unwrap_or(f64::NAN), dir.display());
        }
        Method::PromptTune => {
            // one prefix per prompt group
            let mut groups: BTreeMap<PromptGroup, Vec<PromptInstance>> = BTreeMap::new();
            for p in train_prompts {
                groups.entry(p.attribute.group).or_default().push(p);
            }
            for (group, ps) in groups {
                let mut tuned = model.clone();
                let examples = equalize_examples(&tuned, &images, &ps)?;
                let report = prompt_tune(&mut tuned, &examples, &cfg)?;
                let dir = write_checkpoint(&root.join(group.as_str()), &cfg, Some(&report), &tuned)?;
                check_stop(&report, &dir)?;
                write_followup_adapter(&acfg, &dir, cfg.method)?;
                rec.output(&dir);
                println!("prompt_tune {group}: {} steps, final loss {:.4}, checkpoint {}", report.steps, report.final_loss().unwrap_or(f64::NAN), dir.display());
            }
        }
        Method::Prune => {
            let qa_path = args.qa.as_ref().ok_or_else(|| CliError::config("pruning needs --qa performance triples"))?;
            rec.input(qa_path)?;
            let triples = read_qa_triples(&read_input(qa_path, ExitClass::Data)?).context(format!("{}", qa_path.display()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut bias_batch = equalize_examples(&model, &images, &train_prompts)?;
            bias_batch.shuffle(&mut rng);
            bias_batch.truncate(cfg.prune.bias_samples.max(1));
            let mut perf_batch = triples.iter().map(|t| t.to_example(&model)).collect::<Result<Vec<_>, _>>()?;
            perf_batch.shuffle(&mut rng);
            perf_batch.truncate(cfg.prune.perf_samples.max(1));
            let table = compute_importance(&model, &bias_batch, &perf_batch, cfg.prune.normalization, cfg.prune.reduction)?;
            let prune_report = prune(&mut model, &table, cfg.prune.ratio)?;
            let dir = write_checkpoint(&root, &cfg, None, &model)?;
            let rows: Vec<ImportanceCsv> = table
                .rows
                .iter()
                .map(|r| ImportanceCsv {
                    layer: r.unit.layer,
                    kind: format!("{:?}", r.unit.kind),
                    index: r.unit.index,
                    i_bias: r.i_bias,
                    i_perf: r.i_perf,
                    i_combined: r.i_combined,
                    raw_bias: r.raw_bias,
                    raw_perf: r.raw_perf,
                })
                .collect();
            write_csv(&dir.join("importance.csv"), &rows)?;
            write_json(&dir.join("prune_report.json"), &prune_report)?;
            write_followup_adapter(&acfg, &dir, cfg.method)?;
            rec.output(&dir);
            println!("pruned {} units at ratio {}, checkpoint {}", prune_report.removed.len(), cfg.prune.ratio, dir.display());
        }
        Method::PromptEngineer => unreachable!("handled above"),
    }
    rec.finish()
}

