use serde::Serialize;
use vlbias::hashing::config_hash;
use vlbias::prompts::{
    enumerate_templates, load_attribute_catalog, render_all, split_attributes, write_prompt_dump, AttributeSplit,
    PromptGroup, Split,
};

use super::{write_csv, write_text, Ctx};
use crate::args::{AttributesArg, PromptsArgs, SplitArg};
use crate::error::{CliError, CliResult};
use crate::manifest::{RunManifest, RunRecorder, Stage};

#[derive(Serialize)]
struct CountRow {
    group: String,
    split: String,
    attributes: usize,
    templates: usize,
    prompts: usize,
}

fn parse_split(s: &str) -> CliResult<SplitArg> {
    match s {
        "train" => Ok(SplitArg::Train),
        "test" => Ok(SplitArg::Test),
        "both" => Ok(SplitArg::Both),
        other => Err(CliError::config(format!("prompt split must be train, test or both, got '{other}'"))),
    }
}

fn parse_attributes(s: &str) -> CliResult<AttributesArg> {
    match s {
        "all" => Ok(AttributesArg::All),
        "train" => Ok(AttributesArg::Train),
        "test" => Ok(AttributesArg::Test),
        other => Err(CliError::config(format!("attribute subset must be all, train or test, got '{other}'"))),
    }
}

pub fn run(ctx: &Ctx, args: &PromptsArgs) -> CliResult<RunManifest> {
    let mut settings = ctx.config.prompts.clone();
    if !args.groups.is_empty() {
        settings.groups = args.groups.clone();
    }
    let split = match args.split {
        Some(s) => s,
        None => parse_split(&settings.split)?,
    };
    let attributes = match args.attributes {
        Some(a) => a,
        None => parse_attributes(&settings.attributes)?,
    };
    let groups: Vec<PromptGroup> = settings
        .groups
        .iter()
        .map(|g| g.parse::<PromptGroup>())
        .collect::<Result<_, _>>()?;
    if groups.is_empty() {
        return Err(CliError::config("no prompt groups selected"));
    }
    let splits: &[Split] = match split {
        SplitArg::Train => &[Split::Train],
        SplitArg::Test => &[Split::Test],
        SplitArg::Both => &[Split::Train, Split::Test],
    };

    let mut rec = RunRecorder::new(Stage::Prompts, ctx.seed, &ctx.out_dir);
    let key = serde_json::json!({
        "groups": groups,
        "splits": splits,
        "attributes": format!("{attributes:?}"),
        "variation": settings.variation,
    });
    rec.config("prompt", config_hash(&key));

    let mut all = Vec::new();
    let mut counts = Vec::new();
    for &group in &groups {
        let attrs = match attributes {
            AttributesArg::All => load_attribute_catalog(group),
            AttributesArg::Train => split_attributes(group, AttributeSplit::Train),
            AttributesArg::Test => split_attributes(group, AttributeSplit::Test),
        };
        for &s in splits {
            let templates = enumerate_templates(group, s, &settings.variation)?;
            let rendered = render_all(&attrs, &templates)?;
            counts.push(CountRow {
                group: group.to_string(),
                split: s.to_string(),
                attributes: attrs.len(),
                templates: templates.len(),
                prompts: rendered.len(),
            });
            all.extend(rendered);
        }
    }

    let dir = ctx.stage_dir("prompts")?;
    let dump = dir.join("prompts.jsonl");
    write_text(&dump, &write_prompt_dump(&all)?)?;
    rec.output(&dump);
    let counts_path = dir.join("counts.csv");
    write_csv(&counts_path, &counts)?;
    rec.output(&counts_path);
    println!("rendered {} prompts into {}", all.len(), dump.display());
    rec.finish()
}
