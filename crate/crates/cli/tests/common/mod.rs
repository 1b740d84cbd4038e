#![allow(dead_code)]

use std::path::{Path, PathBuf};

use vlbias::curation::{write_jsonl_manifest, BBox, Gender, ImageRecord, Source};
use vlbias::prompts::{
    enumerate_templates, load_attribute_catalog, render_all, write_prompt_dump, PromptGroup, Split, VariationConfig,
};

/// Run the CLI in-process with `--out-dir out`; returns the exit code.
pub fn vlbias(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["vlbias".to_string(), "--out-dir".into(), out.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    vlbias_cli::main_with(argv)
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}

pub fn record(id: String, gender: Gender, source: Source) -> ImageRecord {
    ImageRecord {
        id,
        path: None,
        source,
        gender,
        ethnicity: None,
        age_class: "30-39".into(),
        bbox: source.uses_bbox().then_some(BBox { x: 0.0, y: 0.0, w: 10.0, h: 10.0 }),
        resolution: (64, 64),
        occupation_score: Some(0.0),
        activity: None,
    }
}

/// `per_gender` images of each gender for every source, as a curated JSONL file.
pub fn write_images(path: &Path, per_gender: usize, sources: &[Source]) -> PathBuf {
    let mut recs = Vec::new();
    for &s in sources {
        for g in [Gender::Male, Gender::Female] {
            for i in 0..per_gender {
                recs.push(record(format!("{s}-{}-{i:03}", g.as_str()), g, s));
            }
        }
    }
    std::fs::write(path, write_jsonl_manifest(&recs).unwrap()).unwrap();
    path.to_path_buf()
}

/// Test-split prompts of `group` for the first `attrs` attributes, `per_attr` templates each.
pub fn write_prompts(path: &Path, group: PromptGroup, attrs: usize, per_attr: usize) -> PathBuf {
    let a: Vec<_> = load_attribute_catalog(group).into_iter().take(attrs).collect();
    let t = enumerate_templates(group, Split::Test, &VariationConfig::default()).unwrap();
    let picked: Vec<_> = t.iter().step_by(t.len() / per_attr).take(per_attr).cloned().collect();
    std::fs::write(path, write_prompt_dump(&render_all(&a, &picked).unwrap()).unwrap()).unwrap();
    path.to_path_buf()
}

/// Adapter config for a Beta mock with optional per-attribute (male, female) means.
pub fn beta_adapter(path: &Path, model_id: &str, series: &str, seed: u64, overrides: &[(&str, f64, f64)]) -> PathBuf {
    let mut s = format!(
        "model_id = \"{model_id}\"\nseries = \"{series}\"\n\n[model]\nkind = \"beta\"\nmale_mean = 0.5\nfemale_mean = 0.5\nsd = 0.1\nseed = {seed}\n"
    );
    for (attr, m, f) in overrides {
        s.push_str(&format!("\n[model.overrides.\"{attr}\"]\nmale_mean = {m}\nfemale_mean = {f}\n"));
    }
    std::fs::write(path, s).unwrap();
    path.to_path_buf()
}

pub fn planted_adapter(path: &Path, model_id: &str, delta: f64, planted: &[(String, Gender)]) -> PathBuf {
    let mut s = format!("model_id = \"{model_id}\"\n\n[model]\nkind = \"planted\"\ndelta = {delta}\n\n[model.planted]\n");
    for (attr, g) in planted {
        s.push_str(&format!("\"{attr}\" = \"{}\"\n", g.as_str()));
    }
    std::fs::write(path, s).unwrap();
    path.to_path_buf()
}

/// Source manifest CSV with `per_gender` rows per gender. Every fourth image
/// has an occupation score above 0.25; MIAP and Phase rows carry a bbox.
pub fn write_source_manifest(path: &Path, source: Source, per_gender: usize) -> PathBuf {
    let mut s = String::from("id,path,source,gender,ethnicity,age_class,bbox,activity,width,height,occupation_score\n");
    for g in [Gender::Male, Gender::Female] {
        for i in 0..per_gender {
            let bbox = if source.uses_bbox() { format!("\"0,0,{},80\"", 40 + i % 50) } else { String::new() };
            let score = if i % 4 == 0 { 0.6 } else { 0.05 * (i % 5) as f64 };
            let eth = ["black", "white", "east asian"][i % 3];
            s.push_str(&format!(
                "{source}-{}-{i},img/{i}.jpg,{source},{},{eth},30-39,{bbox},,224,224,{score}\n",
                g.as_str(),
                g.as_str()
            ));
        }
    }
    std::fs::write(path, s).unwrap();
    path.to_path_buf()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Rows of a CSV file as string vectors, header excluded.
pub fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}
