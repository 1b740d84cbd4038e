mod common;

use std::collections::BTreeMap;

use common::*;
use vlbias::adapter::read_response_log;
use vlbias::curation::{read_jsonl_manifest, Gender, Source};
use vlbias::prompts::{read_prompt_dump, PromptGroup};
use vlbias_cli::manifest::read_runs;

#[test]
fn missing_manifest_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let code = vlbias(&out, &["curate", "--manifest", &p(&dir.path().join("nope.csv"))]);
    assert_eq!(code, 3);
}

#[test]
fn report_without_analysis_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(vlbias(&out, &["report", "--analysis", &p(&dir.path().join("analysis.json"))]), 2);
    assert_eq!(vlbias(&out, &["correlate", "--analysis", &p(&dir.path().join("analysis.json"))]), 2);
}

#[test]
fn bad_arguments_and_config_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(vlbias(&out, &["curate"]), 2);
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[nonsense]\nx = 1\n").unwrap();
    let m = write_source_manifest(&dir.path().join("pata.csv"), Source::Pata, 10);
    assert_eq!(vlbias(&out, &["--config", &p(&cfg), "curate", "--manifest", &p(&m)]), 2);
    assert_eq!(vlbias(&out, &["curate", "--manifest", &p(&m), "--occupation-threshold", "0"]), 2);
    assert_eq!(vlbias(&out, &["--version"]), 0);
}

#[test]
fn curate_balances_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let manifests: Vec<String> = Source::ALL
        .iter()
        .map(|&s| p(&write_source_manifest(&dir.path().join(format!("{s}.csv")), s, 300)))
        .collect();
    let mut args = vec!["curate", "--per-dataset", "100"];
    for m in &manifests {
        args.extend(["--manifest", m.as_str()]);
    }
    assert_eq!(vlbias(&out, &args), 0);
    let recs = read_jsonl_manifest(&read(&out.join("curate/curated.jsonl"))).unwrap();
    assert_eq!(recs.len(), 500);
    let mut counts: BTreeMap<(Source, Gender), usize> = BTreeMap::new();
    for r in &recs {
        assert!(r.occupation_score.unwrap() <= 0.25);
        *counts.entry((r.source, r.gender)).or_default() += 1;
    }
    assert!(counts.values().all(|&c| c == 50), "{counts:?}");
    let report: serde_json::Value = serde_json::from_str(&read(&out.join("curate/report.json"))).unwrap();
    assert_eq!(report["selected"], 500);
    assert_eq!(report["occupation_removed"], 5 * 2 * 75);

    // a threshold of 1 disables the occupation filter
    let out2 = dir.path().join("out2");
    args.extend(["--occupation-threshold", "1.0"]);
    assert_eq!(vlbias(&out2, &args), 0);
    let recs = read_jsonl_manifest(&read(&out2.join("curate/curated.jsonl"))).unwrap();
    assert_eq!(recs.len(), 500);
    assert!(recs.iter().any(|r| r.occupation_score.unwrap() > 0.25));
}

#[test]
fn prompts_counts_follow_the_variation_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[prompts.variation]\nunsure_synonyms = [\"Unsure\"]\noption_orders = [0, 3]\n").unwrap();
    assert_eq!(vlbias(&out, &["--config", &p(&cfg), "prompts", "--group", "traits", "--split", "both"]), 0);
    let prompts = read_prompt_dump(&read(&out.join("prompts/prompts.jsonl"))).unwrap();
    let rows = csv_rows(&out.join("prompts/counts.csv"));
    let total: usize = rows.iter().map(|r| r[4].parse::<usize>().unwrap()).sum();
    assert_eq!(total, prompts.len());
    // 20 traits, one synonym, two orders; test and train question/instruction grids
    let templates: usize = rows.iter().map(|r| r[3].parse::<usize>().unwrap()).sum();
    assert_eq!(templates, 2 * (3 * 6 + 3 * 5));
    assert_eq!(prompts.len(), 20 * templates);
}

#[test]
fn evaluate_writes_one_line_per_pair_and_reruns_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let images = write_images(&dir.path().join("images.jsonl"), 5, &[Source::Pata]);
    let prompts = write_prompts(&dir.path().join("prompts.jsonl"), PromptGroup::Traits, 1, 6);
    let adapter = beta_adapter(&dir.path().join("a.toml"), "beta-a", "mock", 1, &[]);
    let args = ["evaluate", "--adapter", &p(&adapter), "--images", &p(&images), "--prompts", &p(&prompts)];
    assert_eq!(vlbias(&out, &args), 0);
    let log_path = out.join("evaluate/beta-a.jsonl");
    let first = read(&log_path);
    let log = read_response_log(&first).unwrap();
    assert_eq!(log.responses.len(), 60);
    assert!(!log.truncated);
    assert_eq!(vlbias(&out, &args), 0);
    assert_eq!(read(&log_path), first);

    // interrupted run: keep the header and 25 complete lines plus half a line
    let lines: Vec<&str> = first.lines().collect();
    let mut cut = lines[..26].join("\n");
    cut.push('\n');
    cut.push_str(&lines[26][..lines[26].len() / 2]);
    std::fs::write(&log_path, cut).unwrap();
    assert_eq!(vlbias(&out, &args), 0);
    let resumed = read_response_log(&read(&log_path)).unwrap();
    assert!(!resumed.truncated);
    let key = |r: &vlbias::adapter::OptionResponse| serde_json::to_string(r).unwrap();
    let mut a: Vec<String> = log.responses.iter().map(key).collect();
    let mut b: Vec<String> = resumed.responses.iter().map(key).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);

    // a different model cannot resume this log
    let other = beta_adapter(&dir.path().join("b.toml"), "beta-b", "mock", 1, &[]);
    let code = vlbias(
        &out,
        &["evaluate", "--adapter", &p(&other), "--images", &p(&images), "--prompts", &p(&prompts), "--log", &p(&log_path)],
    );
    assert_ne!(code, 0);
}

#[test]
fn evaluate_with_missing_inputs_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let adapter = beta_adapter(&dir.path().join("a.toml"), "beta-a", "mock", 1, &[]);
    let missing = p(&dir.path().join("missing.jsonl"));
    assert_eq!(vlbias(&out, &["evaluate", "--adapter", &p(&adapter), "--images", &missing, "--prompts", &missing]), 3);
    assert_eq!(vlbias(&out, &["evaluate", "--adapter", &missing, "--images", &missing]), 2);
}

#[test]
fn identical_inputs_give_identical_run_ids_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_source_manifest(&dir.path().join("pata.csv"), Source::Pata, 100);
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        assert_eq!(vlbias(&out, &["--seed", "4", "curate", "--manifest", &p(&manifest), "--per-dataset", "40"]), 0);
        assert_eq!(vlbias(&out, &["prompts", "--group", "skills"]), 0);
        runs.push(read_runs(&out).unwrap());
    }
    assert_eq!(runs[0].len(), 2);
    for (x, y) in runs[0].iter().zip(&runs[1]) {
        assert_eq!(x.run_id, y.run_id);
        let hashes = |m: &vlbias_cli::manifest::RunManifest| m.outputs.iter().map(|a| a.sha256.clone()).collect::<Vec<_>>();
        assert_eq!(hashes(x), hashes(y));
    }
    // another seed is another run
    let out = dir.path().join("c");
    assert_eq!(vlbias(&out, &["--seed", "5", "curate", "--manifest", &p(&manifest), "--per-dataset", "40"]), 0);
    assert_ne!(read_runs(&out).unwrap()[0].run_id, runs[0][0].run_id);
}

/// Evaluate each adapter on the shared images and prompts, then analyze all logs.
fn evaluate_and_analyze(dir: &std::path::Path, adapters: &[std::path::PathBuf], images: &std::path::Path, prompts: &std::path::Path) -> std::path::PathBuf {
    let out = dir.join("out");
    let mut logs = Vec::new();
    for (i, a) in adapters.iter().enumerate() {
        let log = dir.join(format!("log{i}.jsonl"));
        let code = vlbias(&out, &["evaluate", "--adapter", &p(a), "--images", &p(images), "--prompts", &p(prompts), "--log", &p(&log)]);
        assert_eq!(code, 0);
        logs.push(p(&log));
    }
    let mut args = vec!["analyze".to_string(), "--images".into(), p(images), "--prompts".into(), p(prompts)];
    for l in logs {
        args.extend(["--log".to_string(), l]);
    }
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(vlbias(&out, &refs), 0);
    out
}

#[test]
fn strongly_biased_trait_tops_the_male_chart() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_images(&dir.path().join("images.jsonl"), 30, &[Source::Pata, Source::FairFace025]);
    let prompts = write_prompts(&dir.path().join("prompts.jsonl"), PromptGroup::Traits, 20, 3);
    let adapters = [
        beta_adapter(&dir.path().join("a.toml"), "beta-a", "mock", 1, &[("moody", 0.8, 0.3), ("generous", 0.3, 0.7)]),
        beta_adapter(&dir.path().join("b.toml"), "beta-b", "mock", 2, &[("moody", 0.7, 0.4)]),
    ];
    let out = evaluate_and_analyze(dir.path(), &adapters, &images, &prompts);
    assert_eq!(vlbias(&out, &["report", "--analysis", &p(&out.join("analyze/analysis.json")), "--top", "5"]), 0);
    let male = csv_rows(&out.join("report/top_traits_male.csv"));
    assert!(male.len() <= 5);
    assert_eq!(male[0][1], "moody");
    let female = csv_rows(&out.join("report/top_traits_female.csv"));
    assert_eq!(female[0][1], "generous");
    let svg = read(&out.join("report/top_traits_male.svg"));
    let run_id = read_runs(&out).unwrap().pop().unwrap().run_id;
    assert!(svg.contains(&format!("<metadata>run_id={run_id}</metadata>")));
    assert!(svg.contains(">moody<"));

    let stats = csv_rows(&out.join("analyze/stats.csv"));
    let moody: Vec<_> = stats.iter().filter(|r| r[3] == "moody").collect();
    assert_eq!(moody.len(), 2);
    assert!(moody.iter().all(|r| r[12] == "true" && r[13] == "male"));

    assert_eq!(vlbias(&out, &["correlate", "--analysis", &p(&out.join("analyze/analysis.json"))]), 0);
    let corr = csv_rows(&out.join("correlate/gap_correlation_traits.csv"));
    assert_eq!(corr.len(), 2);
    assert_eq!(corr[0][1], "1.000000");
    assert_eq!(corr[0][2], corr[1][1]);
}

#[test]
fn unbiased_models_render_zero_height_bars() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_images(&dir.path().join("images.jsonl"), 20, &[Source::Pata]);
    let prompts = write_prompts(&dir.path().join("prompts.jsonl"), PromptGroup::Skills, 21, 2);
    let adapters = [beta_adapter(&dir.path().join("a.toml"), "flat", "mock", 3, &[])];
    let out = evaluate_and_analyze(dir.path(), &adapters, &images, &prompts);
    let analysis = p(&out.join("analyze/analysis.json"));
    assert_eq!(vlbias(&out, &["report", "--analysis", &analysis]), 0);
    let ranking = csv_rows(&out.join("report/ranking_skills.csv"));
    assert_eq!(ranking, vec![vec!["1".to_string(), "flat".into(), "0.000000".into()]]);
    let svg = read(&out.join("report/ranking_skills.svg"));
    assert!(svg.contains("height=\"0.00\" fill=\"#4a6fa5\""));

    // regeneration is byte-stable
    let files = ["ranking_skills.svg", "heatmap_skills.svg", "heatmap_skills.csv", "top_skills_male.svg"];
    let before: Vec<String> = files.iter().map(|f| read(&out.join("report").join(f))).collect();
    assert_eq!(vlbias(&out, &["report", "--analysis", &analysis]), 0);
    let after: Vec<String> = files.iter().map(|f| read(&out.join("report").join(f))).collect();
    assert_eq!(before, after);
}

#[test]
fn debias_table_lists_percent_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_images(&dir.path().join("images.jsonl"), 20, &[Source::Pata]);
    let prompts = write_prompts(&dir.path().join("prompts.jsonl"), PromptGroup::Traits, 20, 2);
    let names = ["orig", "full", "lora", "prompt", "prune"];
    let adapters: Vec<_> = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let shift = 0.3 - 0.05 * i as f64;
            beta_adapter(&dir.path().join(format!("{n}.toml")), n, "mock", i as u64, &[("moody", 0.5 + shift, 0.5 - shift)])
        })
        .collect();
    let out = evaluate_and_analyze(dir.path(), &adapters, &images, &prompts);
    let bench = dir.path().join("bench.csv");
    let scores = [50.0, 45.0, 55.0, 50.0, 40.0];
    let mut text = String::from("model,benchmark,score\n");
    for (n, s) in names.iter().zip(scores) {
        text.push_str(&format!("{n},mmb,{s}\n"));
    }
    std::fs::write(&bench, text).unwrap();
    let analysis = p(&out.join("analyze/analysis.json"));
    let code = vlbias(&out, &["report", "--analysis", &analysis, "--baseline", "orig", "--benchmarks", &p(&bench)]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out.join("report/debias_table.csv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][0], "orig");
    let delta: BTreeMap<&str, &str> = rows.iter().map(|r| (r[0].as_str(), r[6].as_str())).collect();
    assert_eq!(delta["orig"], "0.00");
    assert_eq!(delta["full"], "-10.00");
    assert_eq!(delta["lora"], "10.00");
    assert_eq!(delta["prune"], "-20.00");
    // traits ratio: one significant attribute out of 20 for every model
    assert!(rows.iter().all(|r| r[1] == "0.050000"), "{rows:?}");
    assert!(read(&out.join("report/debias_table.md")).starts_with("| model | traits |"));

    let code = vlbias(&out, &["report", "--analysis", &analysis, "--baseline", "ghost"]);
    assert_eq!(code, 2);
}

#[test]
fn panels_compare_option_distributions() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_images(&dir.path().join("images.jsonl"), 4, &[Source::Pata]);
    let prompts = write_prompts(&dir.path().join("prompts.jsonl"), PromptGroup::Occupations, 3, 2);
    let adapters = [
        beta_adapter(&dir.path().join("a.toml"), "before", "mock", 1, &[]),
        beta_adapter(&dir.path().join("b.toml"), "after", "mock", 2, &[]),
    ];
    let out = evaluate_and_analyze(dir.path(), &adapters, &images, &prompts);
    let code = vlbias(
        &out,
        &[
            "report",
            "--analysis",
            &p(&out.join("analyze/analysis.json")),
            "--prompts",
            &p(&prompts),
            "--panel-log",
            &p(&dir.path().join("log0.jsonl")),
            "--panel-log",
            &p(&dir.path().join("log1.jsonl")),
        ],
    );
    assert_eq!(code, 0);
    let panels: Vec<_> = std::fs::read_dir(out.join("report"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("panel_") && n.ends_with(".svg"))
        .collect();
    assert_eq!(panels.len(), 2);
}

#[test]
fn planted_occupations_correlate_with_labor_shares() {
    let dir = tempfile::tempdir().unwrap();
    let images = write_images(&dir.path().join("images.jsonl"), 10, &[Source::Pata]);
    let prompts = write_prompts(&dir.path().join("prompts.jsonl"), PromptGroup::Occupations, 40, 2);
    // female-dominated occupations lean female, male-dominated lean male
    let table = vlbias::bias::load_labor_table();
    let planted: Vec<(String, Gender)> = table
        .iter()
        .map(|r| (r.occupation.clone(), if r.pct_female > 50.0 { Gender::Female } else { Gender::Male }))
        .collect();
    let adapters = [planted_adapter(&dir.path().join("a.toml"), "planted", 0.2, &planted)];
    let out = evaluate_and_analyze(dir.path(), &adapters, &images, &prompts);
    assert_eq!(vlbias(&out, &["correlate", "--analysis", &p(&out.join("analyze/analysis.json"))]), 0);
    let rows = csv_rows(&out.join("correlate/labor_correlation.csv"));
    assert_eq!(rows.len(), 1);
    let rho: f64 = rows[0][1].parse().unwrap();
    assert!(rho > 0.5, "{rho}");
    assert_eq!(rows[0][2], "40");
}

fn write_train_prompts(path: &std::path::Path) -> std::path::PathBuf {
    use vlbias::prompts::{enumerate_templates, load_attribute_catalog, render_all, write_prompt_dump, Split, VariationConfig};
    let attrs: Vec<_> = load_attribute_catalog(PromptGroup::Traits).into_iter().take(2).collect();
    let train = enumerate_templates(PromptGroup::Traits, Split::Train, &VariationConfig::default()).unwrap();
    let test = enumerate_templates(PromptGroup::Traits, Split::Test, &VariationConfig::default()).unwrap();
    let mut prompts = render_all(&attrs, &train[..2]).unwrap();
    prompts.extend(render_all(&attrs, &test[..2]).unwrap());
    std::fs::write(path, write_prompt_dump(&prompts).unwrap()).unwrap();
    path.to_path_buf()
}

#[test]
fn debias_methods_write_loadable_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let images = write_images(&dir.path().join("images.jsonl"), 2, &[Source::Pata]);
    let prompts = write_train_prompts(&dir.path().join("prompts.jsonl"));
    let toy = dir.path().join("toy.toml");
    std::fs::write(&toy, "model_id = \"toy\"\n\n[model]\nkind = \"toy\"\n").unwrap();
    let base = ["debias", "--adapter", &p(&toy), "--images", &p(&images), "--prompts", &p(&prompts)];

    let mut args = base.to_vec();
    args.extend(["--method", "full-ft", "--max-steps", "50", "--learning-rate", "0.05"]);
    assert_eq!(vlbias(&out, &args), 0);
    let ckpt: Vec<_> = std::fs::read_dir(out.join("debias"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("full_ft-"))
        .collect();
    assert_eq!(ckpt.len(), 1);
    let followup = ckpt[0].join("adapter.toml");
    assert!(read(&followup).contains("toy+full_ft"));
    let code = vlbias(&out, &["evaluate", "--adapter", &p(&followup), "--images", &p(&images), "--prompts", &p(&prompts)]);
    assert_eq!(code, 0);
    let log = read_response_log(&read(&out.join("evaluate/toy_full_ft.jsonl"))).unwrap();
    assert_eq!(log.responses.len(), 4 * 8);

    // pruning with performance triples
    let qa = dir.path().join("qa.jsonl");
    let mut text = String::new();
    for i in 0..4 {
        text.push_str(&format!(
            "{{\"image_path\":\"qa{i}.jpg\",\"prompt_text\":\"What is shown?\\nA. Cat\\nB. Dog\",\"gold_answer_text\":\"{}\"}}\n",
            if i % 2 == 0 { "A" } else { "B" }
        ));
    }
    std::fs::write(&qa, text).unwrap();
    let mut args = base.to_vec();
    args.extend(["--method", "prune", "--ratio", "0.25", "--qa", qa.to_str().unwrap()]);
    assert_eq!(vlbias(&out, &args), 0);
    let pruned = std::fs::read_dir(out.join("debias"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with("prune-"))
        .unwrap();
    let report: serde_json::Value = serde_json::from_str(&read(&pruned.join("prune_report.json"))).unwrap();
    assert!(!report["removed"].as_array().unwrap().is_empty());
    assert!(csv_rows(&pruned.join("importance.csv")).len() > 4);

    let mut args = base.to_vec();
    args.extend(["--method", "prune"]);
    assert_eq!(vlbias(&out, &args), 2);

    let code = vlbias(&out, &["debias", "--method", "prompt-engineer", "--prompts", &p(&prompts)]);
    assert_eq!(code, 0);
    let engineered = std::fs::read_dir(out.join("debias"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_str().unwrap().starts_with("prompt_engineer-"))
        .unwrap();
    let ep = read_prompt_dump(&read(&engineered.join("prompts.jsonl"))).unwrap();
    assert_eq!(ep.len(), 8);
    assert!(ep.iter().all(|p| p.prompt_id.contains("+d")));

    assert_eq!(vlbias(&out, &["debias", "--method", "full-ft", "--prompts", &p(&prompts)]), 2);
}

#[test]
fn shipped_config_parses() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/pipeline.toml");
    let cfg = vlbias_cli::config::PipelineConfig::load(Some(&path)).unwrap();
    assert_eq!(cfg.curation.occupation_threshold, 0.25);
    assert_eq!(cfg.bias.alpha, 0.001);
    let d = cfg.debias_config(None).unwrap();
    assert_eq!(d.lora.rank, 128);
    assert_eq!(d.early_stop.loss_below, 0.05);
    assert_eq!(cfg.debias_config(Some("prompt_tune")).unwrap().prompt_tune.num_virtual_tokens, 20);
}
