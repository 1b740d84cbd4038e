use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use vlbias::adapter::*;
use vlbias::curation::Gender;
use vlbias::prompts::*;
use vlbias::Error;

fn honest(order: usize) -> PromptInstance {
    let a = AttributeQuery::lookup(PromptGroup::Traits, "honest").unwrap();
    let t = PromptTemplateSpec {
        question_variant_id: 4,
        instruction_variant_id: 8,
        unsure_synonym: "Unsure".into(),
        option_order: OPTION_ORDERS[order],
        split: Split::Test,
    };
    render_prompt(&a, &t).unwrap()
}

fn image(id: &str, gender: Gender) -> ImageInput {
    ImageInput { id: id.into(), gender: Some(gender), source: None, label: None, features: None }
}

fn images(n: usize) -> Vec<ImageInput> {
    (0..n).map(|i| image(&format!("img{i:03}"), if i % 2 == 0 { Gender::Male } else { Gender::Female })).collect()
}

fn prompts(n: usize) -> Vec<PromptInstance> {
    let attrs = load_attribute_catalog(PromptGroup::Traits);
    let templates = enumerate_templates(PromptGroup::Traits, Split::Test, &VariationConfig::default()).unwrap();
    render_all(&attrs[..1], &templates[..n]).unwrap()
}

#[test]
fn fixed_mock_passes_through_and_remaps() {
    let mock = FixedMock::new("fixed", &[('A', 0.5), ('B', 0.3), ('C', 0.15)], &[]).unwrap();
    let img = image("x", Gender::Male);
    let r = query_options(&mock, &img, &honest(0)).unwrap();
    assert!((r.p_yes - 0.5).abs() < 1e-12);
    assert!((r.p_no - 0.3).abs() < 1e-12);
    assert!((r.symbol_mass - 0.95).abs() < 1e-12);
    assert_eq!(r.argmax_option, OptionSemantic::Yes);
    // (no, unsure, yes)
    let r = query_options(&mock, &img, &honest(3)).unwrap();
    assert!((r.p_yes - 0.15).abs() < 1e-12);
    assert!((r.p_no - 0.5).abs() < 1e-12);
    assert!((r.p_unsure - 0.3).abs() < 1e-12);
    assert_eq!(r.argmax_option, OptionSemantic::No);
}

#[test]
fn uniform_logits_give_k_over_v() {
    for (v, k) in [(100usize, 1usize), (300, 2), (1000, 7)] {
        let mock = UniformMock::new(v, k).unwrap();
        let r = query_options(&mock, &image("x", Gender::Female), &honest(2)).unwrap();
        let expect = k as f64 / v as f64;
        for p in [r.p_yes, r.p_no, r.p_unsure] {
            assert!((p - expect).abs() < 1e-12, "{p} vs {expect}");
        }
        assert!((r.symbol_mass - 3.0 * expect).abs() < 1e-12);
    }
}

#[test]
fn calibration_and_unsure_examples() {
    let mock = FixedMock::new("m", &[('A', 0.6), ('B', 0.2), ('C', 0.1)], &[]).unwrap();
    let mut rs: Vec<OptionResponse> = (0..2).map(|i| query_options(&mock, &image(&i.to_string(), Gender::Male), &honest(0)).unwrap()).collect();
    rs[0].symbol_mass = 0.9;
    rs[1].symbol_mass = 0.7;
    assert!((calibration_mass(&rs).unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(unsure_ratio(&rs).unwrap(), 0.0);
    assert!(matches!(calibration_mass(&[]), Err(Error::Insufficient(_))));
    assert!(unsure_ratio(&[]).is_err());
}

#[test]
fn constructed_mock_is_unsure_on_even_half() {
    // argmax is "unsure" exactly on even-indexed images
    let mock = FnMock::new("half", |q: &Query<'_>| {
        let idx: usize = q.image.id.trim_start_matches("img").parse().unwrap();
        let p = q.prompt.unwrap();
        let favoured = if idx.is_multiple_of(2) { OptionSemantic::Unsure } else { OptionSemantic::No };
        Ok(OptionSymbol::ALL
            .iter()
            .map(|s| (s.letter(), if p.semantic(*s) == favoured { 0.7 } else { 0.1 }))
            .collect())
    })
    .unwrap();
    let imgs = images(10);
    let ps = prompts(12);
    let mut rs = Vec::new();
    for i in &imgs {
        for p in &ps {
            rs.push(query_options(&mock, i, p).unwrap());
        }
    }
    assert_eq!(unsure_ratio(&rs).unwrap(), 0.5);
}

#[test]
fn oracle_probes() {
    let mut imgs = images(20);
    imgs.push(ImageInput { id: "nolabel".into(), gender: None, source: None, label: None, features: None });
    let good = run_probe(&OracleMock::new(false).unwrap(), &imgs, Probe::Gender).unwrap();
    assert_eq!(good.accuracy, 1.0);
    assert_eq!(good.evaluated, 20);
    assert_eq!(good.skipped.len(), 1);
    assert!((good.calibration_mass - 0.97).abs() < 1e-12);
    let bad = run_probe(&OracleMock::new(true).unwrap(), &imgs, Probe::Gender).unwrap();
    assert_eq!(bad.accuracy, 0.0);

    let occ: Vec<ImageInput> = OCCUPATION_PROBE_LABELS
        .iter()
        .map(|l| ImageInput { id: l.to_string(), gender: None, source: None, label: Some(l.to_string()), features: None })
        .collect();
    assert_eq!(run_probe(&OracleMock::new(false).unwrap(), &occ, Probe::Occupation).unwrap().accuracy, 1.0);
    assert_eq!(run_probe(&OracleMock::new(true).unwrap(), &occ, Probe::Occupation).unwrap().accuracy, 0.0);
}

#[test]
fn bad_distributions_are_transport_errors() {
    let short = FnMock::new("bad", |_q: &Query<'_>| Ok(vec![('A', f64::NAN)])).unwrap();
    assert!(matches!(query_options(&short, &image("x", Gender::Male), &honest(0)), Err(Error::Transport(_))));
}

fn header() -> LogHeader {
    LogHeader {
        model_id: "beta".into(),
        prompt_config_hash: "p".into(),
        curation_hash: "c".into(),
        seed: 1,
        token_policy: "sum".into(),
    }
}

fn beta() -> BetaMock {
    BetaMock::new("beta", GenderBeta::from_moments(0.6, 0.4, 0.1).unwrap(), 5).unwrap()
}

#[test]
fn ten_by_six_then_idempotent_rerun() {
    let dir = tempfile_dir();
    let path = dir.join("responses.jsonl");
    let (imgs, ps) = (images(10), prompts(6));
    let mut w = ResponseLogWriter::open(&path, &header()).unwrap();
    let s = evaluate_pairs(&beta(), &imgs, &ps, &HashSet::new(), &EvalOptions::default(), |r| w.append(&r)).unwrap();
    assert_eq!(s.written, 60);
    drop(w);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 61);
    let mut w = ResponseLogWriter::open(&path, &header()).unwrap();
    let done = w.existing().done_pairs();
    let s = evaluate_pairs(&beta(), &imgs, &ps, &done, &EvalOptions::default(), |r| w.append(&r)).unwrap();
    assert_eq!((s.written, s.skipped_existing), (0, 60));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

/// Adapter that fails permanently after a number of successful calls.
struct Flaky {
    inner: BetaMock,
    budget: AtomicUsize,
}

impl ModelAdapter for Flaky {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        self.inner.symbol_tokens()
    }
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId> {
        self.inner.answer_tokens(answer)
    }
    fn next_token_distribution(&self, query: &Query<'_>) -> vlbias::Result<Vec<f64>> {
        let left = self.budget.fetch_update(Ordering::SeqCst, Ordering::SeqCst, |b| b.checked_sub(1));
        match left {
            Ok(_) => self.inner.next_token_distribution(query),
            Err(_) => Err(Error::Transport("connection reset".into())),
        }
    }
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("vlbias-adapter-{}-{}", std::process::id(), rand_suffix()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn rand_suffix() -> usize {
    static N: AtomicUsize = AtomicUsize::new(0);
    N.fetch_add(1, Ordering::SeqCst)
}

#[test]
fn kill_and_resume_matches_uninterrupted_run() {
    let dir = tempfile_dir();
    let (imgs, ps) = (images(12), prompts(9));
    let opts = EvalOptions { chunk_size: 10, ..Default::default() };

    let full_path = dir.join("full.jsonl");
    let mut w = ResponseLogWriter::open(&full_path, &header()).unwrap();
    evaluate_pairs(&beta(), &imgs, &ps, &HashSet::new(), &opts, |r| w.append(&r)).unwrap();
    drop(w);

    let path = dir.join("resumed.jsonl");
    let flaky = Flaky { inner: beta(), budget: AtomicUsize::new(47) };
    let mut w = ResponseLogWriter::open(&path, &header()).unwrap();
    let err = evaluate_pairs(&flaky, &imgs, &ps, &HashSet::new(), &opts, |r| w.append(&r)).unwrap_err();
    assert!(matches!(err, Error::Transport(_)));
    drop(w);
    // simulate a crash in the middle of a write
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("{\"model_id\":\"beta\",\"ima");
    std::fs::write(&path, text).unwrap();

    let mut w = ResponseLogWriter::open(&path, &header()).unwrap();
    assert!(w.existing().truncated);
    let done = w.existing().done_pairs();
    assert!(!done.is_empty() && done.len() < 108);
    evaluate_pairs(&beta(), &imgs, &ps, &done, &opts, |r| w.append(&r)).unwrap();
    drop(w);

    let a = read_response_log(&std::fs::read_to_string(&full_path).unwrap()).unwrap();
    let b = read_response_log(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(!b.truncated);
    let key = |r: &OptionResponse| serde_json::to_string(r).unwrap();
    let sa: HashSet<String> = a.responses.iter().map(key).collect();
    let sb: HashSet<String> = b.responses.iter().map(key).collect();
    assert_eq!(sa.len(), 108);
    assert_eq!(sb.len(), b.responses.len());
    assert_eq!(sa, sb);
}

#[test]
fn mismatched_header_is_rejected() {
    let dir = tempfile_dir();
    let path = dir.join("r.jsonl");
    drop(ResponseLogWriter::open(&path, &header()).unwrap());
    let mut other = header();
    other.model_id = "someone-else".into();
    assert!(matches!(ResponseLogWriter::open(&path, &other), Err(Error::Config(_))));
}

#[test]
fn chat_templates() {
    let t = ChatTemplate::builtin("plain").unwrap();
    assert_eq!(t.render("Q"), "<image>\nQ");
    assert!(ChatTemplate::new("bad", "{prompt}").is_err());
    assert!(ChatTemplate::new("bad", "<image><image>{prompt}").is_err());
    let (before, after) = ChatTemplate::builtin("llava").unwrap().split_at_image("Q?");
    assert!(after.contains("Q?") || before.contains("Q?"));
}

proptest! {
    #[test]
    fn option_order_permutes_probabilities(a in 0.0f64..0.33, b in 0.0f64..0.33, c in 0.0f64..0.33) {
        let mock = FixedMock::new("m", &[('A', a), ('B', b), ('C', c)], &[]).unwrap();
        let img = image("x", Gender::Male);
        let mut first: Option<Vec<u64>> = None;
        for o in 0..6 {
            let p = honest(o);
            let r = query_options(&mock, &img, &p).unwrap();
            let by_letter = [a, b, c];
            for sym in OptionSymbol::ALL {
                prop_assert!((r.prob(p.semantic(sym)) - by_letter[sym.index()]).abs() < 1e-12);
            }
            prop_assert!(r.symbol_mass + 1e-12 >= r.p_yes + r.p_no + r.p_unsure);
            let mut ms: Vec<u64> = [r.p_yes, r.p_no, r.p_unsure].iter().map(|x| x.to_bits()).collect();
            ms.sort();
            if let Some(f) = &first {
                prop_assert_eq!(f, &ms);
            } else {
                first = Some(ms);
            }
            let best = r.prob(r.argmax_option);
            prop_assert!(best >= r.p_yes && best >= r.p_no && best >= r.p_unsure);
        }
    }

    #[test]
    fn beta_mock_is_deterministic(seed in 0u64..1000, i in 0usize..50) {
        let m = BetaMock::new("b", GenderBeta::from_moments(0.6, 0.4, 0.1).unwrap(), seed).unwrap();
        let img = image(&format!("i{i}"), Gender::Female);
        let p = honest(i % 6);
        prop_assert_eq!(query_options(&m, &img, &p).unwrap(), query_options(&m, &img, &p).unwrap());
    }
}
