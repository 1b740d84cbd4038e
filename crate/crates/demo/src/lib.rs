//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; failures come back as `{"error": "..."}`
//! so the page needs no exception handling.

use serde_json::{json, Value};
use vlbias::adapter::{BetaMock, GenderBeta};
use vlbias::curation::{Contingency, Gender};
use vlbias::prompts::{enumerate_templates, load_attribute_catalog, render_prompt, PromptGroup, Split, VariationConfig};
use vlbias::stats::{mean, two_sample_test};
use wasm_bindgen::prelude::*;

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn parse_group(group: &str) -> Result<PromptGroup, String> {
    group.parse::<PromptGroup>().map_err(|e| e.to_string())
}

/// Attribute names of a prompt group and the number of test templates.
#[wasm_bindgen]
pub fn catalog(group: &str) -> String {
    respond((|| {
        let g = parse_group(group)?;
        let attrs: Vec<String> = load_attribute_catalog(g).into_iter().map(|a| a.attribute).collect();
        let templates = enumerate_templates(g, Split::Test, &VariationConfig::default()).map_err(|e| e.to_string())?;
        Ok(json!({ "attributes": attrs, "templates": templates.len() }))
    })())
}

/// Render test template `index` of `group` for `attribute`.
#[wasm_bindgen]
pub fn render(group: &str, attribute: &str, index: usize) -> String {
    respond((|| {
        let g = parse_group(group)?;
        let attr = load_attribute_catalog(g)
            .into_iter()
            .find(|a| a.attribute == attribute)
            .ok_or_else(|| format!("'{attribute}' is not in the {g} catalog"))?;
        let templates = enumerate_templates(g, Split::Test, &VariationConfig::default()).map_err(|e| e.to_string())?;
        let spec = templates.get(index).ok_or_else(|| format!("template {index} out of range 0..{}", templates.len()))?;
        let p = render_prompt(&attr, spec).map_err(|e| e.to_string())?;
        let yes = p.symbol_for(vlbias::prompts::OptionSemantic::Yes).letter().to_string();
        Ok(json!({ "text": p.text, "prompt_id": p.prompt_id, "yes_letter": yes }))
    })())
}

/// Draw p(yes) for `n` images of each gender from Beta distributions whose
/// means differ by `delta` (male higher) with spread `sigma`, then run the
/// Welch test at level `alpha`.
#[wasm_bindgen]
pub fn simulate_bias_test(delta: f64, sigma: f64, n: usize, alpha: f64, seed: u64) -> String {
    respond((|| {
        if !(2..=100_000).contains(&n) {
            return Err(format!("n must be between 2 and 100000, got {n}"));
        }
        let beta = GenderBeta::from_moments(0.5 + delta / 2.0, 0.5 - delta / 2.0, sigma).map_err(|e| e.to_string())?;
        let mock = BetaMock::new("demo", beta, seed).map_err(|e| e.to_string())?;
        let male: Vec<f64> = (0..n).map(|i| mock.draw(None, Gender::Male, &format!("m{i}"), "demo")).collect();
        let female: Vec<f64> = (0..n).map(|i| mock.draw(None, Gender::Female, &format!("f{i}"), "demo")).collect();
        let t = two_sample_test(&male, &female).map_err(|e| e.to_string())?;
        let (mm, mf) = (mean(&male), mean(&female));
        Ok(json!({
            "mu_male": mm,
            "mu_female": mf,
            "gap": mm - mf,
            "t": t.t,
            "df": t.df,
            "p": t.p,
            "significant": t.p < alpha,
        }))
    })())
}

/// Cohen's kappa of two binary annotators from their 2x2 counts.
#[wasm_bindgen]
pub fn kappa_from_counts(yes_yes: u32, yes_no: u32, no_yes: u32, no_no: u32) -> String {
    respond((|| {
        let c = Contingency { yes_yes: yes_yes.into(), yes_no: yes_no.into(), no_yes: no_yes.into(), no_no: no_no.into() };
        let a = c.kappa().map_err(|e| e.to_string())?;
        Ok(json!({ "kappa": a.kappa, "agreement": a.accuracy }))
    })())
}
