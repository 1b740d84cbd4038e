#![allow(dead_code)]

use vlbias::adapter::{ImageInput, ModelAdapter, Query};
use vlbias::curation::Gender;
use vlbias::debias::{train, DebiasConfig, Method, TrainExample};
use vlbias::nn::{ToyConfig, ToyVla, TrainableSet};
use vlbias::prompts::{
    enumerate_templates, load_attribute_catalog, render_all, OptionSemantic, PromptGroup, PromptInstance, Split,
    VariationConfig,
};

pub fn images(n: usize) -> Vec<ImageInput> {
    (0..n)
        .map(|i| ImageInput {
            id: format!("img{i}"),
            gender: Some(if i % 2 == 0 { Gender::Male } else { Gender::Female }),
            source: None,
            label: None,
            features: None,
        })
        .collect()
}

/// Trait prompts with the option order fixed to (yes, no, unsure).
pub fn fixed_order_prompts(split: Split, attributes: usize) -> Vec<PromptInstance> {
    let cfg = VariationConfig {
        unsure_synonyms: Some(vec!["Unsure".into()]),
        option_orders: Some(vec![0]),
        ..Default::default()
    };
    let templates = enumerate_templates(PromptGroup::Traits, split, &cfg).unwrap();
    let attrs: Vec<_> = load_attribute_catalog(PromptGroup::Traits).into_iter().take(attributes).collect();
    render_all(&attrs, &templates[..2]).unwrap()
}

pub fn small_toy(seed: u64) -> ToyVla {
    ToyVla::new("toy", ToyConfig { seed, ..ToyConfig::default() }).unwrap()
}

pub fn yes_prob(model: &ToyVla, image: &ImageInput, prompt: &PromptInstance) -> f64 {
    let d = model.next_token_distribution(&Query { image, text: &prompt.text, prompt: Some(prompt) }).unwrap();
    let letter = prompt.symbol_for(OptionSemantic::Yes).letter();
    model.symbol_tokens().tokens(letter).unwrap().iter().map(|t| d[*t as usize]).sum()
}

pub fn equalize_examples(model: &ToyVla, images: &[ImageInput], prompts: &[PromptInstance]) -> Vec<TrainExample> {
    let mut out = Vec::new();
    for img in images {
        for p in prompts {
            out.push(TrainExample::equalize(model, img.clone(), p).unwrap());
        }
    }
    out
}

/// Train the toy model to answer "yes" with probability above 0.95.
pub fn biased_toy(seed: u64, images: &[ImageInput], prompts: &[PromptInstance]) -> ToyVla {
    let mut model = small_toy(seed);
    let mut examples = Vec::new();
    for img in images {
        for p in prompts {
            let letter = p.symbol_for(OptionSemantic::Yes).letter().to_string();
            examples.push(TrainExample::answer(&model, img.clone(), &p.text, &letter).unwrap());
        }
    }
    let mut cfg = DebiasConfig::defaults(Method::FullFt);
    cfg.learning_rate = 0.05;
    cfg.max_steps = 5000;
    cfg.seed = seed;
    let report = train(&mut model, &examples, TrainableSet::Blocks, &cfg).unwrap();
    assert!(report.final_loss().unwrap() < 0.05, "bias implant did not converge: {:?}", report.final_loss());
    model
}
