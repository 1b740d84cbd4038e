use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{DebiasConfig, Method};
use super::loss::{equalization_node, performance_node};
use crate::adapter::{ImageInput, ModelAdapter, Query};
use crate::nn::{Differentiable, Gradients, Graph, Matrix, TrainableSet};
use crate::prompts::{OptionSemantic, PromptInstance};
use crate::{Error, Result};

/// What a training example optimises.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// Push p(yes) and p(no) towards one half.
    Equalize { yes: Vec<usize>, no: Vec<usize> },
    /// Maximise the probability of the gold answer tokens.
    Answer { tokens: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExample {
    pub image: ImageInput,
    pub text: String,
    pub target: Target,
}

fn ids(tokens: &[u32]) -> Vec<usize> {
    tokens.iter().map(|t| *t as usize).collect()
}

impl TrainExample {
    pub fn equalize(model: &dyn ModelAdapter, image: ImageInput, prompt: &PromptInstance) -> Result<TrainExample> {
        let sets = model.symbol_tokens();
        let yes = ids(sets.tokens(prompt.symbol_for(OptionSemantic::Yes).letter())?);
        let no = ids(sets.tokens(prompt.symbol_for(OptionSemantic::No).letter())?);
        Ok(TrainExample { image, text: prompt.text.clone(), target: Target::Equalize { yes, no } })
    }

    /// A question with a gold answer: either an option letter or answer text
    /// such as "Yes".
    pub fn answer(model: &dyn ModelAdapter, image: ImageInput, text: &str, gold: &str) -> Result<TrainExample> {
        let g = gold.trim();
        let tokens = match g.chars().next() {
            Some(c) if g.len() == 1 && c.is_ascii_uppercase() => ids(model.symbol_tokens().tokens(c)?),
            _ => ids(&model.answer_tokens(g)),
        };
        if tokens.is_empty() {
            return Err(Error::Capability(format!("model {} has no tokens for answer '{gold}'", model.model_id())));
        }
        Ok(TrainExample { image, text: text.to_string(), target: Target::Answer { tokens } })
    }
}

/// A benchmark-style item with a known answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaTriple {
    pub image_path: String,
    pub prompt_text: String,
    pub gold_answer_text: String,
}

impl QaTriple {
    pub fn to_example(&self, model: &dyn ModelAdapter) -> Result<TrainExample> {
        let image = ImageInput { id: self.image_path.clone(), gender: None, source: None, label: None, features: None };
        TrainExample::answer(model, image, &self.prompt_text, &self.gold_answer_text)
    }
}

pub fn read_qa_triples(text: &str) -> Result<Vec<QaTriple>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Into::into))
        .collect()
}

fn example_loss(
    model: &dyn Differentiable,
    g: &mut Graph,
    ex: &TrainExample,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<usize> {
    let probs = model.probs_node(g, &Query { image: &ex.image, text: &ex.text, prompt: None }, rng)?;
    Ok(match &ex.target {
        Target::Equalize { yes, no } => equalization_node(g, probs, yes, no),
        Target::Answer { tokens } => performance_node(g, probs, tokens),
    })
}

/// Mean loss and mean gradients over `batch`.
pub fn batch_loss(
    model: &dyn Differentiable,
    batch: &[&TrainExample],
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Vec<(String, Matrix)>)> {
    let mut total = 0.0;
    let mut acc: Vec<(String, Matrix)> = Vec::new();
    for ex in batch {
        let mut g = Graph::new();
        let out = example_loss(model, &mut g, ex, rng.as_deref_mut())?;
        total += g.scalar(out);
        let grads: Gradients = g.backward(out);
        for (name, m) in grads.iter() {
            match acc.iter_mut().find(|(n, _)| n == name) {
                Some((_, a)) => a.add_assign(m),
                None => acc.push((name.to_string(), m.clone())),
            }
        }
    }
    let n = batch.len() as f64;
    Ok((total / n, acc.into_iter().map(|(k, m)| (k, m.scaled(1.0 / n))).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxSteps,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Parameter updates applied.
    pub steps: usize,
    /// Batch loss at every step (the last one may not have been applied).
    pub trace: Vec<f64>,
    pub stop: StopReason,
    pub trainable: Vec<String>,
    pub trainable_parameters: usize,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<f64> {
        self.trace.last().copied()
    }
}

/// Plain SGD on the `set` parameters. Stops after `max_steps`, when the raw
/// step loss stays below the early-stop threshold for the configured number
/// of consecutive steps, or when it stays above `divergence_factor` times the
/// first loss for `divergence_window` steps (reported, not raised).
pub fn train(
    model: &mut dyn Differentiable,
    examples: &[TrainExample],
    set: TrainableSet,
    config: &DebiasConfig,
) -> Result<TrainReport> {
    config.validate()?;
    let trainable = model.trainable_params(set)?;
    let trainable_parameters = trainable.iter().filter_map(|n| model.param(n)).map(Matrix::len).sum();
    let mut report = TrainReport { steps: 0, trace: Vec::new(), stop: StopReason::MaxSteps, trainable, trainable_parameters };
    if config.max_steps == 0 {
        return Ok(report);
    }
    if examples.is_empty() {
        return Err(Error::Insufficient("no training examples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;
    let (mut below, mut above) = (0usize, 0usize);
    let mut initial = None;
    for step in 0..config.max_steps {
        let mut batch = Vec::with_capacity(config.batch_size);
        for _ in 0..config.batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(&examples[order[cursor]]);
            cursor += 1;
        }
        let (loss, grads) = batch_loss(&*model, &batch, Some(&mut rng))?;
        if !loss.is_finite() {
            report.stop = StopReason::Diverged;
            break;
        }
        report.trace.push(loss);
        let first = *initial.get_or_insert(loss);
        below = if loss < config.early_stop.loss_below { below + 1 } else { 0 };
        if below >= config.early_stop.consecutive {
            report.stop = StopReason::EarlyStop;
            break;
        }
        above = if loss > config.divergence_factor * first { above + 1 } else { 0 };
        if above >= config.divergence_window {
            log::warn!("training diverged at step {step}: loss {loss}");
            report.stop = StopReason::Diverged;
            break;
        }
        for name in &report.trainable {
            let Some((_, g)) = grads.iter().find(|(n, _)| n == name) else { continue };
            let p = model.param_mut(name).ok_or_else(|| Error::Capability(format!("parameter {name} disappeared")))?;
            for (w, d) in p.data.iter_mut().zip(&g.data) {
                *w -= config.learning_rate * d;
            }
        }
        report.steps = step + 1;
    }
    Ok(report)
}

fn differentiable(adapter: &mut dyn ModelAdapter) -> Result<&mut dyn Differentiable> {
    let id = adapter.model_id().to_string();
    adapter
        .as_differentiable_mut()
        .ok_or_else(|| Error::Capability(format!("model {id} does not expose gradients")))
}

/// Full (block weights only) or low-rank fine-tuning with the equalization
/// objective carried by `examples`.
pub fn finetune(adapter: &mut dyn ModelAdapter, examples: &[TrainExample], config: &DebiasConfig) -> Result<TrainReport> {
    let model = differentiable(adapter)?;
    match config.method {
        Method::FullFt => train(model, examples, TrainableSet::Blocks, config),
        Method::LoraFt => {
            if !model.has_lora() {
                model.attach_lora(config.lora.rank, config.lora.alpha, config.lora.dropout, config.seed)?;
            }
            train(model, examples, TrainableSet::Lora, config)
        }
        m => Err(Error::Config(format!("finetune does not implement method {m}"))),
    }
}

/// Learn a soft prefix inserted after BOS while the model stays frozen.
pub fn prompt_tune(adapter: &mut dyn ModelAdapter, examples: &[TrainExample], config: &DebiasConfig) -> Result<TrainReport> {
    let model = differentiable(adapter)?;
    if !config.prompt_tune.insert_after_bos {
        return Err(Error::Capability("soft prefixes can only be inserted after BOS".into()));
    }
    if model.param("prefix").is_none() {
        model.attach_prefix(config.prompt_tune.num_virtual_tokens)?;
    }
    train(model, examples, TrainableSet::Prefix, config)
}
