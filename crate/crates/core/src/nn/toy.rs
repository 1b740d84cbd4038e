//! A small decoder-only vision-language model: one projected image token
//! spliced into a causal transformer over hashed word tokens.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::graph::{Graph, NodeId};
use super::tokenizer::{Tokenizer, BOS, LETTERS};
use super::{Differentiable, Matrix, ParamSlice, TrainableSet, Unit, UnitKind, UnitSlices};
use crate::adapter::{ChatTemplate, FeatureSource, ImageInput, ModelAdapter, Query, SymbolTokenSets, TokenId};
use crate::curation::Gender;
use crate::hashing::{fnv_parts, unit_interval};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub heads: usize,
    pub mlp_hidden: usize,
    pub layers: usize,
    pub feature_dim: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { vocab_size: 64, d_model: 16, heads: 4, mlp_hidden: 32, layers: 2, feature_dim: 4, seed: 0 }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.heads == 0 || !self.d_model.is_multiple_of(self.heads) {
            return Err(Error::Config("d_model must be a positive multiple of heads".into()));
        }
        if self.layers == 0 || self.mlp_hidden == 0 || self.feature_dim == 0 {
            return Err(Error::Config("toy model dimensions must be positive".into()));
        }
        Tokenizer::new(self.vocab_size).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lora {
    pub a: Matrix,
    pub b: Matrix,
    pub alpha: f64,
    pub dropout: f64,
}

impl Lora {
    pub fn rank(&self) -> usize {
        self.a.cols
    }

    pub fn scale(&self) -> f64 {
        self.alpha / self.rank() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    /// in × out
    pub w: Matrix,
    /// 1 × out
    pub b: Option<Matrix>,
    pub lora: Option<Lora>,
}

impl Linear {
    fn init(rng: &mut ChaCha8Rng, inp: usize, out: usize, bias: bool) -> Linear {
        let std = 1.0 / (inp as f64).sqrt();
        Linear { w: normal(rng, inp, out, std), b: bias.then(|| Matrix::zeros(1, out)), lora: None }
    }

    fn forward(&self, g: &mut Graph, name: &str, x: NodeId, rng: Option<&mut ChaCha8Rng>) -> NodeId {
        let w = g.param(&format!("{name}.w"), self.w.clone());
        let mut y = g.matmul(x, w);
        if let Some(lora) = &self.lora {
            let mut xin = x;
            if let Some(rng) = rng {
                if lora.dropout > 0.0 {
                    let shape = g.value(x);
                    let keep = 1.0 - lora.dropout;
                    let mask = Matrix::from_fn(shape.rows, shape.cols, |_, _| {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    xin = g.mul_const(x, mask);
                }
            }
            let a = g.param(&format!("{name}.lora_a"), lora.a.clone());
            let b = g.param(&format!("{name}.lora_b"), lora.b.clone());
            let h = g.matmul(xin, a);
            let h = g.matmul(h, b);
            let h = g.scale(h, lora.scale());
            y = g.add(y, h);
        }
        if let Some(bias) = &self.b {
            let b = g.param(&format!("{name}.b"), bias.clone());
            y = g.add_row(y, b);
        }
        y
    }

    fn merge(&mut self) {
        if let Some(lora) = self.lora.take() {
            let delta = lora.a.matmul(&lora.b).scaled(lora.scale());
            self.w.add_assign(&delta);
        }
    }
}

fn normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize, std: f64) -> Matrix {
    let n = Normal::new(0.0, std).expect("positive std");
    Matrix::from_fn(rows, cols, |_, _| n.sample(rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub heads: usize,
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub up: Linear,
    pub down: Linear,
}

impl Block {
    fn linears(&self) -> [(&'static str, &Linear); 6] {
        [("attn.q", &self.q), ("attn.k", &self.k), ("attn.v", &self.v), ("attn.o", &self.o), ("mlp.up", &self.up), ("mlp.down", &self.down)]
    }

    fn linears_mut(&mut self) -> [(&'static str, &mut Linear); 6] {
        [
            ("attn.q", &mut self.q),
            ("attn.k", &mut self.k),
            ("attn.v", &mut self.v),
            ("attn.o", &mut self.o),
            ("mlp.up", &mut self.up),
            ("mlp.down", &mut self.down),
        ]
    }

    pub fn mlp_width(&self) -> usize {
        self.up.w.cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyVla {
    pub model_id: String,
    pub config: ToyConfig,
    pub head_dim: usize,
    pub embed: Matrix,
    pub image_proj: Matrix,
    pub blocks: Vec<Block>,
    pub lm_head: Matrix,
    pub prefix: Option<Matrix>,
    pub chat_template: ChatTemplate,
    pub features: FeatureSource,
    tokenizer: Tokenizer,
    symbols: SymbolTokenSets,
}

/// Deterministic stand-in image features: the first component encodes the
/// gender label, the rest are hashed from the image id.
pub fn synthetic_features(image: &ImageInput, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| {
            if i == 0 {
                match image.gender {
                    Some(Gender::Male) => 1.0,
                    Some(Gender::Female) => -1.0,
                    None => 0.0,
                }
            } else {
                2.0 * unit_interval(fnv_parts(&[&image.id, &i.to_string()])) - 1.0
            }
        })
        .collect()
}

impl ToyVla {
    pub fn new(model_id: &str, config: ToyConfig) -> Result<ToyVla> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.d_model;
        let blocks = (0..config.layers)
            .map(|_| Block {
                heads: config.heads,
                q: Linear::init(&mut rng, d, d, false),
                k: Linear::init(&mut rng, d, d, false),
                v: Linear::init(&mut rng, d, d, false),
                o: Linear::init(&mut rng, d, d, false),
                up: Linear::init(&mut rng, d, config.mlp_hidden, true),
                down: Linear::init(&mut rng, config.mlp_hidden, d, false),
            })
            .collect();
        let tokenizer = Tokenizer::new(config.vocab_size)?;
        let sets = (0..LETTERS)
            .map(|i| {
                let letter = (b'A' + i as u8) as char;
                let ids = Tokenizer::letter_ids(letter).expect("letter in range");
                (letter, ids.iter().map(|x| *x as TokenId).collect())
            })
            .collect();
        Ok(ToyVla {
            model_id: model_id.to_string(),
            head_dim: d / config.heads,
            embed: normal(&mut rng, config.vocab_size, d, 0.5),
            image_proj: normal(&mut rng, config.feature_dim, d, 1.0 / (config.feature_dim as f64).sqrt()),
            blocks,
            lm_head: normal(&mut rng, d, config.vocab_size, 1.0 / (d as f64).sqrt()),
            prefix: None,
            chat_template: ChatTemplate::default(),
            features: FeatureSource::Synthetic,
            tokenizer,
            symbols: SymbolTokenSets::new(sets)?,
            config,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<ToyVla> {
        let text = std::fs::read_to_string(path)?;
        let model: ToyVla = serde_json::from_str(&text)?;
        model.config.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    fn image_features(&self, image: &ImageInput) -> Result<Vec<f64>> {
        let f = match (&image.features, self.features) {
            (Some(f), _) => f.clone(),
            (None, FeatureSource::Synthetic) => synthetic_features(image, self.config.feature_dim),
            (None, FeatureSource::Provided) => {
                return Err(Error::Data(format!("image {} has no features", image.id)));
            }
        };
        if f.len() != self.config.feature_dim {
            return Err(Error::Data(format!(
                "image {} has {} features, model expects {}",
                image.id,
                f.len(),
                self.config.feature_dim
            )));
        }
        Ok(f)
    }

    /// Sequence length seen by the model for a query (including BOS, prefix and image).
    pub fn sequence_len(&self, text: &str) -> usize {
        let (before, after) = self.chat_template.split_at_image(text);
        1 + self.prefix.as_ref().map_or(0, |p| p.rows) + self.tokenizer.encode(&before).len() + 1 + self.tokenizer.encode(&after).len()
    }

    fn attention(&self, g: &mut Graph, l: usize, x: NodeId, rng: &mut Option<&mut ChaCha8Rng>) -> NodeId {
        let block = &self.blocks[l];
        let name = |s: &str| format!("blocks.{l}.{s}");
        let q = block.q.forward(g, &name("attn.q"), x, rng.as_deref_mut());
        let k = block.k.forward(g, &name("attn.k"), x, rng.as_deref_mut());
        let v = block.v.forward(g, &name("attn.v"), x, rng.as_deref_mut());
        let hd = self.head_dim;
        let heads: Vec<NodeId> = (0..block.heads)
            .map(|h| {
                let qh = g.slice_cols(q, h * hd, hd);
                let kh = g.slice_cols(k, h * hd, hd);
                let vh = g.slice_cols(v, h * hd, hd);
                let kt = g.transpose(kh);
                let s = g.matmul(qh, kt);
                let s = g.scale(s, 1.0 / (hd as f64).sqrt());
                let a = g.causal_softmax(s);
                g.matmul(a, vh)
            })
            .collect();
        let cat = g.concat_cols(&heads);
        block.o.forward(g, &name("attn.o"), cat, rng.as_deref_mut())
    }

    fn mlp(&self, g: &mut Graph, l: usize, x: NodeId, rng: &mut Option<&mut ChaCha8Rng>) -> NodeId {
        let block = &self.blocks[l];
        let h = block.up.forward(g, &format!("blocks.{l}.mlp.up"), x, rng.as_deref_mut());
        let h = g.silu(h);
        block.down.forward(g, &format!("blocks.{l}.mlp.down"), h, rng.as_deref_mut())
    }

    fn forward(&self, g: &mut Graph, query: &Query<'_>, mut rng: Option<&mut ChaCha8Rng>) -> Result<NodeId> {
        let feats = self.image_features(query.image)?;
        let (before, after) = self.chat_template.split_at_image(query.text);
        let head_ids = [BOS];
        let before_ids = self.tokenizer.encode(&before);
        let after_ids = self.tokenizer.encode(&after);

        let embed = g.param("embed", self.embed.clone());
        let proj = g.param("image_proj", self.image_proj.clone());
        let mut parts = Vec::new();
        parts.push(g.gather(embed, &head_ids));
        if let Some(p) = &self.prefix {
            parts.push(g.param("prefix", p.clone()));
        }
        if !before_ids.is_empty() {
            parts.push(g.gather(embed, &before_ids));
        }
        let f = g.input(Matrix::row_vector(feats));
        parts.push(g.matmul(f, proj));
        if !after_ids.is_empty() {
            parts.push(g.gather(embed, &after_ids));
        }
        let mut x = g.concat_rows(&parts);
        for l in 0..self.blocks.len() {
            let a = self.attention(g, l, x, &mut rng);
            x = g.add(x, a);
            let m = self.mlp(g, l, x, &mut rng);
            x = g.add(x, m);
        }
        let n = g.value(x).rows;
        let last = g.slice_rows(x, n - 1, 1);
        let head = g.param("lm_head", self.lm_head.clone());
        let logits = g.matmul(last, head);
        Ok(g.softmax(logits))
    }

    fn linear_mut(&mut self, name: &str) -> Option<&mut Linear> {
        let rest = name.strip_prefix("blocks.")?;
        let (l, lin) = rest.split_once('.')?;
        let block = self.blocks.get_mut(l.parse::<usize>().ok()?)?;
        block.linears_mut().into_iter().find(|(n, _)| *n == lin).map(|(_, x)| x)
    }

    fn linear(&self, name: &str) -> Option<&Linear> {
        let rest = name.strip_prefix("blocks.")?;
        let (l, lin) = rest.split_once('.')?;
        let block = self.blocks.get(l.parse::<usize>().ok()?)?;
        block.linears().into_iter().find(|(n, _)| *n == lin).map(|(_, x)| x)
    }
}

fn split_param(name: &str) -> Option<(&str, &str)> {
    name.rsplit_once('.')
}

impl ModelAdapter for ToyVla {
    fn model_id(&self) -> &str {
        &self.model_id
    }
    fn vocab_size(&self) -> usize {
        self.config.vocab_size
    }
    fn symbol_tokens(&self) -> &SymbolTokenSets {
        &self.symbols
    }
    fn answer_tokens(&self, answer: &str) -> Vec<TokenId> {
        let ids = self.tokenizer.encode(answer);
        match ids.first() {
            Some(first) => match Tokenizer::letter_ids(answer.trim().chars().next().unwrap_or(' ')) {
                Some(pair) if answer.trim().len() == 1 => pair.iter().map(|x| *x as TokenId).collect(),
                _ => vec![*first as TokenId],
            },
            None => Vec::new(),
        }
    }
    fn next_token_distribution(&self, query: &Query<'_>) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let out = self.forward(&mut g, query, None)?;
        Ok(g.value(out).data.clone())
    }
    fn max_in_flight(&self) -> usize {
        4
    }
    fn as_differentiable(&self) -> Option<&dyn Differentiable> {
        Some(self)
    }
    fn as_differentiable_mut(&mut self) -> Option<&mut dyn Differentiable> {
        Some(self)
    }
}

impl Differentiable for ToyVla {
    fn probs_node(&self, g: &mut Graph, query: &Query<'_>, rng: Option<&mut ChaCha8Rng>) -> Result<NodeId> {
        self.forward(g, query, rng)
    }

    fn trainable_params(&self, set: TrainableSet) -> Result<Vec<String>> {
        let mut out = Vec::new();
        match set {
            TrainableSet::Blocks => {
                for (l, b) in self.blocks.iter().enumerate() {
                    for (n, lin) in b.linears() {
                        out.push(format!("blocks.{l}.{n}.w"));
                        if lin.b.is_some() {
                            out.push(format!("blocks.{l}.{n}.b"));
                        }
                    }
                }
            }
            TrainableSet::Lora => {
                for (l, b) in self.blocks.iter().enumerate() {
                    for (n, lin) in b.linears() {
                        if lin.lora.is_some() {
                            out.push(format!("blocks.{l}.{n}.lora_a"));
                            out.push(format!("blocks.{l}.{n}.lora_b"));
                        }
                    }
                }
                if out.is_empty() {
                    return Err(Error::Capability("no low-rank adapters attached".into()));
                }
            }
            TrainableSet::Prefix => {
                if self.prefix.is_none() {
                    return Err(Error::Capability("no soft prefix attached".into()));
                }
                out.push("prefix".to_string());
            }
        }
        Ok(out)
    }

    fn param(&self, name: &str) -> Option<&Matrix> {
        match name {
            "embed" => Some(&self.embed),
            "image_proj" => Some(&self.image_proj),
            "lm_head" => Some(&self.lm_head),
            "prefix" => self.prefix.as_ref(),
            _ => {
                let (lin, kind) = split_param(name)?;
                let lin = self.linear(lin)?;
                match kind {
                    "w" => Some(&lin.w),
                    "b" => lin.b.as_ref(),
                    "lora_a" => lin.lora.as_ref().map(|l| &l.a),
                    "lora_b" => lin.lora.as_ref().map(|l| &l.b),
                    _ => None,
                }
            }
        }
    }

    fn param_mut(&mut self, name: &str) -> Option<&mut Matrix> {
        match name {
            "embed" => Some(&mut self.embed),
            "image_proj" => Some(&mut self.image_proj),
            "lm_head" => Some(&mut self.lm_head),
            "prefix" => self.prefix.as_mut(),
            _ => {
                let (lin, kind) = split_param(name)?;
                let lin = self.linear_mut(lin)?;
                match kind {
                    "w" => Some(&mut lin.w),
                    "b" => lin.b.as_mut(),
                    "lora_a" => lin.lora.as_mut().map(|l| &mut l.a),
                    "lora_b" => lin.lora.as_mut().map(|l| &mut l.b),
                    _ => None,
                }
            }
        }
    }

    fn attach_lora(&mut self, rank: usize, alpha: f64, dropout: f64, seed: u64) -> Result<usize> {
        if rank == 0 {
            return Err(Error::Config("LoRA rank must be positive".into()));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Config("LoRA dropout must be in [0, 1)".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_rank = 0;
        for (l, block) in self.blocks.iter_mut().enumerate() {
            for (n, lin) in block.linears_mut() {
                let (inp, out) = (lin.w.rows, lin.w.cols);
                let r = rank.min(inp).min(out);
                if r < rank {
                    log::warn!("LoRA rank {rank} clamped to {r} on blocks.{l}.{n} ({inp}x{out})");
                }
                max_rank = max_rank.max(r);
                lin.lora = Some(Lora {
                    a: normal(&mut rng, inp, r, 1.0 / (inp as f64).sqrt()),
                    b: Matrix::zeros(r, out),
                    alpha,
                    dropout,
                });
            }
        }
        Ok(max_rank)
    }

    fn merge_lora(&mut self) -> Result<()> {
        for block in &mut self.blocks {
            for (_, lin) in block.linears_mut() {
                lin.merge();
            }
        }
        Ok(())
    }

    fn has_lora(&self) -> bool {
        self.blocks.iter().any(|b| b.linears().iter().any(|(_, l)| l.lora.is_some()))
    }

    fn lora_state(&self) -> BTreeMap<String, Lora> {
        let mut out = BTreeMap::new();
        for (l, b) in self.blocks.iter().enumerate() {
            for (n, lin) in b.linears() {
                if let Some(lora) = &lin.lora {
                    out.insert(format!("blocks.{l}.{n}"), lora.clone());
                }
            }
        }
        out
    }

    fn attach_prefix(&mut self, tokens: usize) -> Result<()> {
        if tokens == 0 {
            return Err(Error::Config("prefix needs at least one virtual token".into()));
        }
        self.prefix = Some(Matrix::zeros(tokens, self.config.d_model));
        Ok(())
    }

    fn structural_units(&self) -> Vec<UnitSlices> {
        let mut out = Vec::new();
        for (l, b) in self.blocks.iter().enumerate() {
            let hd = self.head_dim;
            for h in 0..b.heads {
                let cols = ParamSlice::Cols(h * hd, hd);
                out.push(UnitSlices {
                    unit: Unit { layer: l, kind: UnitKind::AttnHead, index: h },
                    parts: vec![
                        (format!("blocks.{l}.attn.q.w"), cols),
                        (format!("blocks.{l}.attn.k.w"), cols),
                        (format!("blocks.{l}.attn.v.w"), cols),
                        (format!("blocks.{l}.attn.o.w"), ParamSlice::Rows(h * hd, hd)),
                    ],
                });
            }
            for c in 0..b.mlp_width() {
                out.push(UnitSlices {
                    unit: Unit { layer: l, kind: UnitKind::MlpChannel, index: c },
                    parts: vec![
                        (format!("blocks.{l}.mlp.up.w"), ParamSlice::Cols(c, 1)),
                        (format!("blocks.{l}.mlp.up.b"), ParamSlice::Cols(c, 1)),
                        (format!("blocks.{l}.mlp.down.w"), ParamSlice::Rows(c, 1)),
                    ],
                });
            }
        }
        out
    }

    fn remove_units(&mut self, units: &[Unit]) -> Result<()> {
        if self.has_lora() {
            return Err(Error::Prune("merge or drop low-rank adapters before pruning".into()));
        }
        let hd = self.head_dim;
        for (l, block) in self.blocks.iter_mut().enumerate() {
            let drop = |kind: UnitKind| -> Vec<usize> {
                units.iter().filter(|u| u.layer == l && u.kind == kind).map(|u| u.index).collect()
            };
            let heads_gone = drop(UnitKind::AttnHead);
            let chans_gone = drop(UnitKind::MlpChannel);
            if heads_gone.iter().any(|h| *h >= block.heads) || chans_gone.iter().any(|c| *c >= block.mlp_width()) {
                return Err(Error::Prune(format!("unit index out of range in block {l}")));
            }
            let keep_heads: Vec<usize> = (0..block.heads).filter(|h| !heads_gone.contains(h)).collect();
            let keep_chans: Vec<usize> = (0..block.mlp_width()).filter(|c| !chans_gone.contains(c)).collect();
            if keep_heads.is_empty() || keep_chans.is_empty() {
                return Err(Error::Prune(format!("pruning would remove every unit of a module in block {l}")));
            }
            if !heads_gone.is_empty() {
                let cols: Vec<usize> = keep_heads.iter().flat_map(|h| h * hd..(h + 1) * hd).collect();
                block.q.w = block.q.w.select_cols(&cols);
                block.k.w = block.k.w.select_cols(&cols);
                block.v.w = block.v.w.select_cols(&cols);
                block.o.w = block.o.w.select_rows(&cols);
                block.heads = keep_heads.len();
            }
            if !chans_gone.is_empty() {
                block.up.w = block.up.w.select_cols(&keep_chans);
                block.up.b = block.up.b.as_ref().map(|b| b.select_cols(&keep_chans));
                block.down.w = block.down.w.select_rows(&keep_chans);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image(g: Gender) -> ImageInput {
        ImageInput { id: "img".into(), gender: Some(g), source: None, label: None, features: None }
    }

    #[test]
    fn distribution_is_normalised() {
        let m = ToyVla::new("toy", ToyConfig::default()).unwrap();
        let img = image(Gender::Female);
        let q = Query { image: &img, text: "Is this person kind?\nA. Yes\nB. No\nC. Unsure", prompt: None };
        let d = m.next_token_distribution(&q).unwrap();
        assert_eq!(d.len(), 64);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let m = ToyVla::new("toy", ToyConfig { seed: 9, ..ToyConfig::default() }).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        let back: ToyVla = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
    }
}
