//! Small differentiable models for exercising the debiasing methods on CPU.

mod graph;
mod matrix;
mod tokenizer;
mod toy;

use std::collections::BTreeMap;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use graph::{Gradients, Graph, NodeId};
pub use matrix::Matrix;
pub use tokenizer::Tokenizer;
pub use toy::{synthetic_features, Block, Linear, Lora, ToyConfig, ToyVla};

use crate::adapter::{ModelAdapter, Query};
use crate::Result;

/// Which parameters a training method updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainableSet {
    /// Every weight inside the transformer blocks; embeddings, image projector
    /// and output head stay frozen.
    Blocks,
    Lora,
    Prefix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    MlpChannel,
    AttnHead,
}

/// A prunable structural unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Unit {
    pub layer: usize,
    pub kind: UnitKind,
    pub index: usize,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            UnitKind::MlpChannel => "mlp_channel",
            UnitKind::AttnHead => "attn_head",
        };
        write!(f, "{}/{}/{}", self.layer, kind, self.index)
    }
}

/// Part of a parameter matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSlice {
    Cols(usize, usize),
    Rows(usize, usize),
}

impl ParamSlice {
    pub fn entries(&self, m: &Matrix) -> Vec<usize> {
        match *self {
            ParamSlice::Cols(start, len) => {
                (0..m.rows).flat_map(|r| (start..start + len).map(move |c| r * m.cols + c)).collect()
            }
            ParamSlice::Rows(start, len) => (start * m.cols..(start + len) * m.cols).collect(),
        }
    }
}

/// The parameter entries owned by one unit.
#[derive(Debug, Clone)]
pub struct UnitSlices {
    pub unit: Unit,
    pub parts: Vec<(String, ParamSlice)>,
}

/// Adapters that can be trained and pruned.
pub trait Differentiable: ModelAdapter {
    /// Record the forward pass of `query` on `g`, returning the 1×V
    /// next-token distribution. `rng` enables training-time dropout.
    fn probs_node(&self, g: &mut Graph, query: &Query<'_>, rng: Option<&mut ChaCha8Rng>) -> Result<NodeId>;

    fn trainable_params(&self, set: TrainableSet) -> Result<Vec<String>>;

    fn param(&self, name: &str) -> Option<&Matrix>;

    fn param_mut(&mut self, name: &str) -> Option<&mut Matrix>;

    /// Attach zero-initialised low-rank adapters to every block linear layer,
    /// clamping the rank to each layer's shape. Returns the largest rank used.
    fn attach_lora(&mut self, rank: usize, alpha: f64, dropout: f64, seed: u64) -> Result<usize>;

    fn merge_lora(&mut self) -> Result<()>;

    fn has_lora(&self) -> bool;

    fn lora_state(&self) -> BTreeMap<String, Lora>;

    /// Insert `tokens` zero-initialised learnable embeddings right after BOS.
    fn attach_prefix(&mut self, tokens: usize) -> Result<()>;

    fn structural_units(&self) -> Vec<UnitSlices>;

    fn remove_units(&mut self, units: &[Unit]) -> Result<()>;
}
