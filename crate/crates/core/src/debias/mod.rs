//! Bias mitigation: equalization-loss fine-tuning (full and low-rank), soft
//! prompt tuning, importance-guided structured pruning and instruction
//! prompts.

mod checkpoint;
mod config;
mod engineer;
mod importance;
mod loss;
mod prune;
mod train;

pub use checkpoint::{read_loss_trace, write_checkpoint, write_loss_trace};
pub use config::{
    DebiasConfig, EarlyStop, EngineerConfig, LoraConfig, Method, Normalization, PromptTuneConfig, PruneConfig,
    Reduction,
};
pub use engineer::{engineer_prompt, DEBIAS_INSTRUCTIONS};
pub use importance::{compute_importance, taylor_importance, unit_importance, ImportanceRow, ImportanceTable};
pub use loss::{equalization_loss, equalization_node, performance_loss, performance_node};
pub use prune::{prune, ModulePrune, PruneReport};
pub use train::{
    batch_loss, finetune, prompt_tune, read_qa_triples, train, QaTriple, StopReason, Target, TrainExample, TrainReport,
};
