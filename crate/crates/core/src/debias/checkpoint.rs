use std::path::{Path, PathBuf};

use super::config::{DebiasConfig, Method};
use super::train::TrainReport;
use crate::nn::{Differentiable, ToyVla};
use crate::{Error, Result};

pub fn write_loss_trace(trace: &[f64]) -> String {
    let mut out = String::from("step,loss\n");
    for (i, l) in trace.iter().enumerate() {
        out.push_str(&format!("{i},{l}\n"));
    }
    out
}

pub fn read_loss_trace(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .nth(1)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Data(format!("bad loss trace line '{l}'")))
        })
        .collect()
}

/// Write a method-tagged checkpoint directory under `root`: the config and
/// its hash, the loss trace, the full model, and for low-rank or prefix
/// methods the standalone adapter or prefix.
pub fn write_checkpoint(root: &Path, config: &DebiasConfig, report: Option<&TrainReport>, model: &ToyVla) -> Result<PathBuf> {
    let hash = config.hash();
    let dir = root.join(format!("{}-{}", config.method, &hash[..12]));
    std::fs::create_dir_all(&dir)?;
    let meta = serde_json::json!({ "config_hash": hash, "config": config, "model_id": model.model_id });
    std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(&meta)?)?;
    if let Some(r) = report {
        std::fs::write(dir.join("loss_trace.csv"), write_loss_trace(&r.trace))?;
        std::fs::write(dir.join("train_report.json"), serde_json::to_string_pretty(r)?)?;
    }
    match config.method {
        Method::LoraFt => std::fs::write(dir.join("lora.json"), serde_json::to_string(&model.lora_state())?)?,
        Method::PromptTune => {
            if let Some(p) = &model.prefix {
                std::fs::write(dir.join("prefix.json"), serde_json::to_string(p)?)?;
            }
        }
        _ => {}
    }
    model.save(&dir.join("model.json"))?;
    Ok(dir)
}
