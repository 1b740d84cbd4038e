use std::path::{Path, PathBuf};

use serde::Serialize;
use vlbias::adapter::AdapterConfig;
use vlbias::curation::{read_jsonl_manifest, ImageRecord};
use vlbias::prompts::{read_prompt_dump, PromptInstance};

use crate::config::PipelineConfig;
use crate::error::{read_input, CliError, CliResult, Context, ExitClass};

pub mod analyze;
pub mod correlate;
pub mod curate;
pub mod debias;
pub mod evaluate;
pub mod prompts;
pub mod report;

pub struct Ctx {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub config: PipelineConfig,
}

impl Ctx {
    pub fn stage_dir(&self, name: &str) -> CliResult<PathBuf> {
        let dir = self.out_dir.join(name);
        std::fs::create_dir_all(&dir).context(format!("cannot create {}", dir.display()))?;
        Ok(dir)
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).context(format!("cannot write {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).context(format!("cannot write {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a table with a header row given separately (for dynamic columns).
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).context(format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_images(path: &Path) -> CliResult<Vec<ImageRecord>> {
    let text = read_input(path, ExitClass::Data)?;
    read_jsonl_manifest(&text).context(format!("image manifest {}", path.display()))
}

pub fn load_prompts(path: &Path) -> CliResult<Vec<PromptInstance>> {
    let text = read_input(path, ExitClass::Data)?;
    read_prompt_dump(&text).context(format!("prompt dump {}", path.display()))
}

pub fn load_adapter(path: &Path) -> CliResult<AdapterConfig> {
    let text = read_input(path, ExitClass::Config)?;
    AdapterConfig::from_toml(&text).context(format!("adapter config {}", path.display()))
}

/// `id,label` CSV into a map.
pub fn load_labels(path: &Path) -> CliResult<std::collections::BTreeMap<String, String>> {
    let text = read_input(path, ExitClass::Data)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = std::collections::BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        match (row.get(0), row.get(1)) {
            (Some(id), Some(label)) => {
                out.insert(id.to_string(), label.to_string());
            }
            _ => return Err(CliError::data(format!("{}: rows need id and label", path.display()))),
        }
    }
    Ok(out)
}

pub fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}
