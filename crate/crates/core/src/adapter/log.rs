//! JSONL response logs with a run header line.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::OptionResponse;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogHeader {
    pub model_id: String,
    pub prompt_config_hash: String,
    pub curation_hash: String,
    pub seed: u64,
    pub token_policy: String,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    header: LogHeader,
}

#[derive(Debug, Clone, Default)]
pub struct ResponseLog {
    pub header: Option<LogHeader>,
    pub responses: Vec<OptionResponse>,
    /// The last line was incomplete and ignored.
    pub truncated: bool,
}

impl ResponseLog {
    pub fn done_pairs(&self) -> HashSet<(String, String)> {
        self.responses.iter().map(|r| (r.image_id.clone(), r.prompt_id.clone())).collect()
    }
}

/// Parse a log. An unparsable final line without a trailing newline is
/// treated as an interrupted write; anywhere else it is a data error.
pub fn read_response_log(text: &str) -> Result<ResponseLog> {
    let mut log = ResponseLog::default();
    let lines: Vec<&str> = text.split('\n').collect();
    let last = lines.len() - 1;
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with("{\"header\"") {
            match serde_json::from_str::<HeaderLine>(line) {
                Ok(h) if log.header.is_none() && log.responses.is_empty() => {
                    log.header = Some(h.header);
                    continue;
                }
                Ok(_) => return Err(Error::Data(format!("unexpected header at line {}", i + 1))),
                Err(_) if i == last => {
                    log.truncated = true;
                    continue;
                }
                Err(e) => return Err(Error::Data(format!("bad header at line {}: {e}", i + 1))),
            }
        }
        match serde_json::from_str::<OptionResponse>(line) {
            Ok(r) => log.responses.push(r),
            Err(_) if i == last => log.truncated = true,
            Err(e) => return Err(Error::Data(format!("bad response at line {}: {e}", i + 1))),
        }
    }
    Ok(log)
}

/// Append-only writer. Opening an existing log checks its header and drops
/// a partially written final line.
pub struct ResponseLogWriter {
    file: File,
    existing: ResponseLog,
}

impl ResponseLogWriter {
    pub fn open(path: &Path, header: &LogHeader) -> Result<ResponseLogWriter> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e.into()),
        };
        let existing = read_response_log(&text)?;
        if let Some(h) = &existing.header {
            if h != header {
                return Err(Error::Config(format!(
                    "{} was written by a different run configuration (model {}, prompts {})",
                    path.display(),
                    h.model_id,
                    h.prompt_config_hash
                )));
            }
        }
        if existing.truncated {
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            let f = OpenOptions::new().write(true).open(path)?;
            f.set_len(keep as u64)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if existing.header.is_none() {
            if !existing.responses.is_empty() {
                return Err(Error::Data(format!("{} has responses but no header", path.display())));
            }
            writeln!(file, "{}", serde_json::to_string(&HeaderLine { header: header.clone() })?)?;
        }
        Ok(ResponseLogWriter { file, existing })
    }

    pub fn existing(&self) -> &ResponseLog {
        &self.existing
    }

    pub fn append(&mut self, response: &OptionResponse) -> Result<()> {
        writeln!(self.file, "{}", serde_json::to_string(response)?)?;
        self.file.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::OptionSemantic;

    fn resp(i: usize) -> OptionResponse {
        OptionResponse {
            model_id: "m".into(),
            image_id: format!("img{i}"),
            prompt_id: "p".into(),
            p_yes: 0.5,
            p_no: 0.3,
            p_unsure: 0.1,
            symbol_mass: 0.9,
            argmax_option: OptionSemantic::Yes,
        }
    }

    #[test]
    fn tolerates_truncated_tail() {
        let mut text = String::new();
        for i in 0..3 {
            text.push_str(&serde_json::to_string(&resp(i)).unwrap());
            text.push('\n');
        }
        text.push_str("{\"model_id\": \"m\", \"ima");
        let log = read_response_log(&text).unwrap();
        assert_eq!(log.responses.len(), 3);
        assert!(log.truncated);
        let bad = text.replace("{\"model_id\": \"m\", \"ima", "garbage\n");
        assert!(read_response_log(&bad).is_err());
    }
}
