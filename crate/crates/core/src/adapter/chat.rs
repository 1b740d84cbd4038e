//! Chat-format descriptors: wrapper text around the image and the prompt.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const PROMPT_SLOT: &str = "{prompt}";
pub const IMAGE_SLOT: &str = "<image>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTemplate {
    pub name: String,
    /// Must contain `{prompt}` and `<image>` exactly once each.
    pub template: String,
}

impl ChatTemplate {
    pub fn new(name: &str, template: &str) -> Result<ChatTemplate> {
        for slot in [PROMPT_SLOT, IMAGE_SLOT] {
            if template.matches(slot).count() != 1 {
                return Err(Error::Config(format!("chat template '{name}' must contain {slot} exactly once")));
            }
        }
        Ok(ChatTemplate { name: name.to_string(), template: template.to_string() })
    }

    /// Built-in descriptors for a few common wrapper styles.
    pub fn builtin(name: &str) -> Result<ChatTemplate> {
        let t = match name {
            "plain" => "<image>\n{prompt}",
            "llava" => "USER: <image>\n{prompt} ASSISTANT:",
            "vicuna" => "A chat between a curious human and an artificial intelligence assistant. USER: <image>\n{prompt} ASSISTANT:",
            "chatml" => "<|im_start|>user\n<image>\n{prompt}<|im_end|>\n<|im_start|>assistant\n",
            _ => return Err(Error::Config(format!("unknown chat template '{name}'"))),
        };
        ChatTemplate::new(name, t)
    }

    /// A TOML file with `name` and `template` keys.
    pub fn load(path: &Path) -> Result<ChatTemplate> {
        let text = std::fs::read_to_string(path)?;
        let raw: ChatTemplate =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ChatTemplate::new(&raw.name, &raw.template)
    }

    /// Builtin name or path to a descriptor file.
    pub fn resolve(spec: &str) -> Result<ChatTemplate> {
        let p = Path::new(spec);
        if p.extension().is_some_and(|e| e == "toml") {
            ChatTemplate::load(p)
        } else {
            ChatTemplate::builtin(spec)
        }
    }

    pub fn render(&self, prompt: &str) -> String {
        self.template.replace(PROMPT_SLOT, prompt)
    }

    /// Text before and after the image slot.
    pub fn split_at_image(&self, prompt: &str) -> (String, String) {
        let full = self.render(prompt);
        let (before, after) = full.split_once(IMAGE_SLOT).expect("validated template");
        (before.to_string(), after.to_string())
    }
}

impl Default for ChatTemplate {
    fn default() -> Self {
        ChatTemplate::builtin("plain").expect("builtin template")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_need_both_slots() {
        assert!(ChatTemplate::new("x", "{prompt}").is_err());
        assert!(ChatTemplate::new("x", "<image><image>{prompt}").is_err());
        let t = ChatTemplate::builtin("llava").unwrap();
        let (a, b) = t.split_at_image("Q?");
        assert_eq!(a, "USER: ");
        assert_eq!(b, "\nQ? ASSISTANT:");
    }
}
