//! Prompt groups, variation tables and rendering.

mod catalog;
mod render;
mod template;

pub use catalog::{
    load_attribute_catalog, load_attribute_catalog_named, parse_catalog, split_attributes, write_catalog,
    AttributeQuery, AttributeSplit, GenderAssociation, Polarity, PromptGroup,
};
pub use render::{
    probe_prompts, prompt_id, render_all, render_prompt, AppliedInstruction, InstructionPosition, OptionSymbol,
    ProbePrompts, PromptInstance, GENDER_PROBE_LABELS, OCCUPATION_PROBE_LABELS,
};
pub use template::{
    enumerate_templates, option_order_index, question_variants, InstructionVariant, OptionSemantic,
    PromptTemplateSpec, QuestionVariant, Split, VariationConfig, INSTRUCTIONS, OPTION_ORDERS, UNSURE_SYNONYMS,
};

use crate::Result;

/// Read a JSONL prompt dump.
pub fn read_prompt_dump(text: &str) -> Result<Vec<PromptInstance>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Into::into))
        .collect()
}

/// Write prompts as JSONL, one per line.
pub fn write_prompt_dump(prompts: &[PromptInstance]) -> Result<String> {
    let mut out = String::new();
    for p in prompts {
        out.push_str(&serde_json::to_string(p)?);
        out.push('\n');
    }
    Ok(out)
}
