use serde::{Deserialize, Serialize};

use super::task::{TaskSpec, VALUE_SLOT};
use super::GenerationError;
use crate::chem::CanonicalSmiles;

/// Fixed system message sent with every request.
pub const SYSTEM_PREAMBLE: &str = "You are an expert medicinal chemist. \
Reply with exactly one molecule written as a SMILES string and nothing else.";

const EXAMPLES_HEADER: &str = "Here are some example molecules:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

impl Prompt {
    /// System and user parts joined by a blank line.
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }
}

/// Formats a numeric target the way it appears in a prompt: `3`, `-1`, `2.5`.
pub fn format_target(x: f64) -> String {
    format!("{x}")
}

/// The constraint sentences of a task with `[VALUE]` filled in.
pub fn constraint_text(task: &TaskSpec) -> Result<String, GenerationError> {
    let mut sentences = Vec::with_capacity(task.prompt_template.len());
    for s in &task.prompt_template {
        if s.contains(VALUE_SLOT) {
            let value = task
                .numeric_target
                .ok_or_else(|| GenerationError::MissingValue(task.name.clone()))?;
            sentences.push(s.replace(VALUE_SLOT, &format_target(value)));
        } else {
            sentences.push(s.clone());
        }
    }
    Ok(sentences.join(" "))
}

/// Builds the request prompt: the examples block (when any) followed by the
/// task's constraint sentences.
pub fn build_prompt(
    task: &TaskSpec,
    examples: &[CanonicalSmiles],
) -> Result<Prompt, GenerationError> {
    let mut user = String::new();
    if !examples.is_empty() {
        user.push_str(EXAMPLES_HEADER);
        user.push('\n');
        for e in examples {
            user.push_str(e.as_str());
            user.push('\n');
        }
        user.push('\n');
    }
    user.push_str(&constraint_text(task)?);
    Ok(Prompt {
        system: SYSTEM_PREAMBLE.to_string(),
        user,
    })
}
