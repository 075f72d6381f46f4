//! Prompt templates for the three confidence queries and the answer call.

use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::geometry::InputMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    /// Is the cue visible in this view?
    Existing,
    /// Could the cue be found by zooming further?
    Latent,
    /// Is the question answerable from this view?
    Answering,
    /// Free generation, prompt passed through unchanged.
    Generate,
}

impl PromptKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PromptKind::Existing => "existing",
            PromptKind::Latent => "latent",
            PromptKind::Answering => "answering",
            PromptKind::Generate => "generate",
        }
    }
}

/// Appended to multiple-choice answer prompts.
pub const CHOICE_INSTRUCTION: &str = "Answer with the option's letter from the given choices directly.";

/// Appended to free-form answer prompts.
pub const DIRECT_INSTRUCTION: &str = "Answer the question directly.";

/// Renders the confidence prompt for `kind` in `mode` around a cue
/// (existing, latent) or a question (answering). The leading image
/// placeholders of the templates are realised as image parts, so only the
/// text is produced here.
pub fn build_prompt(kind: PromptKind, mode: InputMode, subject: &str) -> Result<String, OracleError> {
    if subject.trim().is_empty() {
        return Err(OracleError::InvalidRequest("empty cue or question".into()));
    }
    let text = match (kind, mode) {
        (PromptKind::Existing, InputMode::Local) => {
            format!("Is there a {subject} in the image? Answer Yes or No.")
        }
        (PromptKind::Existing, InputMode::GlobalLocal) => {
            format!("Is there a {subject} in the zoomed-in view? Answer Yes or No.")
        }
        (PromptKind::Latent, InputMode::Local) => format!(
            "According to your common sense knowledge and the content of the image, \
             is it possible to find a {subject} in the image? Answer Yes or No and tell the reason."
        ),
        (PromptKind::Latent, InputMode::GlobalLocal) => format!(
            "According to your common sense knowledge and the content of the zoomed-in view, \
             along with its location in the image, is it possible to find a {subject} by further \
             zooming in the current view? Answer Yes or No and tell the reason."
        ),
        // the doubled article is part of the template the models were tuned against
        (PromptKind::Answering, _) => format!(
            "Question: {subject} \nCould you answer the question based on the the available \
             visual information? Answer Yes or No."
        ),
        (PromptKind::Generate, _) => {
            return Err(OracleError::InvalidRequest(
                "free-generation prompts are not templated".into(),
            ))
        }
    };
    Ok(text)
}

/// Sub-question used as the stopping query for each cue when a question
/// yields several cues.
pub fn decomposed_question(cue: &str) -> Result<String, OracleError> {
    if cue.trim().is_empty() {
        return Err(OracleError::InvalidRequest("empty cue".into()));
    }
    Ok(format!("What is the appearance of the {cue}?"))
}

/// Final answering prompt. With options, lists them as `(A) …` lines and
/// asks for the letter.
pub fn answer_prompt(question: &str, options: Option<&[String]>) -> String {
    match options {
        Some(opts) if !opts.is_empty() => {
            let mut s = format!("Question: {question}\n");
            for (i, opt) in opts.iter().enumerate() {
                s.push_str(&format!("({}) {}\n", option_letter(i), opt));
            }
            s.push_str(CHOICE_INSTRUCTION);
            s
        }
        _ => format!("Question: {question}\n{DIRECT_INSTRUCTION}"),
    }
}

pub fn option_letter(index: usize) -> char {
    (b'A' + (index % 26) as u8) as char
}
