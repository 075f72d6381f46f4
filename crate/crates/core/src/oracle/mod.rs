//! The multimodal model behind a two-operation contract: yes-probability
//! for a confidence prompt, and free text generation.

mod http;
mod prompts;
mod scripted;

use serde::{Deserialize, Serialize};

pub use http::{HttpBackend, HttpConfig, RetryPolicy, ENV_API_BASE, ENV_API_KEY, ENV_MODEL};
pub use prompts::{
    answer_prompt, build_prompt, decomposed_question, option_letter, PromptKind,
    CHOICE_INSTRUCTION, DIRECT_INSTRUCTION,
};
pub use scripted::{
    ConfidenceModel, Confidences, ScriptedBackend, ScriptedOracleModel, TableModel,
};

use crate::error::OracleError;
use crate::geometry::{BBox, InputMode, SourceImage, View};

/// Token budget for confidence queries; only the first token is scored.
pub const CONFIDENCE_MAX_TOKENS: u32 = 1;
/// Token budget for free generation.
pub const GENERATE_MAX_TOKENS: u32 = 256;

const YES_FORMS: [&str; 4] = ["Yes", "yes", " Yes", " yes"];
const NO_FORMS: [&str; 4] = ["No", "no", " No", " no"];

/// A completed user/assistant exchange preceding the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub user: String,
    pub assistant: String,
}

/// What a confidence request is asking about. Scripted backends answer from
/// this; HTTP backends ignore it and read the prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub kind: PromptKind,
    pub subject: String,
}

#[derive(Debug, Clone)]
pub struct OracleRequest<'a> {
    pub source: &'a SourceImage,
    /// One view for local input, `[global, local]` for global+local.
    pub images: Vec<View>,
    pub history: Vec<ChatTurn>,
    pub prompt: String,
    pub max_new_tokens: u32,
    pub want_logprobs: bool,
    pub probe: Option<Probe>,
}

impl<'a> OracleRequest<'a> {
    /// Confidence query of `kind` about `subject` for the patch `region`.
    pub fn confidence(
        source: &'a SourceImage,
        mode: InputMode,
        region: BBox,
        kind: PromptKind,
        subject: &str,
    ) -> Result<Self, OracleError> {
        let prompt = build_prompt(kind, mode, subject)?;
        let images = match mode {
            InputMode::Local => vec![View::Region(region)],
            InputMode::GlobalLocal => vec![View::Region(source.full_bbox()), View::Region(region)],
        };
        Ok(Self {
            source,
            images,
            history: Vec::new(),
            prompt,
            max_new_tokens: CONFIDENCE_MAX_TOKENS,
            want_logprobs: true,
            probe: Some(Probe {
                kind,
                subject: subject.to_string(),
            }),
        })
    }

    /// Free generation over `images` (possibly none).
    pub fn generate(
        source: &'a SourceImage,
        images: Vec<View>,
        prompt: impl Into<String>,
        max_new_tokens: u32,
    ) -> Self {
        Self {
            source,
            images,
            history: Vec::new(),
            prompt: prompt.into(),
            max_new_tokens,
            want_logprobs: false,
            probe: None,
        }
    }

    pub fn with_history(mut self, history: Vec<ChatTurn>) -> Self {
        self.history = history;
        self
    }

    /// The patch under inspection: the last image.
    pub fn focus(&self) -> Option<&View> {
        self.images.last()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenProb {
    pub token: String,
    pub prob: f64,
}

/// Raw backend output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Completion {
    pub text: String,
    /// Candidate probabilities for the first generated token, when the
    /// backend reports them.
    pub first_token: Option<Vec<TokenProb>>,
}

/// Anything that can answer oracle requests. Implementations must be
/// shareable across concurrent search runs.
pub trait OracleBackend: Send + Sync {
    fn complete(&self, request: &OracleRequest<'_>) -> Result<Completion, OracleError>;
}

impl<T: OracleBackend + ?Sized> OracleBackend for &T {
    fn complete(&self, request: &OracleRequest<'_>) -> Result<Completion, OracleError> {
        (**self).complete(request)
    }
}

impl<T: OracleBackend + ?Sized> OracleBackend for Box<T> {
    fn complete(&self, request: &OracleRequest<'_>) -> Result<Completion, OracleError> {
        (**self).complete(request)
    }
}

impl<T: OracleBackend + ?Sized> OracleBackend for std::sync::Arc<T> {
    fn complete(&self, request: &OracleRequest<'_>) -> Result<Completion, OracleError> {
        (**self).complete(request)
    }
}

/// Yes/No mass of the first generated token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YesNoDistribution {
    pub p_yes_raw: f64,
    pub p_no_raw: f64,
    pub normalized: f64,
}

impl YesNoDistribution {
    /// Sums the probability of every Yes/No surface form and renormalises
    /// over the two classes. `None` when neither class has any mass.
    pub fn from_candidates(candidates: &[TokenProb]) -> Option<Self> {
        let mass = |forms: &[&str]| -> f64 {
            candidates
                .iter()
                .filter(|c| forms.contains(&c.token.as_str()))
                .map(|c| c.prob.max(0.0))
                .sum()
        };
        let p_yes_raw = mass(&YES_FORMS);
        let p_no_raw = mass(&NO_FORMS);
        let total = p_yes_raw + p_no_raw;
        (total > 0.0).then(|| Self {
            p_yes_raw,
            p_no_raw,
            normalized: (p_yes_raw / total).clamp(0.0, 1.0),
        })
    }
}

/// Probability that `completion` answers "Yes". Without a usable token
/// distribution, falls back to reading the generated text.
pub fn yes_probability_of(completion: &Completion) -> f64 {
    if let Some(dist) = completion
        .first_token
        .as_deref()
        .and_then(YesNoDistribution::from_candidates)
    {
        return dist.normalized;
    }
    if completion.text.trim().to_lowercase().starts_with("yes") {
        1.0
    } else {
        0.0
    }
}

/// Sends a confidence request and extracts the normalised yes-probability.
pub fn yes_probability(
    backend: &dyn OracleBackend,
    request: &OracleRequest<'_>,
) -> Result<f64, OracleError> {
    if !request.want_logprobs || request.max_new_tokens != CONFIDENCE_MAX_TOKENS {
        return Err(OracleError::InvalidRequest(
            "confidence requests need logprobs and a single-token budget".into(),
        ));
    }
    let completion = backend.complete(request)?;
    Ok(yes_probability_of(&completion))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generated {
    pub text: String,
    /// Set when the backend produced nothing but whitespace.
    pub empty: bool,
}

pub fn generate_text(
    backend: &dyn OracleBackend,
    request: &OracleRequest<'_>,
) -> Result<Generated, OracleError> {
    if request.prompt.trim().is_empty() {
        return Err(OracleError::InvalidRequest("empty prompt".into()));
    }
    let completion = backend.complete(request)?;
    let text = completion.text.trim().to_string();
    if text.is_empty() {
        log::warn!("backend returned an empty completion");
    }
    Ok(Generated {
        empty: text.is_empty(),
        text,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(token: &str, prob: f64) -> TokenProb {
        TokenProb {
            token: token.into(),
            prob,
        }
    }

    struct Fixed(Completion);

    impl OracleBackend for Fixed {
        fn complete(&self, _: &OracleRequest<'_>) -> Result<Completion, OracleError> {
            Ok(self.0.clone())
        }
    }

    fn request(src: &SourceImage) -> OracleRequest<'_> {
        OracleRequest::confidence(src, InputMode::Local, src.full_bbox(), PromptKind::Existing, "cat")
            .unwrap()
    }

    #[test]
    fn two_class_normalisation() {
        let c = Completion {
            text: "Yes".into(),
            first_token: Some(vec![tp("Yes", 0.72), tp("No", 0.08), tp("Maybe", 0.20)]),
        };
        assert!((yes_probability_of(&c) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn yes_only_mass_is_certain() {
        let c = Completion {
            text: String::new(),
            first_token: Some(vec![tp("Yes", 0.55), tp("The", 0.45)]),
        };
        assert_eq!(yes_probability_of(&c), 1.0);
    }

    #[test]
    fn surface_forms_are_pooled() {
        let c = Completion {
            text: String::new(),
            first_token: Some(vec![tp("Yes", 0.2), tp(" yes", 0.1), tp("no", 0.05), tp(" No", 0.05)]),
        };
        assert!((yes_probability_of(&c) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn text_fallback() {
        let no = Completion {
            text: "No, it is too small.".into(),
            first_token: None,
        };
        assert_eq!(yes_probability_of(&no), 0.0);
        let yes = Completion {
            text: "  YES there is".into(),
            first_token: Some(vec![tp("Sure", 1.0)]),
        };
        assert_eq!(yes_probability_of(&yes), 1.0);
    }

    #[test]
    fn yes_probability_requires_confidence_shape() {
        let src = SourceImage::virtual_image(10, 10).unwrap();
        let backend = Fixed(Completion::default());
        let mut req = request(&src);
        req.max_new_tokens = 5;
        assert!(matches!(
            yes_probability(&backend, &req),
            Err(OracleError::InvalidRequest(_))
        ));
    }

    #[test]
    fn generate_trims_and_flags_empty() {
        let src = SourceImage::virtual_image(10, 10).unwrap();
        let backend = Fixed(Completion {
            text: "  The bag is red.\n".into(),
            first_token: None,
        });
        let req = OracleRequest::generate(&src, vec![], "What color?", GENERATE_MAX_TOKENS);
        let out = generate_text(&backend, &req).unwrap();
        assert_eq!(out.text, "The bag is red.");
        assert!(!out.empty);

        let backend = Fixed(Completion::default());
        let out = generate_text(&backend, &req).unwrap();
        assert_eq!(out.text, "");
        assert!(out.empty);
    }

    #[test]
    fn global_local_requests_carry_two_images() {
        let src = SourceImage::virtual_image(100, 80).unwrap();
        let region = BBox { x: 0, y: 0, w: 50, h: 40 };
        let req =
            OracleRequest::confidence(&src, InputMode::GlobalLocal, region, PromptKind::Latent, "cat")
                .unwrap();
        assert_eq!(req.images, vec![View::Region(src.full_bbox()), View::Region(region)]);
        assert_eq!(req.max_new_tokens, 1);
        assert!(req.want_logprobs);
    }
}
