//! Deterministic stand-ins for the multimodal model.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Completion, OracleBackend, OracleRequest, PromptKind, TokenProb};
use crate::error::OracleError;
use crate::geometry::{BBox, View};
use crate::search::{strip_cue_query, CueExemplars};

/// Confidence for a patch, independent of prompt wording.
pub trait ConfidenceModel: Send + Sync {
    fn confidence(&self, region: BBox, kind: PromptKind) -> f64;
}

/// Geometric model around a planted target.
///
/// With `vis = |target ∩ node| / |target|` and `scale = |target| / |node|`,
/// existing and answering confidence are `vis · min(1, scale / ρ)`; latent
/// confidence is `1 − ε` when the node contains the target centre and `ε`
/// otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedOracleModel {
    pub target_bbox: BBox,
    pub visibility_ratio: f64,
    pub epsilon_floor: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ScriptedOracleModel {
    pub fn new(target_bbox: BBox, visibility_ratio: f64) -> Result<Self, OracleError> {
        if !(visibility_ratio > 0.0 && visibility_ratio <= 1.0) {
            return Err(OracleError::InvalidRequest(format!(
                "visibility ratio must lie in (0, 1], got {visibility_ratio}"
            )));
        }
        Ok(Self {
            target_bbox,
            visibility_ratio,
            epsilon_floor: 0.05,
            noise_sigma: 0.0,
            seed: 0,
        })
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma.max(0.0);
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon_floor = epsilon.clamp(0.0, 1.0);
        self
    }

    fn noiseless(&self, node: BBox, kind: PromptKind) -> f64 {
        let target = self.target_bbox;
        match kind {
            PromptKind::Latent => {
                let (cx, cy) = target.center();
                if node.contains_point(cx, cy) {
                    1.0 - self.epsilon_floor
                } else {
                    self.epsilon_floor
                }
            }
            _ => {
                let overlap = node.intersection(&target).map_or(0, |b| b.area());
                let vis = overlap as f64 / target.area() as f64;
                let scale = target.area() as f64 / node.area() as f64;
                vis * (scale / self.visibility_ratio).min(1.0)
            }
        }
    }

    fn noise(&self, node: BBox, kind: PromptKind) -> f64 {
        if self.noise_sigma == 0.0 {
            return 0.0;
        }
        let key = [
            self.seed,
            node.x as u64,
            node.y as u64,
            node.w as u64,
            node.h as u64,
            kind as u64,
        ]
        .iter()
        .fold(0x9E37_79B9_7F4A_7C15u64, |acc, v| splitmix(acc ^ v));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        Normal::new(0.0, self.noise_sigma)
            .map(|n| n.sample(&mut rng))
            .unwrap_or(0.0)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl ConfidenceModel for ScriptedOracleModel {
    fn confidence(&self, region: BBox, kind: PromptKind) -> f64 {
        (self.noiseless(region, kind) + self.noise(region, kind)).clamp(0.0, 1.0)
    }
}

/// Existing / latent / answering confidences of one patch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Confidences {
    pub existing: f64,
    pub latent: f64,
    pub answering: f64,
}

impl Confidences {
    pub fn new(existing: f64, latent: f64, answering: f64) -> Self {
        Self {
            existing,
            latent,
            answering,
        }
    }

    pub fn uniform(v: f64) -> Self {
        Self::new(v, v, v)
    }
}

/// Explicit per-region confidences; unlisted regions get `fallback`.
#[derive(Debug, Clone, Default)]
pub struct TableModel {
    pub entries: HashMap<BBox, Confidences>,
    pub fallback: Confidences,
}

impl TableModel {
    pub fn new(fallback: Confidences) -> Self {
        Self {
            entries: HashMap::new(),
            fallback,
        }
    }

    pub fn set(mut self, region: BBox, conf: Confidences) -> Self {
        self.entries.insert(region, conf);
        self
    }
}

impl ConfidenceModel for TableModel {
    fn confidence(&self, region: BBox, kind: PromptKind) -> f64 {
        let c = self.entries.get(&region).unwrap_or(&self.fallback);
        match kind {
            PromptKind::Existing => c.existing,
            PromptKind::Latent => c.latent,
            _ => c.answering,
        }
    }
}

/// Backend answering every request from a [`ConfidenceModel`] and canned
/// text.
///
/// Confidence requests are scored on the last image. Chat requests with
/// history get the cue completion scripted for their question (or the
/// default). Anything else is an answer call: `answer_full` when the
/// visual is the whole image, `answer_zoomed` otherwise.
#[derive(Debug, Clone)]
pub struct ScriptedBackend<M> {
    pub model: M,
    pub cue_completions: Vec<(String, String)>,
    pub default_cue_completion: String,
    pub answer_zoomed: String,
    pub answer_full: String,
}

impl<M: ConfidenceModel> ScriptedBackend<M> {
    pub fn new(model: M) -> Self {
        Self {
            model,
            cue_completions: Vec::new(),
            default_cue_completion: "So I need the information about the following objects: target."
                .into(),
            answer_zoomed: "A".into(),
            answer_full: "A".into(),
        }
    }

    pub fn with_cue_completion(mut self, completion: impl Into<String>) -> Self {
        self.default_cue_completion = completion.into();
        self
    }

    /// Replays each exemplar's completion when asked its question.
    pub fn with_exemplar_answers(mut self, exemplars: &CueExemplars) -> Self {
        for (q, o) in exemplars.pairs() {
            self.cue_completions.push((q.clone(), o.clone()));
        }
        self
    }

    pub fn with_answers(mut self, zoomed: impl Into<String>, full: impl Into<String>) -> Self {
        self.answer_zoomed = zoomed.into();
        self.answer_full = full.into();
        self
    }

    pub fn with_answer(self, answer: impl Into<String>) -> Self {
        let a = answer.into();
        self.with_answers(a.clone(), a)
    }

    fn cue_completion_for(&self, prompt: &str) -> &str {
        let asked = strip_cue_query(prompt);
        self.cue_completions
            .iter()
            .find(|(q, _)| strip_cue_query(q) == asked)
            .map(|(_, o)| o.as_str())
            .unwrap_or(&self.default_cue_completion)
    }
}

impl<M: ConfidenceModel> OracleBackend for ScriptedBackend<M> {
    fn complete(&self, request: &OracleRequest<'_>) -> Result<Completion, OracleError> {
        if let Some(probe) = &request.probe {
            if probe.kind != PromptKind::Generate {
                let region = request
                    .focus()
                    .map(View::extent)
                    .ok_or_else(|| OracleError::InvalidRequest("confidence without image".into()))?;
                let p = self.model.confidence(region, probe.kind).clamp(0.0, 1.0);
                return Ok(Completion {
                    text: if p >= 0.5 { "Yes" } else { "No" }.into(),
                    first_token: Some(vec![
                        TokenProb {
                            token: "Yes".into(),
                            prob: p,
                        },
                        TokenProb {
                            token: "No".into(),
                            prob: 1.0 - p,
                        },
                    ]),
                });
            }
        }
        if !request.history.is_empty() {
            return Ok(Completion {
                text: self.cue_completion_for(&request.prompt).to_string(),
                first_token: None,
            });
        }
        let full = request.source.full_bbox();
        let whole = match request.focus() {
            None => true,
            Some(View::Region(b)) => *b == full,
            Some(View::Pasted { patches, .. }) => patches.iter().all(|p| *p == full),
        };
        Ok(Completion {
            text: if whole { &self.answer_full } else { &self.answer_zoomed }.clone(),
            first_token: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(x: u32, y: u32, w: u32, h: u32) -> BBox {
        BBox { x, y, w, h }
    }

    #[test]
    fn exact_patch_is_certain() {
        let m = ScriptedOracleModel::new(b(100, 100, 50, 50), 0.5).unwrap();
        assert_eq!(m.confidence(b(100, 100, 50, 50), PromptKind::Existing), 1.0);
    }

    #[test]
    fn disjoint_patch_is_zero() {
        let m = ScriptedOracleModel::new(b(100, 100, 50, 50), 0.5).unwrap();
        assert_eq!(m.confidence(b(0, 0, 50, 50), PromptKind::Existing), 0.0);
    }

    #[test]
    fn scale_penalty() {
        let m = ScriptedOracleModel::new(b(100, 100, 100, 100), 0.25).unwrap();
        let v = m.confidence(b(0, 0, 400, 400), PromptKind::Existing);
        assert!((v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn latent_follows_centre() {
        let m = ScriptedOracleModel::new(b(100, 100, 50, 50), 0.5).unwrap();
        assert_eq!(m.confidence(b(0, 0, 200, 200), PromptKind::Latent), 0.95);
        assert_eq!(m.confidence(b(0, 0, 110, 110), PromptKind::Latent), 0.05);
    }

    #[test]
    fn rejects_bad_ratio() {
        assert!(ScriptedOracleModel::new(b(0, 0, 1, 1), 0.0).is_err());
        assert!(ScriptedOracleModel::new(b(0, 0, 1, 1), 1.5).is_err());
    }

    #[test]
    fn noise_is_seeded_and_clamped() {
        let m = ScriptedOracleModel::new(b(100, 100, 50, 50), 0.5)
            .unwrap()
            .with_noise(0.5, 7);
        let again = m.clone();
        for region in [b(0, 0, 200, 200), b(100, 100, 50, 50), b(10, 10, 5, 5)] {
            for kind in [PromptKind::Existing, PromptKind::Latent, PromptKind::Answering] {
                let v = m.confidence(region, kind);
                assert!((0.0..=1.0).contains(&v));
                assert_eq!(v, again.confidence(region, kind));
            }
        }
        let other = m.clone().with_noise(0.5, 8);
        let differs = [b(0, 0, 200, 200), b(10, 10, 5, 5), b(3, 3, 90, 90)]
            .iter()
            .any(|r| other.confidence(*r, PromptKind::Latent) != m.confidence(*r, PromptKind::Latent));
        assert!(differs);
    }
}
