use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::geometry::{InputMode, ResizePolicy};

/// Amount the type-1 stop threshold drops at each decay event.
pub const TAU_DECAY_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    /// Type-1 stop threshold on answering confidence.
    pub tau: f64,
    /// Type-2 inclusion threshold on existing confidence.
    pub tau2: f64,
    /// Type-1 search gives up once decay takes `tau` below this.
    pub tau_min: f64,
    /// Pops between consecutive decay events.
    pub delta: u32,
    /// Weight at depth 0 of the existing-vs-latent blend.
    pub bias_b: f64,
    /// Decay starts after `depth × c_multiplier` pops.
    pub c_multiplier: u32,
    /// Type-2 search stops at the first node this deep.
    pub max_type2_depth: u32,
    pub mode: InputMode,
    pub resize_policy: ResizePolicy,
    /// Local/naive input pastes patches once the union's longer side exceeds this.
    pub paste_longer_side: u32,
    pub min_node_size: u32,
    pub aspect_threshold: f64,
    /// Server-side tiling budget, recorded for reference only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anyres_max_blocks: Option<u32>,
}

impl SearchConfig {
    /// Patch-only input for 336 px encoders with naive resizing.
    pub fn local() -> Self {
        Self {
            tau: 0.8,
            tau2: 0.8,
            tau_min: 0.0,
            delta: 2,
            bias_b: 0.2,
            c_multiplier: 3,
            max_type2_depth: 2,
            mode: InputMode::Local,
            resize_policy: ResizePolicy::Naive,
            paste_longer_side: 1000,
            min_node_size: 336,
            aspect_threshold: 1.5,
            anyres_max_blocks: None,
        }
    }

    /// Full image plus patch for 384 px encoders with server-side tiling.
    pub fn global_local() -> Self {
        Self {
            tau: 0.6,
            bias_b: 0.6,
            mode: InputMode::GlobalLocal,
            resize_policy: ResizePolicy::ServerSide,
            min_node_size: 384,
            anyres_max_blocks: Some(12),
            ..Self::local()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "local" => Some(Self::local()),
            "global-local" | "global_local" => Some(Self::global_local()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.tau_min >= 0.0 && self.tau_min <= self.tau) {
            return Err(SearchError::Config(format!(
                "need 0 <= tau_min <= tau, got tau_min={} tau={}",
                self.tau_min, self.tau
            )));
        }
        if !unit(self.tau2) {
            return Err(SearchError::Config(format!("tau2 must lie in [0, 1], got {}", self.tau2)));
        }
        if !unit(self.bias_b) {
            return Err(SearchError::Config(format!(
                "bias must lie in [0, 1], got {}",
                self.bias_b
            )));
        }
        if self.delta == 0 {
            return Err(SearchError::Config("delta must be at least 1".into()));
        }
        if self.min_node_size == 0 {
            return Err(SearchError::Config("min_node_size must be at least 1".into()));
        }
        if !(self.aspect_threshold >= 1.0) {
            return Err(SearchError::Config(format!(
                "aspect_threshold must be >= 1, got {}",
                self.aspect_threshold
            )));
        }
        Ok(())
    }

    /// Initial step threshold for a tree of depth `depth`.
    pub fn initial_step_threshold(&self, depth: u32) -> u32 {
        // at least 2 so a single-node tree is scored before any decay
        (depth * self.c_multiplier).max(2)
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self::local()
    }
}
