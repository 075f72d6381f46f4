//! Confidence queries against the oracle, memoised per search run, and the
//! ranking and stopping rules built on them.

use std::collections::HashMap;

use crate::error::{OracleError, SearchError};
use crate::geometry::{ImageTree, InputMode, NodeId, SourceImage};
use crate::oracle::{yes_probability, OracleBackend, OracleRequest, PromptKind};

use super::VisualCue;

/// Depth weight `(1 − b)/D² · d² + b`, rising from `b` at the root to 1 at
/// the deepest level. A depth-0 tree gets 1.
pub fn weight(depth: u32, tree_depth: u32, bias_b: f64) -> Result<f64, SearchError> {
    if depth > tree_depth {
        return Err(SearchError::InvalidInput(format!(
            "node depth {depth} exceeds tree depth {tree_depth}"
        )));
    }
    if tree_depth == 0 {
        return Ok(1.0);
    }
    // d²/D² first so that the deepest level gets exactly (1 − b) + b = 1
    let ratio = (depth as f64).powi(2) / (tree_depth as f64).powi(2);
    Ok((1.0 - bias_b) * ratio + bias_b)
}

/// Owns the confidence memo of one search run. A `(node, kind, text)` key
/// is sent to the backend at most once.
pub struct Scorer<'a> {
    tree: &'a ImageTree,
    source: &'a SourceImage,
    backend: &'a dyn OracleBackend,
    mode: InputMode,
    memo: HashMap<(NodeId, PromptKind, String), f64>,
    queries: usize,
}

impl<'a> Scorer<'a> {
    pub fn new(
        tree: &'a ImageTree,
        source: &'a SourceImage,
        backend: &'a dyn OracleBackend,
        mode: InputMode,
    ) -> Self {
        Self {
            tree,
            source,
            backend,
            mode,
            memo: HashMap::new(),
            queries: 0,
        }
    }

    pub fn tree(&self) -> &'a ImageTree {
        self.tree
    }

    pub fn source(&self) -> &'a SourceImage {
        self.source
    }

    pub fn backend(&self) -> &'a dyn OracleBackend {
        self.backend
    }

    pub fn mode(&self) -> InputMode {
        self.mode
    }

    /// Backend calls issued so far.
    pub fn queries(&self) -> usize {
        self.queries
    }

    pub fn cached(&self, node: NodeId, kind: PromptKind, subject: &str) -> Option<f64> {
        self.memo.get(&(node, kind, subject.to_string())).copied()
    }

    pub fn confidence(
        &mut self,
        node: NodeId,
        kind: PromptKind,
        subject: &str,
    ) -> Result<f64, OracleError> {
        let key = (node, kind, subject.to_string());
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let region = self.tree.node(node).bbox;
        let request = OracleRequest::confidence(self.source, self.mode, region, kind, subject)?;
        self.queries += 1;
        let p = yes_probability(self.backend, &request)?;
        self.memo.insert(key, p);
        Ok(p)
    }
}

/// Ranking components of one node for one cue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankScore {
    pub existing: f64,
    pub latent: f64,
    pub score: f64,
}

/// `W(d)·c_e + (1 − W(d))·c_l`: shallow nodes are ranked mostly by whether
/// the cue could be found deeper, deep nodes by whether it is visible.
pub fn rank_score(
    scorer: &mut Scorer<'_>,
    node: NodeId,
    cue: &VisualCue,
    bias_b: f64,
) -> Result<RankScore, SearchError> {
    let tree = scorer.tree();
    let w = weight(tree.node(node).depth, tree.depth(), bias_b)?;
    let existing = scorer.confidence(node, PromptKind::Existing, &cue.phrase)?;
    let latent = scorer.confidence(node, PromptKind::Latent, &cue.phrase)?;
    Ok(RankScore {
        existing,
        latent,
        score: w * existing + (1.0 - w) * latent,
    })
}

/// Answering confidence of `node` for `question` and whether it clears `tau`.
pub fn stopping_check(
    scorer: &mut Scorer<'_>,
    node: NodeId,
    question: &str,
    tau: f64,
) -> Result<(bool, f64), OracleError> {
    let c_a = scorer.confidence(node, PromptKind::Answering, question)?;
    Ok((c_a >= tau, c_a))
}
