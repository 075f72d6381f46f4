//! End-to-end question answering: cues, per-cue searches, union, answer.

use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::geometry::{
    assemble_answer_visual, build_tree, union_bbox, AnswerVisual, BBox, ImageTree, NodeId,
    SourceImage, View,
};
use crate::oracle::{
    answer_prompt, decomposed_question, generate_text, OracleBackend, OracleRequest,
    GENERATE_MAX_TOKENS,
};

use super::cues::{generate_cues, CueExemplars, VisualCue};
use super::engine::{search_cue, CueSearch};
use super::scoring::Scorer;
use super::trace::SearchTrace;
use super::SearchConfig;

/// Version of the serialized trace document.
pub const TRACE_VERSION: u32 = 1;

/// A cue whose search failed and was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCue {
    pub cue: VisualCue,
    pub error: String,
    pub partial: Option<SearchTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub tree: ImageTree,
    pub cues: Vec<VisualCue>,
    /// Cue generation did not follow the expected format.
    pub cues_degraded: bool,
    pub searches: Vec<CueSearch>,
    pub skipped: Vec<SkippedCue>,
    /// `L`: concatenated per-cue results.
    pub result_nodes: Vec<NodeId>,
    /// `b*`: union of the result boxes.
    pub union: BBox,
    pub visual: AnswerVisual,
    pub answer: String,
    pub answer_empty: bool,
    /// No cue produced a node, so the whole image was used.
    pub fallback_used: bool,
    pub oracle_queries: usize,
}

impl SearchOutcome {
    pub fn per_cue_traces(&self) -> impl Iterator<Item = &SearchTrace> {
        self.searches.iter().map(|s| &s.trace)
    }

    pub fn result_boxes(&self) -> Vec<BBox> {
        self.result_nodes
            .iter()
            .map(|id| self.tree.node(*id).bbox)
            .collect()
    }

    /// Boxes of every visited node across all searches, in visit order.
    pub fn visited_boxes(&self) -> Vec<BBox> {
        self.searches
            .iter()
            .flat_map(|s| s.trace.visited())
            .map(|id| self.tree.node(id).bbox)
            .collect()
    }

    pub fn to_document(&self, question: &str, cfg: &SearchConfig) -> TraceDocument {
        TraceDocument {
            version: TRACE_VERSION,
            question: question.to_string(),
            image: ImageDims {
                width: self.tree.width(),
                height: self.tree.height(),
            },
            tree_depth: self.tree.depth(),
            tree_nodes: self.tree.len(),
            config: cfg.clone(),
            cues: self.cues.clone(),
            cues_degraded: self.cues_degraded,
            searches: self
                .searches
                .iter()
                .map(|s| SearchRecord {
                    cue: s.trace.cue.clone(),
                    q_s: s.trace.q_s.clone(),
                    tau0: s.trace.tau0,
                    c0: s.trace.c0,
                    fallback: s.fallback,
                    results: s.results.clone(),
                    events: s.trace.events.clone(),
                })
                .collect(),
            skipped: self
                .skipped
                .iter()
                .map(|s| SkippedRecord {
                    cue: s.cue.clone(),
                    error: s.error.clone(),
                })
                .collect(),
            result_nodes: self.result_nodes.clone(),
            union_bbox: self.union,
            views: self.visual.views.clone(),
            fallback_used: self.fallback_used,
            answer: self.answer.clone(),
            answer_empty: self.answer_empty,
            oracle_queries: self.oracle_queries,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub cue: VisualCue,
    pub q_s: Option<String>,
    pub tau0: f64,
    pub c0: u32,
    pub fallback: bool,
    pub results: Vec<NodeId>,
    pub events: Vec<super::TraceEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRecord {
    pub cue: VisualCue,
    pub error: String,
}

/// Serialized form of a full run; see `schemas/trace.schema.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub version: u32,
    pub question: String,
    pub image: ImageDims,
    pub tree_depth: u32,
    pub tree_nodes: usize,
    pub config: SearchConfig,
    pub cues: Vec<VisualCue>,
    pub cues_degraded: bool,
    pub searches: Vec<SearchRecord>,
    pub skipped: Vec<SkippedRecord>,
    pub result_nodes: Vec<NodeId>,
    pub union_bbox: BBox,
    pub views: Vec<View>,
    pub fallback_used: bool,
    pub answer: String,
    pub answer_empty: bool,
    pub oracle_queries: usize,
}

/// Runs the full procedure with a free-form answer prompt.
pub fn zoom_eye(
    source: &SourceImage,
    question: &str,
    cfg: &SearchConfig,
    backend: &dyn OracleBackend,
    exemplars: &CueExemplars,
) -> Result<SearchOutcome, SearchError> {
    zoom_eye_with_prompt(
        source,
        question,
        &answer_prompt(question, None),
        cfg,
        backend,
        exemplars,
    )
}

/// Runs the full procedure, answering with `final_prompt` over the zoomed
/// visual.
pub fn zoom_eye_with_prompt(
    source: &SourceImage,
    question: &str,
    final_prompt: &str,
    cfg: &SearchConfig,
    backend: &dyn OracleBackend,
    exemplars: &CueExemplars,
) -> Result<SearchOutcome, SearchError> {
    if question.trim().is_empty() {
        return Err(SearchError::InvalidInput("empty question".into()));
    }
    cfg.validate()?;
    let tree = build_tree(
        source.width(),
        source.height(),
        cfg.min_node_size,
        cfg.aspect_threshold,
    )?;
    let parsed = generate_cues(backend, source, question, exemplars)?;
    let cues = parsed.cues;

    let mut scorer = Scorer::new(&tree, source, backend, cfg.mode);
    let mut searches = Vec::with_capacity(cues.len());
    let mut skipped = Vec::new();
    let mut result_nodes = Vec::new();
    for cue in &cues {
        let q_s = if cues.len() == 1 {
            question.to_string()
        } else {
            decomposed_question(&cue.phrase)?
        };
        match search_cue(&mut scorer, cue, &q_s, cfg) {
            Ok(search) => {
                result_nodes.extend(search.results.iter().copied());
                searches.push(search);
            }
            Err(err) => {
                log::warn!("search for cue {:?} failed: {err}", cue.phrase);
                let partial = match &err {
                    SearchError::Aborted { partial, .. } => Some((**partial).clone()),
                    _ => None,
                };
                skipped.push(SkippedCue {
                    cue: cue.clone(),
                    error: err.to_string(),
                    partial,
                });
            }
        }
    }

    let fallback_used = result_nodes.is_empty();
    if fallback_used {
        result_nodes.push(tree.root().id);
    }
    let boxes: Vec<BBox> = result_nodes.iter().map(|id| tree.node(*id).bbox).collect();
    let union = union_bbox(&boxes)?;
    let visual = assemble_answer_visual(
        source,
        &boxes,
        cfg.mode,
        cfg.resize_policy,
        cfg.paste_longer_side,
    )?;
    let request = OracleRequest::generate(source, visual.views.clone(), final_prompt, GENERATE_MAX_TOKENS);
    let generated = generate_text(backend, &request)?;
    let oracle_queries = scorer.queries();
    drop(scorer);

    Ok(SearchOutcome {
        tree,
        cues,
        cues_degraded: parsed.degraded,
        searches,
        skipped,
        result_nodes,
        union,
        visual,
        answer: generated.text,
        answer_empty: generated.empty,
        fallback_used,
        oracle_queries,
    })
}

/// Answers over the whole image without searching.
pub fn direct_answer(
    source: &SourceImage,
    final_prompt: &str,
    backend: &dyn OracleBackend,
) -> Result<String, SearchError> {
    let request = OracleRequest::generate(
        source,
        vec![View::Region(source.full_bbox())],
        final_prompt,
        GENERATE_MAX_TOKENS,
    );
    Ok(generate_text(backend, &request)?.text)
}
