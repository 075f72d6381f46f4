//! The two per-cue search procedures.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::SearchError;
use crate::geometry::{ImageTree, NodeId};
use crate::oracle::PromptKind;

use super::scoring::{rank_score, stopping_check, RankScore, Scorer};
use super::trace::{SearchTrace, TraceAction, TraceEvent};
use super::{CueType, SearchConfig, VisualCue, TAU_DECAY_STEP};

/// Result of searching for one cue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueSearch {
    pub results: Vec<NodeId>,
    /// Type-1 only: no node cleared the threshold and the best node seen
    /// was returned instead.
    pub fallback: bool,
    pub trace: SearchTrace,
}

/// Threshold after `decays` decay events, computed from the start value so
/// repeated subtraction does not drift (0.8 → 0.7 → 0.6 → 0.5 exactly).
pub fn decayed_tau(tau0: f64, decays: u32) -> f64 {
    let steps = 1.0 / TAU_DECAY_STEP;
    (tau0 * steps - decays as f64) / steps
}

fn abort(err: impl Into<SearchError>, trace: &SearchTrace) -> SearchError {
    match err.into() {
        SearchError::Oracle(source) => SearchError::Aborted {
            source,
            partial: Box::new(trace.clone()),
        },
        other => other,
    }
}

fn event(
    tree: &ImageTree,
    action: TraceAction,
    node: NodeId,
    pops: u32,
    tau: f64,
    c: u32,
) -> TraceEvent {
    let n = tree.node(node);
    TraceEvent {
        step: 0,
        pops,
        action,
        node,
        depth: n.depth,
        bbox: n.bbox,
        c_e: None,
        c_l: None,
        c_a: None,
        rank: None,
        tau,
        c,
    }
}

fn with_rank(mut e: TraceEvent, r: Option<&RankScore>) -> TraceEvent {
    if let Some(r) = r {
        e.c_e = Some(r.existing);
        e.c_l = Some(r.latent);
        e.rank = Some(r.score);
    }
    e
}

/// Best-first search for a specific object.
///
/// Each iteration pops the best-ranked node, applies threshold decay once
/// the pop count reaches the step threshold, then returns the popped node
/// or else the best node so far if either clears the threshold. Otherwise
/// the popped node's children join the frontier, which is re-sorted by rank
/// (ties keep insertion order). If the frontier empties or the threshold
/// falls below `tau_min`, the best node seen is returned as a fallback.
pub fn search_type1(
    scorer: &mut Scorer<'_>,
    cue: &VisualCue,
    q_s: &str,
    cfg: &SearchConfig,
) -> Result<CueSearch, SearchError> {
    if cue.cue_type != CueType::Type1 {
        return Err(SearchError::InvalidInput(format!(
            "type-1 search given collective cue {:?}",
            cue.phrase
        )));
    }
    let tree = scorer.tree();
    let root = tree.root().id;
    let c0 = cfg.initial_step_threshold(tree.depth());
    let mut trace = SearchTrace::new(cue.clone(), Some(q_s.to_string()), cfg.tau, c0);

    let mut tau = cfg.tau;
    let mut c = c0;
    let mut decays = 0u32;
    let mut count = 0u32;
    let mut best = root;
    let mut ranks: HashMap<NodeId, RankScore> = HashMap::new();
    let mut frontier: Vec<(NodeId, f64)> = vec![(root, f64::INFINITY)];

    while !frontier.is_empty() {
        let (current, _) = frontier.remove(0);
        count += 1;
        let pop_idx = trace.push(with_rank(
            event(tree, TraceAction::Pop, current, count, tau, c),
            ranks.get(&current),
        ));

        if count >= c {
            decays += 1;
            tau = decayed_tau(cfg.tau, decays);
            c += cfg.delta;
            trace.push(event(tree, TraceAction::Decay, current, count, tau, c));
            if tau < cfg.tau_min {
                break;
            }
        }

        let (passed, c_a) =
            stopping_check(scorer, current, q_s, tau).map_err(|e| abort(e, &trace))?;
        trace.events[pop_idx].c_a = Some(c_a);
        if passed {
            let mut e = with_rank(
                event(tree, TraceAction::StopCurrent, current, count, tau, c),
                ranks.get(&current),
            );
            e.c_a = Some(c_a);
            trace.push(e);
            return Ok(CueSearch {
                results: vec![current],
                fallback: false,
                trace,
            });
        }
        let (best_passed, best_c_a) =
            stopping_check(scorer, best, q_s, tau).map_err(|e| abort(e, &trace))?;
        if best_passed {
            let mut e = with_rank(
                event(tree, TraceAction::StopBest, best, count, tau, c),
                ranks.get(&best),
            );
            e.c_a = Some(best_c_a);
            trace.push(e);
            return Ok(CueSearch {
                results: vec![best],
                fallback: false,
                trace,
            });
        }
        if c_a >= best_c_a {
            best = current;
        }

        let children = tree.node(current).children.clone();
        for child in children {
            let r = rank_score(scorer, child, cue, cfg.bias_b).map_err(|e| abort(e, &trace))?;
            ranks.insert(child, r);
            frontier.push((child, r.score));
            trace.push(with_rank(
                event(tree, TraceAction::AppendChild, child, count, tau, c),
                Some(&r),
            ));
        }
        // stable: equal ranks keep insertion order
        frontier.sort_by(|a, b| b.1.total_cmp(&a.1));
    }

    let mut e = with_rank(
        event(tree, TraceAction::Fallback, best, count, tau, c),
        ranks.get(&best),
    );
    e.c_a = scorer.cached(best, PromptKind::Answering, q_s);
    trace.push(e);
    Ok(CueSearch {
        results: vec![best],
        fallback: true,
        trace,
    })
}

/// Breadth-first sweep for a collective cue: every node shallower than
/// `max_type2_depth` whose existing confidence reaches `tau2` is kept.
pub fn search_type2(
    scorer: &mut Scorer<'_>,
    cue: &VisualCue,
    cfg: &SearchConfig,
) -> Result<CueSearch, SearchError> {
    if cue.cue_type != CueType::Type2 {
        return Err(SearchError::InvalidInput(format!(
            "type-2 search given specific cue {:?}",
            cue.phrase
        )));
    }
    let tree = scorer.tree();
    let mut trace = SearchTrace::new(cue.clone(), None, cfg.tau2, 0);
    let mut results = Vec::new();
    let mut queue = VecDeque::from([tree.root().id]);
    let mut count = 0u32;

    while let Some(current) = queue.pop_front() {
        if tree.node(current).depth >= cfg.max_type2_depth {
            break;
        }
        count += 1;
        let c_e = scorer
            .confidence(current, PromptKind::Existing, &cue.phrase)
            .map_err(|e| abort(e, &trace))?;
        let mut pop = event(tree, TraceAction::Pop, current, count, cfg.tau2, 0);
        pop.c_e = Some(c_e);
        trace.push(pop.clone());
        if c_e >= cfg.tau2 {
            results.push(current);
            pop.action = TraceAction::Type2Include;
            trace.push(pop);
        }
        queue.extend(tree.node(current).children.iter().copied());
    }

    Ok(CueSearch {
        results,
        fallback: false,
        trace,
    })
}

/// Dispatches on the cue type. `q_s` is only used by type-1 searches.
pub fn search_cue(
    scorer: &mut Scorer<'_>,
    cue: &VisualCue,
    q_s: &str,
    cfg: &SearchConfig,
) -> Result<CueSearch, SearchError> {
    match cue.cue_type {
        CueType::Type1 => search_type1(scorer, cue, q_s, cfg),
        CueType::Type2 => search_type2(scorer, cue, cfg),
    }
}
