//! Event log of a single cue search.

use serde::{Deserialize, Serialize};

use crate::geometry::{BBox, NodeId};

use super::VisualCue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TraceAction {
    Pop,
    AppendChild,
    Decay,
    StopCurrent,
    StopBest,
    Fallback,
    Type2Include,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    /// Position in the event log.
    pub step: u32,
    /// Pops so far, including the one this event belongs to.
    pub pops: u32,
    pub action: TraceAction,
    pub node: NodeId,
    pub depth: u32,
    pub bbox: BBox,
    pub c_e: Option<f64>,
    pub c_l: Option<f64>,
    pub c_a: Option<f64>,
    pub rank: Option<f64>,
    /// Stop threshold in force after this event.
    pub tau: f64,
    /// Step threshold in force after this event.
    pub c: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub cue: VisualCue,
    /// Stopping question; absent for type-2 searches.
    pub q_s: Option<String>,
    pub tau0: f64,
    pub c0: u32,
    pub events: Vec<TraceEvent>,
}

impl SearchTrace {
    pub fn new(cue: VisualCue, q_s: Option<String>, tau0: f64, c0: u32) -> Self {
        Self {
            cue,
            q_s,
            tau0,
            c0,
            events: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, mut event: TraceEvent) -> usize {
        event.step = self.events.len() as u32;
        self.events.push(event);
        self.events.len() - 1
    }

    /// Nodes in the order they were visited.
    pub fn visited(&self) -> Vec<NodeId> {
        self.of(TraceAction::Pop).map(|e| e.node).collect()
    }

    pub fn pop_count(&self) -> usize {
        self.of(TraceAction::Pop).count()
    }

    pub fn decay_count(&self) -> usize {
        self.of(TraceAction::Decay).count()
    }

    pub fn of(&self, action: TraceAction) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.action == action)
    }

    pub fn actions(&self) -> Vec<TraceAction> {
        self.events.iter().map(|e| e.action).collect()
    }

    /// The event that ended the search, if any.
    pub fn terminal(&self) -> Option<&TraceEvent> {
        self.events.iter().rev().find(|e| {
            matches!(
                e.action,
                TraceAction::StopCurrent | TraceAction::StopBest | TraceAction::Fallback
            )
        })
    }
}
