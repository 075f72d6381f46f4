//! Cue handling and the search procedures over an [`ImageTree`](crate::geometry::ImageTree).

mod config;
mod cues;
mod engine;
mod scoring;
mod trace;
mod workflow;

pub use config::{SearchConfig, TAU_DECAY_STEP};
pub use cues::{
    cue_query, generate_cues, parse_cues, strip_cue_query, CueExemplars, CueType, ParsedCues,
    VisualCue,
};
pub use engine::{decayed_tau, search_cue, search_type1, search_type2, CueSearch};
pub use scoring::{rank_score, stopping_check, weight, RankScore, Scorer};
pub use trace::{SearchTrace, TraceAction, TraceEvent};
pub use workflow::{
    direct_answer, zoom_eye, zoom_eye_with_prompt, ImageDims, SearchOutcome, SearchRecord,
    SkippedCue, SkippedRecord, TraceDocument, TRACE_VERSION,
};
