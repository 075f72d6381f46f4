//! Dataset evaluation and planted-target simulation.

mod bench;
mod choice;
mod dataset;
mod sim;

pub use bench::{run_bench, summarize, AnswerRecord, BenchReport, BenchSummary, ItemRecord};
pub use choice::match_choice;
pub use dataset::{load_dataset, BenchItem, Dataset, MAX_MALFORMED_FRACTION};
pub use sim::{
    is_success, random_descent, run_sim, run_trial, synth_tree, SimReport, SimRow, SyntheticSpec,
    TrialOutcome, SIM_CUE, SIM_QUESTION, SUCCESS_AREA_FACTOR,
};
