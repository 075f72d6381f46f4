use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{match_choice, BenchItem};
use crate::error::{HarnessError, SearchError};
use crate::geometry::SourceImage;
use crate::oracle::{answer_prompt, OracleBackend};
use crate::search::{direct_answer, zoom_eye_with_prompt, CueExemplars, SearchConfig, TraceDocument};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub answer: String,
    pub matched: Option<usize>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub index: usize,
    pub image: String,
    pub question: String,
    pub gold: String,
    pub zoom: Option<AnswerRecord>,
    pub baseline: Option<AnswerRecord>,
    pub error: Option<String>,
    /// Transport failures are left out of the accuracy denominator.
    pub transport_failure: bool,
    pub trace: Option<TraceDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub total: usize,
    pub scored: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub baseline_correct: Option<usize>,
    pub baseline_accuracy: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub summary: BenchSummary,
    pub items: Vec<ItemRecord>,
}

fn grade(item: &BenchItem, answer: String) -> AnswerRecord {
    match &item.options {
        Some(opts) => {
            let matched = match_choice(&answer, opts);
            AnswerRecord {
                correct: matched.is_some() && matched == item.gold_index(),
                matched,
                answer,
            }
        }
        None => {
            let gold = item.answer.trim().to_lowercase();
            let got = answer.trim().to_lowercase();
            AnswerRecord {
                correct: !gold.is_empty() && (got == gold || got.contains(&gold)),
                matched: None,
                answer,
            }
        }
    }
}

fn run_item(
    index: usize,
    item: &BenchItem,
    cfg: &SearchConfig,
    backend: &dyn OracleBackend,
    exemplars: &CueExemplars,
    baseline: bool,
) -> ItemRecord {
    let mut record = ItemRecord {
        index,
        image: item.image_path.display().to_string(),
        question: item.question.clone(),
        gold: item.answer.clone(),
        zoom: None,
        baseline: None,
        error: None,
        transport_failure: false,
        trace: None,
    };
    let result = (|| -> Result<(), SearchError> {
        let source = SourceImage::open(&item.image_path)?;
        let prompt = answer_prompt(&item.question, item.options.as_deref());
        let outcome =
            zoom_eye_with_prompt(&source, &item.question, &prompt, cfg, backend, exemplars)?;
        record.trace = Some(outcome.to_document(&item.question, cfg));
        record.zoom = Some(grade(item, outcome.answer));
        if baseline {
            record.baseline = Some(grade(item, direct_answer(&source, &prompt, backend)?));
        }
        Ok(())
    })();
    if let Err(e) = result {
        record.transport_failure = e.is_transport();
        record.error = Some(e.to_string());
    }
    record
}

/// Evaluates every item with the full search and, optionally, a direct
/// whole-image baseline. `jobs > 1` runs items in parallel; records keep
/// dataset order either way.
pub fn run_bench(
    items: &[BenchItem],
    cfg: &SearchConfig,
    backend: &dyn OracleBackend,
    exemplars: &CueExemplars,
    baseline: bool,
    jobs: usize,
) -> Result<BenchReport, HarnessError> {
    if items.is_empty() {
        return Err(HarnessError::InvalidInput("no bench items".into()));
    }
    cfg.validate()?;
    let run = |(i, item): (usize, &BenchItem)| run_item(i, item, cfg, backend, exemplars, baseline);
    let records: Vec<ItemRecord> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::InvalidInput(e.to_string()))?;
        pool.install(|| items.par_iter().enumerate().map(run).collect())
    } else {
        items.iter().enumerate().map(run).collect()
    };
    Ok(BenchReport {
        summary: summarize(&records, baseline),
        items: records,
    })
}

/// Recomputes the summary from per-item records.
pub fn summarize(records: &[ItemRecord], baseline: bool) -> BenchSummary {
    let scored: Vec<&ItemRecord> = records.iter().filter(|r| !r.transport_failure).collect();
    let ratio = |n: usize| {
        if scored.is_empty() {
            0.0
        } else {
            n as f64 / scored.len() as f64
        }
    };
    let correct = scored
        .iter()
        .filter(|r| r.zoom.as_ref().is_some_and(|a| a.correct))
        .count();
    let baseline_correct = baseline.then(|| {
        scored
            .iter()
            .filter(|r| r.baseline.as_ref().is_some_and(|a| a.correct))
            .count()
    });
    let accuracy = ratio(correct);
    let baseline_accuracy = baseline_correct.map(ratio);
    BenchSummary {
        total: records.len(),
        scored: scored.len(),
        correct,
        accuracy,
        baseline_correct,
        baseline_accuracy,
        delta: baseline_accuracy.map(|b| accuracy - b),
    }
}
