//! Scores the bundled three-item fixture with and without zooming.
//!
//! cargo run --example bench_scripted

use std::path::Path;

use zoomeye::geometry::BBox;
use zoomeye::harness::{load_dataset, run_bench};
use zoomeye::oracle::{ScriptedBackend, ScriptedOracleModel};
use zoomeye::search::{CueExemplars, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/bench/items.jsonl");
    let dataset = load_dataset(&path)?;
    let sign = BBox { x: 760, y: 420, w: 96, h: 96 };
    // the zoomed view sees the sign, the full view does not
    let backend = ScriptedBackend::new(ScriptedOracleModel::new(sign, 0.08)?)
        .with_cue_completion("So I need the information about the following objects: sign.")
        .with_answers("red", "yellow");

    let report = run_bench(
        &dataset.items,
        &SearchConfig::local(),
        &backend,
        &CueExemplars::v_star(),
        true,
        2,
    )?;
    for item in &report.items {
        let zoom = item.zoom.as_ref().map_or("-", |a| a.answer.as_str());
        let base = item.baseline.as_ref().map_or("-", |a| a.answer.as_str());
        println!("{:?} gold {:?}: zoom {zoom:?} baseline {base:?}", item.question, item.gold);
    }
    let s = &report.summary;
    println!(
        "accuracy {:.3} baseline {:.3} delta {:+.3}",
        s.accuracy,
        s.baseline_accuracy.unwrap_or(0.0),
        s.delta.unwrap_or(0.0)
    );
    Ok(())
}
