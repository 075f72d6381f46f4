//! Runs the scripted search on the demo image and writes the visited
//! boxes and the answer region over it.
//!
//! cargo run --example annotate -- [out.png]

use std::path::Path;

use zoomeye::geometry::{annotate_trace, BBox, SourceImage};
use zoomeye::oracle::{ScriptedBackend, ScriptedOracleModel};
use zoomeye::search::{zoom_eye, CueExemplars, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "annotated.png".into());
    let source = SourceImage::open(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo.png"))?;
    let sign = BBox { x: 760, y: 420, w: 96, h: 96 };
    let backend = ScriptedBackend::new(ScriptedOracleModel::new(sign, 0.08)?)
        .with_cue_completion("So I need the information about the following objects: red sign.");

    let outcome = zoom_eye(
        &source,
        "What color is the sign?",
        &SearchConfig::local(),
        &backend,
        &CueExemplars::v_star(),
    )?;
    let visited = outcome.visited_boxes();
    annotate_trace(&source, &visited, Some(outcome.union))?.save(&out)?;
    println!("{} boxes visited, union {:?}, wrote {out}", visited.len(), outcome.union);
    Ok(())
}
