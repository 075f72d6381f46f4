//! Full question-answering run against the scripted oracle, printing the
//! search trace for each cue.
//!
//! cargo run --example ask_scripted

use zoomeye::geometry::{BBox, SourceImage};
use zoomeye::oracle::{ScriptedBackend, ScriptedOracleModel};
use zoomeye::search::{zoom_eye, CueExemplars, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = SourceImage::virtual_image(2688, 2688)?;
    let sign = BBox { x: 1900, y: 400, w: 120, h: 90 };
    let backend = ScriptedBackend::new(ScriptedOracleModel::new(sign, 0.1)?)
        .with_cue_completion("So I need the information about the following objects: red sign.")
        .with_answers("The sign shows a deer.", "I cannot see a sign.");
    let cfg = SearchConfig::local();
    let question = "What kind of animal is on the red sign?";

    let outcome = zoom_eye(&source, question, &cfg, &backend, &CueExemplars::v_star())?;
    for s in &outcome.searches {
        println!("cue {:?} (q_s {:?})", s.trace.cue.phrase, s.trace.q_s);
        for e in &s.trace.events {
            println!(
                "  {:>3} {:<13} node {:>3} depth {} tau {:.1} c_a {}",
                e.step,
                format!("{:?}", e.action),
                e.node.0,
                e.depth,
                e.tau,
                e.c_a.map_or("-".into(), |v| format!("{v:.3}")),
            );
        }
    }
    println!("union {:?}", outcome.union);
    println!("oracle calls {}", outcome.oracle_queries);
    println!("answer: {}", outcome.answer);
    Ok(())
}
