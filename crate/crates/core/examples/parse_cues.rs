//! Extracts visual cues from cue-generation completions, including the
//! replies shipped with the built-in exemplar sets.
//!
//! cargo run --example parse_cues -- ["completion text" ...]

use zoomeye::search::{parse_cues, CueExemplars};

fn main() {
    let given: Vec<String> = std::env::args().skip(1).collect();
    let texts = if given.is_empty() {
        CueExemplars::hr_bench()
            .pairs()
            .iter()
            .map(|(_, reply)| reply.clone())
            .collect()
    } else {
        given
    };
    for text in texts {
        let parsed = parse_cues(&text);
        let cues: Vec<String> = parsed
            .cues
            .iter()
            .map(|c| format!("{} ({:?})", c.phrase, c.cue_type))
            .collect();
        let flag = if parsed.degraded { " [degraded]" } else { "" };
        println!("{}{flag}\n  -> {}", text, cues.join(", "));
    }
}
