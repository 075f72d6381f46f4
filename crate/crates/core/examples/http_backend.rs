//! Asks a question through an OpenAI-compatible chat-completions server.
//!
//! ZOOMEYE_API_BASE=http://localhost:8000/v1 ZOOMEYE_MODEL=llava \
//!     cargo run --example http_backend -- image.jpg "What is written on the sign?"
//!
//! ZOOMEYE_API_KEY is sent as a bearer token when set. The server must
//! report top log-probabilities for the first token.

use zoomeye::geometry::SourceImage;
use zoomeye::oracle::{HttpBackend, HttpConfig, ENV_API_BASE, ENV_API_KEY, ENV_MODEL};
use zoomeye::search::{zoom_eye, CueExemplars, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (Some(image), Some(question)) = (args.next(), args.next()) else {
        eprintln!("usage: http_backend <image> <question>");
        std::process::exit(1);
    };
    let Ok(base) = std::env::var(ENV_API_BASE) else {
        eprintln!("set {ENV_API_BASE} to the server's /v1 base URL");
        std::process::exit(1);
    };
    let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".into());
    let mut cfg = HttpConfig::new(base, model);
    cfg.api_key = std::env::var(ENV_API_KEY).ok();

    let source = SourceImage::open(&image)?;
    let outcome = zoom_eye(
        &source,
        &question,
        &SearchConfig::local(),
        &HttpBackend::new(cfg),
        &CueExemplars::v_star(),
    )?;
    println!("cues: {:?}", outcome.cues.iter().map(|c| &c.phrase).collect::<Vec<_>>());
    println!("union: {:?} ({} oracle calls)", outcome.union, outcome.oracle_queries);
    println!("{}", outcome.answer);
    Ok(())
}
