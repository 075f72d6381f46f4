//! Command-line front end: `ask`, `bench` and `simulate`.
//!
//! Settings merge in three layers: the mode preset, then the config file
//! (flat TOML whose keys mirror the flag names), then explicit flags.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{HarnessError, OracleError, SearchError};
use crate::geometry::{annotate_trace, BBox, ResizePolicy, SourceImage};
use crate::harness::{load_dataset, run_bench, run_sim, SyntheticSpec};
use crate::oracle::{
    HttpBackend, HttpConfig, OracleBackend, ScriptedBackend, ScriptedOracleModel,
};
use crate::search::{zoom_eye, CueExemplars, SearchConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_TRANSPORT: i32 = 2;
pub const EXIT_IMAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "zoomeye", version, about = "Zoomed visual search for questions about high-resolution images")]
pub struct Cli {
    /// Flat TOML file with keys named like the flags
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for scripted-oracle noise and simulation placement
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for bench items and simulation trials
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(flatten)]
    pub search: SearchFlags,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SearchFlags {
    /// Parameter preset: local | global-local
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Type-1 stop threshold
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    /// Type-2 inclusion threshold
    #[arg(long, global = true)]
    pub tau2: Option<f64>,
    /// Lower limit for the decayed stop threshold
    #[arg(long = "tau-min", global = true)]
    pub tau_min: Option<f64>,
    /// Pops between threshold decays
    #[arg(long, global = true)]
    pub delta: Option<u32>,
    /// Depth-weight bias
    #[arg(long, global = true)]
    pub bias: Option<f64>,
    /// Oracle backend: http | scripted
    #[arg(long, global = true)]
    pub backend: Option<String>,
    /// Chat-completions base URL (http backend)
    #[arg(long = "api-base", global = true, env = "ZOOMEYE_API_BASE")]
    pub api_base: Option<String>,
    /// Model name sent to the server (http backend)
    #[arg(long, global = true, env = "ZOOMEYE_MODEL")]
    pub model: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer one question about one image
    Ask(AskArgs),
    /// Evaluate a JSONL dataset
    Bench(BenchArgs),
    /// Run planted-target simulations
    Simulate(SimArgs),
}

#[derive(Debug, Args)]
pub struct AskArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub question: String,
    /// Write a PNG with visited and union boxes drawn over the image
    #[arg(long)]
    pub annotate: Option<PathBuf>,
    /// Trace document path
    #[arg(long, default_value = "trace.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// One JSON record per line: {image, question, options?, answer}
    #[arg(long)]
    pub dataset: PathBuf,
    /// Also answer each item directly from the whole image
    #[arg(long)]
    pub baseline: bool,
    /// Report path
    #[arg(long, default_value = "bench_report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long = "min-node-size")]
    pub min_node_size: Option<u32>,
    #[arg(long = "target-size")]
    pub target_size: Option<u32>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub trials: Option<u32>,
    /// Comma-separated tau values to sweep
    #[arg(long = "sweep-tau", value_delimiter = ',')]
    pub sweep_tau: Vec<f64>,
    /// Comma-separated bias values to sweep
    #[arg(long = "sweep-bias", value_delimiter = ',')]
    pub sweep_bias: Vec<f64>,
    /// Comma-separated delta values to sweep
    #[arg(long = "sweep-delta", value_delimiter = ',')]
    pub sweep_delta: Vec<u32>,
    /// Report path
    #[arg(long, default_value = "sim_report.json")]
    pub out: PathBuf,
    /// Optional CSV of sweep rows
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Config-file keys. Every flag has a key of the same name, plus settings
/// with no flag of their own.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub mode: Option<String>,
    pub tau: Option<f64>,
    pub tau2: Option<f64>,
    pub tau_min: Option<f64>,
    pub delta: Option<u32>,
    pub bias: Option<f64>,
    pub c_multiplier: Option<u32>,
    pub max_type2_depth: Option<u32>,
    pub resize_policy: Option<String>,
    pub paste_longer_side: Option<u32>,
    pub min_node_size: Option<u32>,
    pub aspect_threshold: Option<f64>,
    pub backend: Option<String>,
    pub api_base: Option<String>,
    pub api_key: Option<String>,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    /// Exemplar set for cue generation: v-star | hr-bench
    pub exemplars: Option<String>,
    // scripted backend
    pub target: Option<String>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub noise: Option<f64>,
    pub answer: Option<String>,
    pub answer_full: Option<String>,
    pub cue_completion: Option<String>,
    // simulation
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub target_size: Option<u32>,
    pub trials: Option<u32>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {}", e.message())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedParams {
    pub target: Option<BBox>,
    pub rho: f64,
    pub epsilon: f64,
    pub noise: f64,
    pub answer: String,
    pub answer_full: Option<String>,
    pub cue_completion: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendChoice {
    Http(HttpConfig),
    Scripted(ScriptedParams),
}

/// Fully merged settings.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub search: SearchConfig,
    pub backend: BackendChoice,
    pub seed: u64,
    pub jobs: usize,
    pub exemplars: CueExemplars,
    pub file: FileConfig,
}

impl CliConfig {
    /// Applies preset, then `file`, then `flags`.
    pub fn merge(
        file: FileConfig,
        flags: &SearchFlags,
        seed: Option<u64>,
        jobs: Option<usize>,
    ) -> Result<Self, CliError> {
        let mode = flags
            .mode
            .clone()
            .or_else(|| file.mode.clone())
            .unwrap_or_else(|| "local".into());
        let mut s = SearchConfig::preset(&mode)
            .ok_or_else(|| CliError::Config(format!("unknown mode {mode:?} (local | global-local)")))?;

        macro_rules! set {
            ($field:ident, $flag:expr, $file:expr) => {
                if let Some(v) = $flag.or($file) {
                    s.$field = v;
                }
            };
        }
        set!(tau, flags.tau, file.tau);
        set!(tau2, flags.tau2, file.tau2);
        set!(tau_min, flags.tau_min, file.tau_min);
        set!(delta, flags.delta, file.delta);
        set!(bias_b, flags.bias, file.bias);
        set!(c_multiplier, None, file.c_multiplier);
        set!(max_type2_depth, None, file.max_type2_depth);
        set!(paste_longer_side, None, file.paste_longer_side);
        set!(min_node_size, None, file.min_node_size);
        set!(aspect_threshold, None, file.aspect_threshold);
        if let Some(p) = &file.resize_policy {
            s.resize_policy = match p.as_str() {
                "naive" => ResizePolicy::Naive,
                "server-side" | "server_side" => ResizePolicy::ServerSide,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown resize-policy {other:?} (naive | server-side)"
                    )))
                }
            };
        }
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let seed = seed.or(file.seed).unwrap_or(0);
        let jobs = jobs.or(file.jobs).unwrap_or(1).max(1);
        let exemplars = match file.exemplars.as_deref().unwrap_or("v-star") {
            "v-star" | "vstar" => CueExemplars::v_star(),
            "hr-bench" | "hrbench" => CueExemplars::hr_bench(),
            other => {
                return Err(CliError::Config(format!(
                    "unknown exemplars {other:?} (v-star | hr-bench)"
                )))
            }
        };

        let backend_name = flags
            .backend
            .clone()
            .or_else(|| file.backend.clone())
            .unwrap_or_else(|| "http".into());
        let backend = match backend_name.as_str() {
            "http" => {
                // checked in make_backend; simulate never talks to a server
                let base = flags
                    .api_base
                    .clone()
                    .or_else(|| file.api_base.clone())
                    .unwrap_or_default();
                let model = flags
                    .model
                    .clone()
                    .or_else(|| file.model.clone())
                    .unwrap_or_else(|| "default".into());
                let mut cfg = HttpConfig::new(base, model);
                cfg.api_key = file
                    .api_key
                    .clone()
                    .or_else(|| std::env::var(crate::oracle::ENV_API_KEY).ok())
                    .filter(|k| !k.is_empty());
                BackendChoice::Http(cfg)
            }
            "scripted" => {
                let target = file
                    .target
                    .as_deref()
                    .map(|t| {
                        t.parse::<BBox>()
                            .map_err(|e| CliError::Config(format!("target: {e}")))
                    })
                    .transpose()?;
                BackendChoice::Scripted(ScriptedParams {
                    target,
                    rho: file.rho.unwrap_or(0.5),
                    epsilon: file.epsilon.unwrap_or(0.05),
                    noise: file.noise.unwrap_or(0.0),
                    answer: file.answer.clone().unwrap_or_else(|| "A".into()),
                    answer_full: file.answer_full.clone(),
                    cue_completion: file.cue_completion.clone(),
                })
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown backend {other:?} (http | scripted)"
                )))
            }
        };

        Ok(Self {
            search: s,
            backend,
            seed,
            jobs,
            exemplars,
            file,
        })
    }

    /// Instantiates the backend for an image of the given size. A scripted
    /// backend without an explicit target plants one at the image centre.
    pub fn make_backend(&self, width: u32, height: u32) -> Result<Box<dyn OracleBackend>, CliError> {
        match &self.backend {
            BackendChoice::Http(cfg) => {
                let base = cfg.api_base.trim();
                if base.is_empty() {
                    return Err(CliError::Config(
                        "http backend needs --api-base or ZOOMEYE_API_BASE".into(),
                    ));
                }
                if !(base.starts_with("http://") || base.starts_with("https://")) {
                    return Err(CliError::Config(format!(
                        "api-base must start with http:// or https://, got {base:?}"
                    )));
                }
                Ok(Box::new(HttpBackend::new(cfg.clone())))
            }
            BackendChoice::Scripted(p) => {
                let target = match p.target {
                    Some(t) => t,
                    None => {
                        let side = (self.search.min_node_size / 2).clamp(1, width.min(height));
                        BBox {
                            x: (width - side) / 2,
                            y: (height - side) / 2,
                            w: side,
                            h: side,
                        }
                    }
                };
                let model = ScriptedOracleModel::new(target, p.rho)
                    .map_err(|e| CliError::Config(e.to_string()))?
                    .with_epsilon(p.epsilon)
                    .with_noise(p.noise, self.seed);
                let mut backend = ScriptedBackend::new(model)
                    .with_answers(
                        p.answer.clone(),
                        p.answer_full.clone().unwrap_or_else(|| p.answer.clone()),
                    )
                    .with_exemplar_answers(&self.exemplars);
                if let Some(c) = &p.cue_completion {
                    backend = backend.with_cue_completion(c.clone());
                }
                Ok(Box::new(backend))
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Transport(String),
    #[error("{0}")]
    Image(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Transport(_) => EXIT_TRANSPORT,
            CliError::Image(_) => EXIT_IMAGE,
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Geometry(g) => CliError::Image(g.to_string()),
            OracleError::InvalidRequest(m) => CliError::Config(m),
            other => CliError::Transport(other.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Oracle(o) | SearchError::Aborted { source: o, .. } => o.into(),
            SearchError::Geometry(g) => CliError::Image(g.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Search(s) => s.into(),
            HarnessError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn cmd_ask(cfg: &CliConfig, args: &AskArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let source = SourceImage::open(&args.image).map_err(|e| CliError::Image(e.to_string()))?;
    let backend = cfg.make_backend(source.width(), source.height())?;
    let outcome = zoom_eye(&source, &args.question, &cfg.search, &*backend, &cfg.exemplars)?;
    write_file(&args.out, &to_json(&outcome.to_document(&args.question, &cfg.search))?)?;
    if let Some(path) = &args.annotate {
        let img = annotate_trace(&source, &outcome.visited_boxes(), Some(outcome.union))
            .map_err(|e| CliError::Image(e.to_string()))?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(e.to_string()))?;
        }
        img.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| CliError::Image(format!("{}: {e}", path.display())))?;
    }
    writeln!(out, "{}", outcome.answer).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

fn cmd_bench(cfg: &CliConfig, args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let dataset = load_dataset(&args.dataset)?;
    if dataset.items.is_empty() {
        return Err(CliError::Config(format!(
            "dataset {} has no items",
            args.dataset.display()
        )));
    }
    // scripted targets are planted relative to the first image
    let (w, h) = image::image_dimensions(&dataset.items[0].image_path)
        .map_err(|e| CliError::Image(format!("{}: {e}", dataset.items[0].image_path.display())))?;
    let backend = cfg.make_backend(w, h)?;
    let report = run_bench(
        &dataset.items,
        &cfg.search,
        &*backend,
        &cfg.exemplars,
        args.baseline,
        cfg.jobs,
    )?;
    write_file(&args.out, &to_json(&report)?)?;
    let s = &report.summary;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    match (s.baseline_accuracy, s.delta) {
        (Some(b), Some(d)) => writeln!(
            out,
            "items={} scored={} accuracy={:.4} baseline={:.4} delta={:+.4}",
            s.total, s.scored, s.accuracy, b, d
        )
        .map_err(io)?,
        _ => writeln!(
            out,
            "items={} scored={} accuracy={:.4}",
            s.total, s.scored, s.accuracy
        )
        .map_err(io)?,
    }
    if s.scored == 0 && s.total > 0 {
        return Err(CliError::Transport("every item failed with a transport error".into()));
    }
    Ok(())
}

fn cmd_simulate(cfg: &CliConfig, args: &SimArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let f = &cfg.file;
    let defaults = SyntheticSpec::default();
    let spec = SyntheticSpec {
        image_width: args.width.or(f.width).unwrap_or(defaults.image_width),
        image_height: args.height.or(f.height).unwrap_or(defaults.image_height),
        min_node_size: args.min_node_size.unwrap_or(cfg.search.min_node_size),
        aspect_threshold: cfg.search.aspect_threshold,
        target_size: args.target_size.or(f.target_size).unwrap_or(defaults.target_size),
        noise_sigma: args.noise.or(f.noise).unwrap_or(0.0),
        trials: args.trials.or(f.trials).unwrap_or(defaults.trials),
        seed: cfg.seed,
    };
    spec.validate()?;

    let taus = non_empty(&args.sweep_tau, cfg.search.tau);
    let biases = non_empty(&args.sweep_bias, cfg.search.bias_b);
    let deltas = non_empty(&args.sweep_delta, cfg.search.delta);
    let mut grid = Vec::new();
    for &tau in &taus {
        for &bias_b in &biases {
            for &delta in &deltas {
                let mut c = cfg.search.clone();
                c.tau = tau;
                c.bias_b = bias_b;
                c.delta = delta;
                c.min_node_size = spec.min_node_size;
                c.validate().map_err(|e| CliError::Config(e.to_string()))?;
                grid.push(c);
            }
        }
    }

    let report = run_sim(&spec, &grid, cfg.jobs)?;
    write_file(&args.out, &to_json(&report)?)?;
    if let Some(csv) = &args.csv {
        write_file(csv, report.to_csv()?.as_bytes())?;
    }
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    writeln!(
        out,
        "depth={} trials={} random_descent={:.4}",
        report.tree_depth, spec.trials, report.random_descent_success_rate
    )
    .map_err(io)?;
    for r in &report.rows {
        writeln!(
            out,
            "tau={} bias={} delta={} success_rate={:.4} mean_pops={:.3}",
            r.tau, r.bias_b, r.delta, r.success_rate, r.mean_pops
        )
        .map_err(io)?;
    }
    Ok(())
}

fn non_empty<T: Copy>(values: &[T], default: T) -> Vec<T> {
    if values.is_empty() {
        vec![default]
    } else {
        values.to_vec()
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = CliConfig::merge(file, &cli.search, cli.seed, cli.jobs)?;
    match &cli.command {
        Command::Ask(a) => cmd_ask(&cfg, a, out),
        Command::Bench(b) => cmd_bench(&cfg, b, out),
        Command::Simulate(s) => cmd_simulate(&cfg, s, out),
    }
}
