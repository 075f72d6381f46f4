//! Planted-target simulation: searches over virtual images against the
//! geometric scripted oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, SearchError};
use crate::geometry::{build_tree, BBox, ImageTree, NodeId, SourceImage};
use crate::oracle::{ScriptedBackend, ScriptedOracleModel};
use crate::search::{search_type1, CueSearch, Scorer, SearchConfig, VisualCue};

pub const SIM_CUE: &str = "target";
pub const SIM_QUESTION: &str = "where is the target?";
/// A returned patch may be at most this many times the target's area.
pub const SUCCESS_AREA_FACTOR: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub image_width: u32,
    pub image_height: u32,
    pub min_node_size: u32,
    pub aspect_threshold: f64,
    pub target_size: u32,
    pub noise_sigma: f64,
    pub trials: u32,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            image_width: 1344,
            image_height: 1344,
            min_node_size: 336,
            aspect_threshold: 1.5,
            target_size: 97,
            noise_sigma: 0.0,
            trials: 100,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidInput(m));
        if self.image_width == 0 || self.image_height == 0 {
            return bad("image dimensions must be positive".into());
        }
        if self.target_size == 0 || self.target_size > self.min_node_size {
            return bad(format!(
                "target_size must lie in 1..={}, got {}",
                self.min_node_size, self.target_size
            ));
        }
        if self.target_size > self.image_width || self.target_size > self.image_height {
            return bad("target does not fit inside the image".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        Ok(())
    }

    /// Visibility ratio at which a leaf-sized patch shows the target at
    /// full confidence.
    pub fn visibility_ratio(&self) -> f64 {
        let r = self.target_size as f64 / self.min_node_size as f64;
        (r * r).clamp(f64::MIN_POSITIVE, 1.0)
    }
}

fn trial_rng(seed: u64, trial: u32, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((trial as u64) << 8) ^ stream);
    rng.set_stream(stream);
    rng
}

/// One trial's tree and planted-target oracle.
pub fn synth_tree(
    spec: &SyntheticSpec,
    trial: u32,
) -> Result<(ImageTree, ScriptedOracleModel), HarnessError> {
    spec.validate()?;
    let tree = build_tree(
        spec.image_width,
        spec.image_height,
        spec.min_node_size,
        spec.aspect_threshold,
    )
    .map_err(SearchError::from)?;
    let mut rng = trial_rng(spec.seed, trial, 1);
    let t = spec.target_size;
    let target = BBox {
        x: rng.random_range(0..=spec.image_width - t),
        y: rng.random_range(0..=spec.image_height - t),
        w: t,
        h: t,
    };
    let model = ScriptedOracleModel::new(target, spec.visibility_ratio())
        .map_err(SearchError::from)?
        .with_noise(spec.noise_sigma, spec.seed ^ (trial as u64).wrapping_mul(0x9E37_79B9));
    Ok((tree, model))
}

/// Whether `node` is a useful answer for `target`.
pub fn is_success(node: &BBox, target: &BBox) -> bool {
    let (cx, cy) = target.center();
    node.contains_point(cx, cy) && node.area() <= SUCCESS_AREA_FACTOR * target.area()
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub tree: ImageTree,
    pub model: ScriptedOracleModel,
    pub search: CueSearch,
    pub success: bool,
}

/// Runs a single type-1 search for the planted target.
pub fn run_trial(
    spec: &SyntheticSpec,
    cfg: &SearchConfig,
    trial: u32,
) -> Result<TrialOutcome, HarnessError> {
    let (tree, model) = synth_tree(spec, trial)?;
    let source = SourceImage::virtual_image(spec.image_width, spec.image_height)
        .map_err(SearchError::from)?;
    let backend = ScriptedBackend::new(model.clone());
    let mut scorer = Scorer::new(&tree, &source, &backend, cfg.mode);
    let search = search_type1(&mut scorer, &VisualCue::new(SIM_CUE), SIM_QUESTION, cfg)?;
    let success = search
        .results
        .first()
        .is_some_and(|id| is_success(&tree.node(*id).bbox, &model.target_bbox));
    Ok(TrialOutcome {
        tree,
        model,
        search,
        success,
    })
}

/// Success of descending to a uniformly random leaf.
pub fn random_descent(spec: &SyntheticSpec, trial: u32) -> Result<bool, HarnessError> {
    let (tree, model) = synth_tree(spec, trial)?;
    let mut rng = trial_rng(spec.seed, trial, 2);
    let mut node = tree.root();
    while !node.is_leaf() {
        let pick = rng.random_range(0..node.children.len());
        node = tree.node(node.children[pick]);
    }
    Ok(is_success(&node.bbox, &model.target_bbox))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub tau: f64,
    pub tau_min: f64,
    pub bias_b: f64,
    pub delta: u32,
    pub trials: u32,
    pub successes: u32,
    pub success_rate: f64,
    pub mean_pops: f64,
    pub fallbacks: u32,
    pub mean_decays: f64,
    /// Pops per node depth, summed over trials.
    pub pop_histogram: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub spec: SyntheticSpec,
    pub tree_depth: u32,
    pub random_descent_success_rate: f64,
    pub rows: Vec<SimRow>,
}

#[derive(Debug, Serialize)]
struct CsvRow {
    tau: f64,
    tau_min: f64,
    bias_b: f64,
    delta: u32,
    trials: u32,
    successes: u32,
    success_rate: f64,
    mean_pops: f64,
    fallbacks: u32,
    mean_decays: f64,
    random_descent_success_rate: f64,
}

impl SimReport {
    /// One line per config row.
    pub fn to_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(CsvRow {
                tau: r.tau,
                tau_min: r.tau_min,
                bias_b: r.bias_b,
                delta: r.delta,
                trials: r.trials,
                successes: r.successes,
                success_rate: r.success_rate,
                mean_pops: r.mean_pops,
                fallbacks: r.fallbacks,
                mean_decays: r.mean_decays,
                random_descent_success_rate: self.random_descent_success_rate,
            })
            .map_err(|e| HarnessError::InvalidInput(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| HarnessError::InvalidInput(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::InvalidInput(e.to_string()))
    }
}

fn map_trials<T: Send>(
    trials: u32,
    jobs: usize,
    f: impl Fn(u32) -> Result<T, HarnessError> + Sync + Send,
) -> Result<Vec<T>, HarnessError> {
    if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| HarnessError::InvalidInput(e.to_string()))?;
        pool.install(|| (0..trials).into_par_iter().map(&f).collect())
    } else {
        (0..trials).map(f).collect()
    }
}

/// Runs every config in `grid` over the same seeded trials.
pub fn run_sim(
    spec: &SyntheticSpec,
    grid: &[SearchConfig],
    jobs: usize,
) -> Result<SimReport, HarnessError> {
    spec.validate()?;
    if grid.is_empty() {
        return Err(HarnessError::InvalidInput("empty config grid".into()));
    }
    for cfg in grid {
        cfg.validate()?;
    }
    let (probe, _) = synth_tree(spec, 0)?;
    let depth = probe.depth();

    let descents = map_trials(spec.trials, jobs, |t| random_descent(spec, t))?;
    let random_descent_success_rate =
        descents.iter().filter(|s| **s).count() as f64 / spec.trials as f64;

    let mut rows = Vec::with_capacity(grid.len());
    for cfg in grid {
        let outcomes = map_trials(spec.trials, jobs, |t| {
            let o = run_trial(spec, cfg, t)?;
            let depths: Vec<u32> = o
                .search
                .trace
                .visited()
                .iter()
                .map(|id: &NodeId| o.tree.node(*id).depth)
                .collect();
            Ok((o.success, o.search.fallback, o.search.trace.decay_count(), depths))
        })?;
        let mut pop_histogram = vec![0u64; depth as usize + 1];
        let (mut successes, mut fallbacks, mut pops, mut decays) = (0u32, 0u32, 0usize, 0usize);
        for (success, fallback, decay_count, depths) in &outcomes {
            successes += *success as u32;
            fallbacks += *fallback as u32;
            decays += decay_count;
            pops += depths.len();
            for d in depths {
                pop_histogram[*d as usize] += 1;
            }
        }
        let n = spec.trials as f64;
        rows.push(SimRow {
            tau: cfg.tau,
            tau_min: cfg.tau_min,
            bias_b: cfg.bias_b,
            delta: cfg.delta,
            trials: spec.trials,
            successes,
            success_rate: successes as f64 / n,
            mean_pops: pops as f64 / n,
            fallbacks,
            mean_decays: decays as f64 / n,
            pop_histogram,
        });
    }

    Ok(SimReport {
        spec: spec.clone(),
        tree_depth: depth,
        random_descent_success_rate,
        rows,
    })
}
