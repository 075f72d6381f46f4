//! Planted-target simulation over a small (tau, bias) grid.
//!
//! cargo run --release --example simulate -- [trials] [width] [target_size]

use zoomeye::harness::{run_sim, SyntheticSpec};
use zoomeye::search::SearchConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u32>());
    let defaults = SyntheticSpec::default();
    let trials = args.next().transpose()?.unwrap_or(1000);
    let side = args.next().transpose()?.unwrap_or(defaults.image_width);
    let target = args.next().transpose()?.unwrap_or(defaults.target_size);
    let spec = SyntheticSpec {
        image_width: side,
        image_height: side,
        target_size: target,
        trials,
        ..defaults
    };

    let mut grid = Vec::new();
    for tau in [0.6, 0.8] {
        for bias in [0.2, 0.6] {
            grid.push(SearchConfig {
                tau,
                bias_b: bias,
                ..SearchConfig::local()
            });
        }
    }

    let report = run_sim(&spec, &grid, 4)?;
    println!(
        "{}x{} target {} depth {} trials {}; random descent {:.3}",
        side, side, target, report.tree_depth, trials, report.random_descent_success_rate
    );
    for r in &report.rows {
        println!(
            "tau {:.1} bias {:.1}: success {:.3} mean pops {:.2} decays {:.2} fallbacks {} pops by depth {:?}",
            r.tau, r.bias_b, r.success_rate, r.mean_pops, r.mean_decays, r.fallbacks, r.pop_histogram
        );
    }
    Ok(())
}
