//! Strong/weak signal sweep over the normalized radius, printing the mean
//! angles of the best method per grid point.
//!
//! `cargo run --release --example stage_sweep -- [trials] [threads]`

use robust_spca::harness::{experiment_rows, mean_over_trials, ExperimentConfig, TruthMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().map(|a| a.parse()).transpose()?.unwrap_or(3);
    let threads = args.next().map(|a| a.parse()).transpose()?.unwrap_or(4);
    let cfg = ExperimentConfig {
        truth: TruthMode::StrongWeak { c: 0.8, k1: 1, k2: 4 },
        rho_bar_grid: (0..10).map(|i| 0.5 * i as f64).collect(),
        trials,
        threads,
        node_limit: 20_000,
        deterministic: true,
        ..ExperimentConfig::default()
    };
    let t0 = std::time::Instant::now();
    let rows = experiment_rows(&cfg)?;
    println!("rho_bar   ang    ang_s  ang_w  objective  (best method, {trials} trials)");
    for &rb in &cfg.rho_bar_grid {
        let m = |f: fn(&robust_spca::harness::MetricsRow) -> f64| mean_over_trials(&rows, "best", rb, f);
        println!(
            "{rb:5.1}   {:.3}  {:.3}  {:.3}  {:.4}",
            m(|r| r.ang),
            m(|r| r.ang_s),
            m(|r| r.ang_w),
            m(|r| r.objective)
        );
    }
    for r in rows.iter().filter(|r| r.method.starts_with("MIP")) {
        if r.status != "Optimal" && r.status != "AllPerturbed" {
            println!(
                "trial {} rho_bar {} {}: {} after {} nodes, gap {:.3e}",
                r.trial, r.rho_bar, r.method, r.status, r.nodes, r.gap
            );
        }
    }
    println!("elapsed {:.1?}", t0.elapsed());
    Ok(())
}
