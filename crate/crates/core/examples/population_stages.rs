//! Population-level stages for a strong/weak planted direction: where the
//! optimizer keeps both parts, only the strong part, or nothing.
//!
//! `cargo run --release --example population_stages`

use robust_spca::statgen::{stage_classify, stage_thresholds, stage_transitions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (lambda, n, c, k1, k2) = (3.0, 500, 0.8, 1, 4);
    let th = stage_thresholds(lambda, n, c, k1, k2)?;
    println!("closed-form window: [{:.4}, {:.4}]", th.robust_lower, th.robust_upper);
    for (rho, from, to) in stage_transitions(lambda, n, c, k1, k2, 40.0, 800)? {
        println!("transition at rho = {rho:.6}: {from:?} -> {to:?}");
    }
    for rho in [0.0, 5.0, 10.0, 15.0, 20.0, 100.0] {
        println!("rho {rho:6.1}: {:?}", stage_classify(lambda, n, c, k1, k2, rho)?);
    }
    Ok(())
}
