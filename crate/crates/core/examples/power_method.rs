//! Projected power method on spiked data: objective trace, and the angle to
//! the planted direction as the radius grows.
//!
//! `cargo run --release --example power_method`

use robust_spca::heuristics::{ppm, PpmOptions};
use robust_spca::linalg::dot;
use robust_spca::perturb::PerturbKind;
use robust_spca::statgen::{sample_spiked, spiked_truth, SpikedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (d, n, k) = (50, 400, 4);
    let v_star = spiked_truth(d, k, 8)?;
    let x = sample_spiked(&SpikedModel::new(3.0, v_star.clone())?, n, 8)?;
    let first = ppm(&x, k, 5.0, PerturbKind::Featurewise, &PpmOptions::default(), None)?;
    let trace: Vec<String> = first.trace.iter().take(8).map(|f| format!("{f:.4}")).collect();
    println!("trace at rho = 5: {} ({} iterations)", trace.join(" "), first.iterations);
    for rho in [0.0, 5.0, 10.0, 20.0, 30.0] {
        let r = ppm(&x, k, rho, PerturbKind::Featurewise, &PpmOptions::default(), None)?;
        let ang = dot(&r.v.to_dense(), &v_star.to_dense()).abs();
        println!("rho {rho:5.1}  objective {:.4}  |<v, v*>| {ang:.3}  support {:?}", r.objective, r.v.support);
    }
    Ok(())
}
