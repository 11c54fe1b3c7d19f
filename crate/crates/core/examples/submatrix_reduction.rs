//! Reducing 100 features to 15 with the submatrix initialization, and
//! checking that the planted support survives.
//!
//! `cargo run --release --example submatrix_reduction`

use robust_spca::heuristics::submatrix_init;
use robust_spca::linalg::covariance_from_samples;
use robust_spca::statgen::{sample_spiked, spiked_truth, SpikedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for seed in 0..5 {
        let v_star = spiked_truth(100, 5, seed)?;
        let x = sample_spiked(&SpikedModel::new(3.0, v_star.clone())?, 500, seed)?;
        let (kept, _) = submatrix_init(&covariance_from_samples(&x), 5, 15, 100, None)?;
        let found = v_star.support.iter().filter(|i| kept.contains(i)).count();
        println!("seed {seed}: planted {:?}, kept {found}/5", v_star.support);
    }
    Ok(())
}
