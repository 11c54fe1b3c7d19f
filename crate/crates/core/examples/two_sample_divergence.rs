//! Two samples, (1, 0) and (1/2, sqrt(3)/2): the variance-maximizing
//! direction bisects them, while under a sample-wise perturbation of radius
//! 0.9 the best direction points at one of the samples.
//!
//! `cargo run --release --example two_sample_divergence`

use robust_spca::bnb::oracle::brute_force_oracle;
use robust_spca::heuristics::exact_sparse_pca;
use robust_spca::linalg::{covariance_from_samples, SampleMatrix};
use robust_spca::perturb::{objective_dense, PerturbKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]])?;
    let rho = 0.9;

    let (vanilla, var) = exact_sparse_pca(&covariance_from_samples(&x), 2)?;
    let vd = vanilla.to_dense();
    let (robust_at_vanilla, _) = objective_dense(&x, &vd, rho, PerturbKind::Samplewise);
    println!("max variance      {var:.6} at ({:.4}, {:.4})", vd[0], vd[1]);
    println!("  robust value    {robust_at_vanilla:.6}");

    let (best, v) = brute_force_oracle(&x, 2, rho, PerturbKind::Samplewise, 1e-4)?;
    let v = v.to_dense();
    println!("robust optimum    {best:.6} at ({:.4}, {:.4})", v[0], v[1]);
    Ok(())
}
