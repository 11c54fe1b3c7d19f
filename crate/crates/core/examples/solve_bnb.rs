//! Certified bounds from branch-and-bound on both perturbation models,
//! compared with the brute-force optimum on a small random instance.
//!
//! `cargo run --release --example solve_bnb`

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_spca::bnb::oracle::brute_force_oracle;
use robust_spca::bnb::{solve, SolverOptions};
use robust_spca::linalg::SampleMatrix;
use robust_spca::micp::{build_model, Formulation};
use robust_spca::perturb::PerturbKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = SampleMatrix::new(30, 6, (0..180).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect())?;
    let (k, rho) = (2, 0.5);
    for kind in [PerturbKind::Samplewise, PerturbKind::Featurewise] {
        let (opt, _) = brute_force_oracle(&x, k, rho, kind, 1e-3)?;
        for n_seg in [2, 4, 8] {
            let model = build_model(&x, kind, Formulation::Full, k, rho, n_seg, None)?;
            let rep = solve(&model, &SolverOptions::default(), None)?;
            println!(
                "{kind:11} N={n_seg}  lb {:.6}  optimum {opt:.6}  ub {:.6}  nodes {:5}  {:?}",
                rep.lb, rep.ub, rep.nodes, rep.status
            );
        }
    }
    let model = build_model(&x, PerturbKind::Featurewise, Formulation::Full, k, rho, 4, None)?;
    let stats = model.stats();
    println!(
        "feature-wise model: {} binaries, {} continuous, {} constraints",
        stats.binary, stats.continuous, stats.constraints
    );
    Ok(())
}
