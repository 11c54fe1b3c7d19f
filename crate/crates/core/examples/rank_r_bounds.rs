//! Upper bounds from the rank-r surrogate for increasing r, next to the full
//! model, with the reported residual weight gamma.
//!
//! `cargo run --release --example rank_r_bounds`

use robust_spca::bnb::{solve, SolverOptions};
use robust_spca::linalg::covariance_from_samples;
use robust_spca::micp::{build_model, Formulation};
use robust_spca::perturb::PerturbKind;
use robust_spca::statgen::{sample_spiked, spiked_truth, SpikedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v_star = spiked_truth(8, 3, 21)?;
    let x = sample_spiked(&SpikedModel::new(2.0, v_star)?, 60, 21)?;
    let eig = covariance_from_samples(&x).eigen().values.clone();
    println!("eigenvalues {:?}", eig.iter().map(|l| format!("{l:.3}")).collect::<Vec<_>>());
    let (k, rho, n_seg) = (3, 1.0, 4);
    let opts = SolverOptions::default();
    for kind in [PerturbKind::Samplewise, PerturbKind::Featurewise] {
        let full = solve(&build_model(&x, kind, Formulation::Full, k, rho, n_seg, None)?, &opts, None)?;
        println!("{kind:11} full    lb {:.5} ub {:.5}", full.lb, full.ub);
        for r in 1..=4 {
            let rep = solve(&build_model(&x, kind, Formulation::RankR, k, rho, n_seg, Some(r))?, &opts, None)?;
            println!(
                "{kind:11} r = {r}   lb {:.5} ub {:.5} gamma {:.4}",
                rep.lb,
                rep.ub,
                rep.gamma_hat.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
