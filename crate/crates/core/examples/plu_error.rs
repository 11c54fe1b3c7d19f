//! Worst-case error of the piecewise-linear over-estimate of g^2 for a few
//! grid sizes, measured on a fine grid.
//!
//! `cargo run --example plu_error`

use robust_spca::plu::PluGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("   N   measured      1/(4N^2)");
    for n in [1, 2, 3, 5, 10, 20] {
        let grid = PluGrid::new(n)?;
        let steps = 10_000 * n;
        let worst = (0..=steps)
            .map(|i| -1.0 + 2.0 * i as f64 / steps as f64)
            .map(|g| grid.value(g) - g * g)
            .fold(0.0, f64::max);
        println!("{n:4}   {worst:.3e}   {:.3e}", grid.max_gap());
    }
    Ok(())
}
