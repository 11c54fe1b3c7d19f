#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust_spca::linalg::SampleMatrix;

/// `n x d` matrix with independent uniform entries on `[-1, 1]`.
pub fn uniform_matrix(n: usize, d: usize, seed: u64) -> SampleMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SampleMatrix::new(n, d, (0..n * d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).unwrap()
}

pub fn two_sample() -> SampleMatrix {
    SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap()
}

pub fn scaled_identity() -> SampleMatrix {
    SampleMatrix::from_rows(&[vec![2f64.sqrt(), 0.0], vec![0.0, 2f64.sqrt()]]).unwrap()
}
