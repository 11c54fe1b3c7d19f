//! Brute-force maximization of the exact robust objective for small `d`.
//!
//! Every support of size `<= k` is searched over its unit sphere: a dense
//! angular grid for one or two free angles, random multistart otherwise,
//! each followed by rotation-based local refinement. The result is a lower
//! bound on the optimum, and equal to it up to grid error when `d <= 3`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm2, Combinations, KSparseVector, SampleMatrix};
use crate::perturb::{objective_dense, PerturbKind};

pub const MAX_ORACLE_DIM: usize = 8;
const MAX_SUPPORT: usize = 5;
const STARTS: usize = 200;

struct SupportObjective<'a> {
    x: &'a SampleMatrix,
    sup: &'a [usize],
    rho: f64,
    kind: PerturbKind,
}

impl SupportObjective<'_> {
    fn dense(&self, u: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.x.d()];
        for (&i, &x) in self.sup.iter().zip(u) {
            v[i] = x;
        }
        v
    }

    fn eval(&self, u: &[f64]) -> f64 {
        objective_dense(self.x, &self.dense(u), self.rho, self.kind).0
    }

    /// Central-difference gradient (the objective is only piecewise smooth).
    fn grad(&self, u: &[f64]) -> Vec<f64> {
        let h = 1e-7;
        (0..u.len())
            .map(|a| {
                let mut p = u.to_vec();
                let mut q = u.to_vec();
                p[a] += h;
                q[a] -= h;
                (self.eval(&p) - self.eval(&q)) / (2.0 * h)
            })
            .collect()
    }
}

fn normalize(u: &mut [f64]) {
    let n = norm2(u);
    if n > 0.0 {
        u.iter_mut().for_each(|x| *x /= n);
    }
}

/// Rotations in every coordinate plane, halving the angle until it drops
/// below `1e-10`.
fn refine(f: &SupportObjective, u: &mut Vec<f64>, val: &mut f64) {
    let s = u.len();
    if s < 2 {
        return;
    }
    let mut step: f64 = 0.05;
    while step > 1e-10 {
        let mut improved = false;
        for a in 0..s {
            for b in a + 1..s {
                for sign in [1.0, -1.0] {
                    let (c, sn) = ((sign * step).cos(), (sign * step).sin());
                    let mut w = u.clone();
                    w[a] = c * u[a] - sn * u[b];
                    w[b] = sn * u[a] + c * u[b];
                    let fw = f.eval(&w);
                    if fw > *val {
                        *u = w;
                        *val = fw;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
}

/// Projected gradient ascent on the sphere with step halving.
fn ascend(f: &SupportObjective, u: &mut Vec<f64>, val: &mut f64) {
    let mut step = 1.0;
    for _ in 0..500 {
        let g = f.grad(u);
        let radial: f64 = g.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
        let tangent: Vec<f64> = g.iter().zip(u.iter()).map(|(a, b)| a - radial * b).collect();
        if norm2(&tangent) < 1e-10 {
            break;
        }
        loop {
            let mut w: Vec<f64> = u.iter().zip(&tangent).map(|(a, t)| a + step * t).collect();
            normalize(&mut w);
            let fw = f.eval(&w);
            if fw > *val {
                *u = w;
                *val = fw;
                step *= 1.5;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                return;
            }
        }
    }
}

fn search_support(f: &SupportObjective, resolution: f64, rng: &mut ChaCha8Rng) -> (f64, Vec<f64>) {
    let s = f.sup.len();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let consider = |u: Vec<f64>, best: &mut (f64, Vec<f64>)| {
        let v = f.eval(&u);
        if v > best.0 {
            *best = (v, u);
        }
    };
    match s {
        1 => consider(vec![1.0], &mut best),
        2 => {
            let steps = (PI / resolution).ceil() as usize;
            for i in 0..steps {
                let t = i as f64 * PI / steps as f64;
                consider(vec![t.cos(), t.sin()], &mut best);
            }
        }
        3 => {
            let steps = (PI / resolution).ceil() as usize;
            for i in 0..=steps {
                let th = i as f64 * PI / steps as f64;
                let ring = ((2.0 * steps as f64 * th.sin()).ceil() as usize).max(1);
                for j in 0..ring {
                    let ph = j as f64 * 2.0 * PI / ring as f64;
                    consider(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()], &mut best);
                }
            }
        }
        _ => {
            for _ in 0..STARTS {
                let mut u: Vec<f64> = (0..s).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
                normalize(&mut u);
                let mut val = f.eval(&u);
                ascend(f, &mut u, &mut val);
                if val > best.0 {
                    best = (val, u);
                }
            }
        }
    }
    let (mut val, mut u) = best;
    refine(f, &mut u, &mut val);
    (val, u)
}

/// Best exact objective over all supports of size `<= k`.
pub fn brute_force_oracle(
    x: &SampleMatrix,
    k: usize,
    rho: f64,
    kind: PerturbKind,
    resolution: f64,
) -> Result<(f64, KSparseVector)> {
    let d = x.d();
    if d > MAX_ORACLE_DIM || k > MAX_SUPPORT {
        return Err(Error::TooLarge(format!(
            "oracle handles d <= {MAX_ORACLE_DIM} and k <= {MAX_SUPPORT}, got d={d}, k={k}"
        )));
    }
    if k == 0 || k > d {
        return Err(invalid(format!("k must be in 1..={d}, got {k}")));
    }
    if !(resolution > 0.0) || !(rho >= 0.0) {
        return Err(invalid("resolution must be > 0 and rho >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for s in 1..=k {
        for sup in Combinations::new(d, s) {
            let f = SupportObjective { x, sup: &sup, rho, kind };
            let (val, u) = search_support(&f, resolution, &mut rng);
            if val > best.0 {
                best = (val, f.dense(&u));
            }
        }
    }
    Ok((best.0, KSparseVector::from_dense(&best.1)))
}
