//! Spiked-covariance data, population objectives, and the closed-form
//! thresholds that separate the recovery, robust and overly-perturbed
//! regimes.

use libm::erfc;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, Error, Result};
use crate::linalg::{Covariance, KSparseVector, SampleMatrix};

/// Standard normal draws by Box-Muller on a seeded ChaCha8 stream. Both
/// outputs of each transform are used, cosine first.
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U lies in (0, 1], so the log is finite
        let u1 = 1.0 - self.rng.gen::<f64>();
        let u2 = self.rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * PI * u2;
        self.spare = Some(r * t.sin());
        r * t.cos()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikedModel {
    pub d: usize,
    pub lambda: f64,
    pub v_star: KSparseVector,
}

impl SpikedModel {
    pub fn new(lambda: f64, v_star: KSparseVector) -> Result<Self> {
        // lambda = 0 is allowed: the null model with identity covariance
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if (v_star.norm() - 1.0).abs() > 1e-9 {
            return Err(invalid("v_star must have unit norm"));
        }
        Ok(Self { d: v_star.d, lambda, v_star })
    }

    /// `I + lambda v* v*^T`.
    pub fn covariance(&self) -> Covariance {
        let d = self.d;
        let v = self.v_star.to_dense();
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                s[i * d + j] = self.lambda * v[i] * v[j] + if i == j { 1.0 } else { 0.0 };
            }
        }
        Covariance::new(d, s).expect("symmetric by construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongWeakSpec {
    pub c: f64,
    pub k1: usize,
    pub k2: usize,
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.5 && c < 1.0) {
        return Err(invalid(format!("c must lie in (1/2, 1), got {c}")));
    }
    Ok(())
}

impl StrongWeakSpec {
    pub fn new(c: f64, s1: Vec<usize>, s2: Vec<usize>) -> Result<Self> {
        check_c(c)?;
        if s1.is_empty() || s2.is_empty() {
            return Err(invalid("strong and weak parts must be nonempty"));
        }
        let mut all: Vec<usize> = s1.iter().chain(&s2).copied().collect();
        all.sort_unstable();
        all.dedup();
        if all.len() != s1.len() + s2.len() {
            return Err(invalid("strong and weak index sets must be disjoint and repeat-free"));
        }
        Ok(Self { c, k1: s1.len(), k2: s2.len(), s1, s2 })
    }

    /// Strong and weak parts placed on a seeded random subset of `0..d`.
    pub fn random(c: f64, k1: usize, k2: usize, d: usize, seed: u64) -> Result<Self> {
        if k1 + k2 > d {
            return Err(invalid(format!("k1 + k2 = {} exceeds d = {d}", k1 + k2)));
        }
        let perm = random_subset(d, k1 + k2, seed);
        let mut s1 = perm[..k1].to_vec();
        let mut s2 = perm[k1..].to_vec();
        s1.sort_unstable();
        s2.sort_unstable();
        Self::new(c, s1, s2)
    }
}

/// First `m` entries of a seeded Fisher-Yates shuffle of `0..d`.
fn random_subset(d: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..m {
        let j = rng.gen_range(i..d);
        idx.swap(i, j);
    }
    idx.truncate(m);
    idx
}

/// Entries `sqrt(c/k1)` on `S1`, `sqrt((1-c)/k2)` on `S2`.
pub fn build_strong_weak_truth(spec: &StrongWeakSpec, d: usize) -> Result<KSparseVector> {
    check_c(spec.c)?;
    if spec.s1.iter().chain(&spec.s2).any(|&i| i >= d) {
        return Err(invalid("index set exceeds d"));
    }
    let mut v = vec![0.0; d];
    let strong = (spec.c / spec.k1 as f64).sqrt();
    let weak = ((1.0 - spec.c) / spec.k2 as f64).sqrt();
    for &i in &spec.s1 {
        v[i] = strong;
    }
    for &i in &spec.s2 {
        v[i] = weak;
    }
    Ok(KSparseVector::from_dense(&v))
}

/// Equal-magnitude `1/sqrt(k)` truth on a seeded random support.
pub fn spiked_truth(d: usize, k: usize, seed: u64) -> Result<KSparseVector> {
    if k == 0 || k > d {
        return Err(invalid(format!("k must be in 1..={d}, got {k}")));
    }
    let mut support = random_subset(d, k, seed);
    support.sort_unstable();
    let values = vec![1.0 / (k as f64).sqrt(); k];
    KSparseVector::new(d, support, values)
}

/// Rows `sqrt(lambda) u_i v*^T + W_i`; `u` is drawn first, then `W` row
/// by row, from one Gaussian stream.
pub fn sample_spiked(model: &SpikedModel, n: usize, seed: u64) -> Result<SampleMatrix> {
    if n == 0 {
        return Err(Error::EmptyInput("n must be >= 1"));
    }
    let d = model.d;
    let mut g = GaussianStream::new(seed);
    let u: Vec<f64> = (0..n).map(|_| g.next_normal()).collect();
    let v = model.v_star.to_dense();
    let sl = model.lambda.sqrt();
    let mut data = Vec::with_capacity(n * d);
    for &ui in &u {
        for &vj in &v {
            data.push(sl * ui * vj + g.next_normal());
        }
    }
    SampleMatrix::new(n, d, data)
}

/// `ln(Gamma(x + 1/2) / Gamma(x))` for `x >= 25` by its asymptotic series.
fn log_gamma_half_ratio_asymptotic(x: f64) -> f64 {
    // (-1)^{m+1} (B_{m+1}(1/2) - B_{m+1}(0)) / (m (m+1)) for odd m
    const C: [f64; 6] = [-1.0 / 8.0, 1.0 / 192.0, -1.0 / 640.0, 17.0 / 14336.0, -31.0 / 18432.0, 691.0 / 180224.0];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut p = inv;
    let mut s = 0.0;
    for c in C {
        s += c * p;
        p *= inv2;
    }
    0.5 * x.ln() + s
}

/// `mu_n = sqrt(2) Gamma((n+1)/2) / Gamma(n/2)`, so that `E||w|| = sigma mu_n`
/// for `w ~ N(0, sigma^2 I_n)`. Small arguments are shifted up with
/// `Gamma(x+1/2)/Gamma(x) = (x/(x+1/2)) Gamma(x+3/2)/Gamma(x+1)`.
pub fn expected_norm_factor(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    let mut x = n as f64 / 2.0;
    let mut factor = 1.0;
    while x < 25.0 {
        factor *= x / (x + 0.5);
        x += 1.0;
    }
    Ok(SQRT_2 * factor * log_gamma_half_ratio_asymptotic(x).exp())
}

fn check_unit(v: &KSparseVector, d: usize) -> Result<()> {
    if v.d != d {
        return Err(Error::DimensionMismatch(format!("vector has d={}, covariance d={d}", v.d)));
    }
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(invalid("v must have unit norm"));
    }
    Ok(())
}

fn variance_along(sigma: &Covariance, v: &KSparseVector) -> f64 {
    crate::linalg::quadratic_form(sigma, v).max(0.0)
}

/// `E[(1/n)(||Xv|| - rho ||v||_1)^2]` for Gaussian rows with covariance
/// `sigma`: `v^T S v - 2 (rho/n) ||v||_1 sigma_v mu_n + (rho^2/n) ||v||_1^2`.
pub fn population_featurewise_objective(sigma: &Covariance, v: &KSparseVector, rho: f64, n: usize) -> Result<f64> {
    check_unit(v, sigma.d())?;
    let q = variance_along(sigma, v);
    let l1 = v.l1();
    let nf = n as f64;
    Ok(q - 2.0 * (rho / nf) * l1 * q.sqrt() * expected_norm_factor(n)? + rho * rho / nf * l1 * l1)
}

/// `sqrt(v^T S v) - (rho / sqrt n) ||v||_1`; may be negative.
pub fn simplified_population_objective(sigma: &Covariance, v: &KSparseVector, rho: f64, n: usize) -> Result<f64> {
    check_unit(v, sigma.d())?;
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    Ok(variance_along(sigma, v).sqrt() - rho / (n as f64).sqrt() * v.l1())
}

/// `h(sigma, rho) = E[(Z - rho)_+^2]` for `Z ~ N(0, sigma^2)`, the one-sided
/// truncated second moment; erfc from libm (the musl port, accurate to a few ulps).
pub fn truncated_variance_h(sigma: f64, rho: f64) -> Result<f64> {
    if !(sigma > 0.0) || !(rho >= 0.0) {
        return Err(invalid(format!("need sigma > 0 and rho >= 0, got sigma={sigma}, rho={rho}")));
    }
    let a = rho / (SQRT_2 * sigma);
    let s2 = sigma * sigma;
    let bracket = (PI / 2.0).sqrt() * sigma * (rho * rho + s2) * erfc(a) - rho * s2 * (-a * a).exp();
    Ok(bracket / (sigma * (2.0 * PI).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdQuery {
    pub delta: f64,
    pub lambda: f64,
    pub n: usize,
    pub k: usize,
}

/// `((2 delta - delta^2) / (2 sqrt 6)) lambda sqrt(n/k)`: below this level
/// the population optimizer keeps `|<v, v*>| >= 1 - delta`.
pub fn recovery_threshold(q: &ThresholdQuery) -> Result<f64> {
    if !(q.delta > 0.0 && q.delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {}", q.delta)));
    }
    if !(q.lambda > 0.0) || q.n == 0 || q.k == 0 {
        return Err(invalid("lambda, n and k must be positive"));
    }
    let d = q.delta;
    Ok((2.0 * d - d * d) / (2.0 * 6f64.sqrt()) * q.lambda * (q.n as f64 / q.k as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageThresholds {
    pub robust_lower: f64,
    pub robust_upper: f64,
}

impl StageThresholds {
    pub fn window_nonempty(&self) -> bool {
        self.robust_lower < self.robust_upper
    }
}

fn check_stage_args(lambda: f64, n: usize, c: f64, k1: usize, k2: usize) -> Result<()> {
    check_c(c)?;
    if !(lambda > 0.0) || n == 0 || k1 == 0 || k2 == 0 {
        return Err(invalid("lambda, n, k1 and k2 must be positive"));
    }
    Ok(())
}

pub fn stage_thresholds(lambda: f64, n: usize, c: f64, k1: usize, k2: usize) -> Result<StageThresholds> {
    check_stage_args(lambda, n, c, k1, k2)?;
    let nf = n as f64;
    let lower = (-3.0 * c * c + 2.0 * c + 1.0).sqrt() / ((1.0 + lambda * (1.0 - c)).sqrt() + 1.0)
        * lambda
        * (nf / k2 as f64).sqrt();
    let upper = lambda * c / (1.0 + (1.0 + lambda * c).sqrt()) * (nf / k1 as f64).sqrt();
    Ok(StageThresholds { robust_lower: lower, robust_upper: upper })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    Recovery,
    Robust,
    OverlyPerturbed,
}

/// Maxima over `theta in [0, pi/2]` of the population objective restricted
/// to the candidate families: both parts kept, strong only, weak only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageValues {
    pub both: f64,
    pub strong: f64,
    pub weak: f64,
    /// Strong part alone at `theta = 0`.
    pub strong_at_zero: f64,
}

fn theta_max(f: impl Fn(f64) -> f64) -> f64 {
    let cells = 4096;
    let h = PI / 2.0 / cells as f64;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0.0);
    for i in 0..=cells {
        let t = i as f64 * h;
        let v = f(t);
        if v > best {
            best = v;
            arg = t;
        }
    }
    let (mut a, mut b) = ((arg - h).max(0.0), (arg + h).min(PI / 2.0));
    for _ in 0..100 {
        let m1 = a + 0.382 * (b - a);
        let m2 = a + 0.618 * (b - a);
        if f(m1) >= f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    best.max(f(0.5 * (a + b)))
}

pub fn stage_values(lambda: f64, n: usize, c: f64, k1: usize, k2: usize, rho: f64) -> Result<StageValues> {
    check_stage_args(lambda, n, c, k1, k2)?;
    if !(rho >= 0.0) {
        return Err(invalid("rho must be >= 0"));
    }
    let a = rho / (n as f64).sqrt();
    let (sc, sw) = (c.sqrt(), (1.0 - c).sqrt());
    let (r1, r2) = ((k1 as f64).sqrt(), (k2 as f64).sqrt());
    let both = theta_max(|t| {
        (1.0 + lambda * (sc * t.cos() + sw * t.sin()).powi(2)).sqrt() - a * (r1 * t.cos() + r2 * t.sin())
    });
    let strong = theta_max(|t| (1.0 + lambda * c * t.cos().powi(2)).sqrt() - a * r1 * t.cos());
    let weak = theta_max(|t| (1.0 + lambda * (1.0 - c) * t.sin().powi(2)).sqrt() - a * r2 * t.sin());
    Ok(StageValues { both, strong, weak, strong_at_zero: (1.0 + lambda * c).sqrt() - a * r1 })
}

/// Recovery when keeping both parts beats every other family strictly;
/// Robust when the strong part alone is optimal and beats the trivial
/// value 1; otherwise OverlyPerturbed.
pub fn stage_classify(lambda: f64, n: usize, c: f64, k1: usize, k2: usize, rho: f64) -> Result<Stage> {
    let s = stage_values(lambda, n, c, k1, k2, rho)?;
    const TOL: f64 = 1e-12;
    if s.both > s.strong.max(s.weak).max(1.0) + TOL {
        Ok(Stage::Recovery)
    } else if s.strong_at_zero > 1.0 + TOL && s.strong_at_zero >= s.weak - TOL {
        Ok(Stage::Robust)
    } else {
        Ok(Stage::OverlyPerturbed)
    }
}

/// Points where [`stage_classify`] changes along `[0, rho_max]`, located by
/// a scan of `scan` cells followed by bisection.
pub fn stage_transitions(
    lambda: f64,
    n: usize,
    c: f64,
    k1: usize,
    k2: usize,
    rho_max: f64,
    scan: usize,
) -> Result<Vec<(f64, Stage, Stage)>> {
    let mut out = Vec::new();
    let at = |r: f64| stage_classify(lambda, n, c, k1, k2, r);
    let mut prev = (0.0, at(0.0)?);
    for i in 1..=scan {
        let r = rho_max * i as f64 / scan as f64;
        let s = at(r)?;
        if s != prev.1 {
            let (mut a, mut b) = (prev.0, r);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if at(m)? == prev.1 {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push((0.5 * (a + b), prev.1, s));
        }
        prev = (r, s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{covariance_from_samples, quadratic_form};

    #[test]
    fn gaussian_stream_is_reproducible() {
        let a: Vec<f64> = {
            let mut g = GaussianStream::new(7);
            (0..10).map(|_| g.next_normal()).collect()
        };
        let mut g = GaussianStream::new(7);
        let b: Vec<f64> = (0..10).map(|_| g.next_normal()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn gaussian_moments() {
        let mut g = GaussianStream::new(1);
        let m = 200_000;
        let xs: Vec<f64> = (0..m).map(|_| g.next_normal()).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
        assert!(mean.abs() < 4.0 / (m as f64).sqrt());
        assert!((var - 1.0).abs() < 4.0 * (2.0 / m as f64).sqrt());
    }

    #[test]
    fn strong_weak_entries() {
        let spec = StrongWeakSpec::new(0.8, vec![0], vec![1, 2, 3, 4]).unwrap();
        let v = build_strong_weak_truth(&spec, 10).unwrap();
        assert!((v.values[0] - 0.894_427_191).abs() < 1e-9);
        assert!(v.values[1..].iter().all(|&x| (x - 0.223_606_797_7).abs() < 1e-9));
        assert!((v.norm() - 1.0).abs() < 1e-15);
        assert!(StrongWeakSpec::new(1.0, vec![0], vec![1]).is_err());
        assert!(StrongWeakSpec::new(0.5, vec![0], vec![1]).is_err());
        assert!(StrongWeakSpec::new(0.7, vec![0], vec![0]).is_err());
    }

    #[test]
    fn null_spike_covariance_is_identity() {
        let v = spiked_truth(6, 2, 3).unwrap();
        let m = SpikedModel::new(0.0, v).unwrap();
        let n = 4000;
        let x = sample_spiked(&m, n, 9).unwrap();
        let s = covariance_from_samples(&x);
        for i in 0..6 {
            for j in 0..6 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s.get(i, j) - e).abs() < 5.0 / (n as f64).sqrt());
            }
        }
    }

    #[test]
    fn spike_direction_variance() {
        let v = spiked_truth(10, 3, 5).unwrap();
        let m = SpikedModel::new(3.0, v.clone()).unwrap();
        let x = sample_spiked(&m, 5000, 2).unwrap();
        let s = covariance_from_samples(&x);
        assert!((quadratic_form(&s, &v) - 4.0).abs() < 0.3);
        assert_eq!(x.data(), sample_spiked(&m, 5000, 2).unwrap().data());
    }

    #[test]
    fn norm_factor_values() {
        // mpmath, 40 digits
        let cases = [
            (1, 0.797_884_560_802_865_4),
            (2, 1.253_314_137_315_500_3),
            (10, 3.084_327_759_799_864),
            (1000, 31.614_871_896_980_08),
            (1_000_000, 999.999_750_000_031_2),
        ];
        for (n, want) in cases {
            let got = expected_norm_factor(n).unwrap();
            assert!((got - want).abs() <= 1e-13 * want, "n={n}: {got} vs {want}");
        }
        assert!((expected_norm_factor(1).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!((expected_norm_factor(2).unwrap() - (PI / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn truncated_variance_values() {
        for s in [0.3, 1.0, 2.5] {
            assert!((truncated_variance_h(s, 0.0).unwrap() - s * s / 2.0).abs() < 1e-14);
        }
        // mpmath quadrature, 40 digits
        let cases = [
            (1.0, 1.0, 0.075_339_783_343_770_75),
            (0.5, 2.0, 7.725_520_258_743_135e-7),
            (2.0, 0.5, 1.318_829_999_044_725),
            (3.0, 1.0, 2.562_263_718_738_657),
        ];
        for (s, r, want) in cases {
            let got = truncated_variance_h(s, r).unwrap();
            assert!((got - want).abs() <= 1e-12 * want, "({s},{r}): {got}");
        }
        assert!(truncated_variance_h(0.0, 1.0).is_err());
    }

    #[test]
    fn thresholds() {
        let q = ThresholdQuery { delta: 0.1, lambda: 3.0, n: 500, k: 5 };
        let r = recovery_threshold(&q).unwrap();
        assert!((r - 1.163_507_627_822_01).abs() < 1e-12);
        let r4 = recovery_threshold(&ThresholdQuery { n: 2000, ..q }).unwrap();
        assert!((r4 - 2.0 * r).abs() < 1e-12);
        assert!(recovery_threshold(&ThresholdQuery { delta: 1.0, ..q }).is_err());
        let t = stage_thresholds(3.0, 500, 0.8, 1, 4).unwrap();
        assert!((t.robust_lower - 12.212).abs() < 1e-3);
        assert!((t.robust_upper - 18.870).abs() < 1e-3);
        assert!(t.window_nonempty());
        let t4 = stage_thresholds(3.0, 2000, 0.8, 1, 4).unwrap();
        assert!((t4.robust_lower - 2.0 * t.robust_lower).abs() < 1e-9);
    }

    #[test]
    fn stages_in_order() {
        assert_eq!(stage_classify(3.0, 500, 0.8, 1, 4, 0.0).unwrap(), Stage::Recovery);
        assert_eq!(stage_classify(3.0, 500, 0.8, 1, 4, 15.0).unwrap(), Stage::Robust);
        assert_eq!(stage_classify(3.0, 500, 0.8, 1, 4, 1e6).unwrap(), Stage::OverlyPerturbed);
        let tr = stage_transitions(3.0, 500, 0.8, 1, 4, 100.0, 400).unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!((tr[0].1, tr[0].2), (Stage::Recovery, Stage::Robust));
        assert_eq!((tr[1].1, tr[1].2), (Stage::Robust, Stage::OverlyPerturbed));
        // independent numpy scan on a 200001-point theta grid
        assert!((tr[0].0 - 7.276_028_669).abs() < 1e-4);
        assert!((tr[1].0 - 18.870_376_481).abs() < 1e-4);
    }

    #[test]
    fn simplified_objective_roots() {
        let v = spiked_truth(8, 4, 1).unwrap();
        let m = SpikedModel::new(3.0, v.clone()).unwrap();
        let s = m.covariance();
        assert!((simplified_population_objective(&s, &v, 0.0, 100).unwrap() - 2.0).abs() < 1e-12);
        let rho = 10.0 / v.l1() * 2.0;
        assert!(simplified_population_objective(&s, &v, rho, 100).unwrap().abs() < 1e-12);
        assert!((population_featurewise_objective(&s, &v, 0.0, 100).unwrap() - 4.0).abs() < 1e-12);
    }
}
