//! Primal heuristics: projected power method on the robust objectives,
//! truncated power method for vanilla sparse PCA, and the submatrix
//! reduction used to shrink large instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    binomial, covariance_from_samples, dot, norm1, norm2, quadratic_form, top_k_sparse_project, top_k_support,
    Combinations, Covariance, KSparseVector, SampleMatrix,
};
use crate::perturb::{objective_dense, samplewise_gradient, PerturbKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PpmInit {
    /// Truncated power method on the sample covariance.
    FromSpca,
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpmOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub init: PpmInit,
}

impl Default for PpmOptions {
    fn default() -> Self {
        Self { max_iter: 1000, tol: 1e-6, init: PpmInit::FromSpca }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpmResult {
    pub v: KSparseVector,
    pub objective: f64,
    pub feasible: bool,
    pub iterations: usize,
    pub converged: bool,
    /// Gradient vanished (or `Xv = 0`); the iterate cannot move.
    pub degenerate: bool,
    /// An update would have lowered the objective; the run stopped there.
    pub stalled: bool,
    /// Objective after every accepted iterate, starting with the initial one.
    pub trace: Vec<f64>,
}

/// Gradient of `(||Xv|| - rho ||v||_1)^2` with `sgn(0) = 0`. Returns a zero
/// vector and `true` when `Xv = 0` or the bracket vanishes.
pub fn featurewise_gradient(x: &SampleMatrix, v: &[f64], rho: f64) -> (Vec<f64>, bool) {
    let xv = x.mul_vec(v);
    let nxv = norm2(&xv);
    let bracket = nxv - rho * norm1(v);
    if nxv == 0.0 || bracket == 0.0 {
        return (vec![0.0; v.len()], true);
    }
    let xtxv = x.tmul_vec(&xv);
    let g = xtxv
        .iter()
        .zip(v)
        .map(|(a, &vi)| {
            let sgn = if vi > 0.0 {
                1.0
            } else if vi < 0.0 {
                -1.0
            } else {
                0.0
            };
            2.0 * bracket * (a / nxv - rho * sgn)
        })
        .collect();
    (g, false)
}

fn gradient(x: &SampleMatrix, v: &[f64], rho: f64, kind: PerturbKind) -> (Vec<f64>, bool) {
    match kind {
        PerturbKind::Featurewise => featurewise_gradient(x, v, rho),
        PerturbKind::Samplewise => {
            let g = samplewise_gradient(x, v, rho);
            let degenerate = g.iter().all(|&x| x == 0.0);
            (g, degenerate)
        }
    }
}

/// Leading eigenvector of `s` cut to its `k` largest entries.
pub fn default_sparse_init(s: &Covariance, k: usize) -> Result<KSparseVector> {
    top_k_sparse_project(s.eigen().vector(0), k)
}

fn random_init(d: usize, k: usize, seed: u64) -> Result<KSparseVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    top_k_sparse_project(&x, k)
}

fn distance_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let minus: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let plus: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum();
    minus.min(plus).sqrt()
}

/// Projected power method: `v <- P_k(grad F(v))` on the chosen robust
/// objective, stopping at `max_iter`, when an update moves less than `tol`
/// (up to sign), or when an update would decrease the objective.
pub fn ppm(
    x: &SampleMatrix,
    k: usize,
    rho: f64,
    kind: PerturbKind,
    opts: &PpmOptions,
    v0: Option<&KSparseVector>,
) -> Result<PpmResult> {
    if k == 0 || k > x.d() {
        return Err(invalid(format!("k must be in 1..={}, got {k}", x.d())));
    }
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(invalid(format!("rho must be finite and >= 0, got {rho}")));
    }
    let start = match (v0, opts.init) {
        (Some(v), _) => {
            if v.d != x.d() {
                return Err(Error::DimensionMismatch("initial vector".into()));
            }
            top_k_sparse_project(&v.to_dense(), k)?
        }
        (None, PpmInit::FromSpca) => {
            let s = covariance_from_samples(x);
            truncated_power(&s, k, 200, 1e-10, &default_sparse_init(&s, k)?)?.0
        }
        (None, PpmInit::Random(seed)) => random_init(x.d(), k, seed)?,
    };
    let mut v = start.to_dense();
    let (mut obj, mut feasible) = objective_dense(x, &v, rho, kind);
    let mut trace = vec![obj];
    let (mut converged, mut degenerate, mut stalled) = (false, false, false);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let (g, degen) = gradient(x, &v, rho, kind);
        if degen {
            degenerate = true;
            break;
        }
        let next = match top_k_sparse_project(&g, k) {
            Ok(p) => p.to_dense(),
            Err(Error::ZeroVector) => {
                degenerate = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let (nobj, nfeas) = objective_dense(x, &next, rho, kind);
        if nobj < obj - 1e-12 * (1.0 + obj.abs()) {
            stalled = true;
            break;
        }
        iterations += 1;
        let step = distance_up_to_sign(&next, &v);
        v = next;
        obj = nobj;
        feasible = nfeas;
        trace.push(obj);
        if step < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(PpmResult {
        v: KSparseVector::from_dense(&v),
        objective: obj,
        feasible,
        iterations,
        converged,
        degenerate,
        stalled,
        trace,
    })
}

/// Truncated power iterations with a principal-submatrix refinement on
/// each selected support; returns the best vector seen and its Rayleigh
/// quotient.
pub fn truncated_power(
    s: &Covariance,
    k: usize,
    max_iter: usize,
    tol: f64,
    v0: &KSparseVector,
) -> Result<(KSparseVector, f64)> {
    let d = s.d();
    if k == 0 || k > d {
        return Err(invalid(format!("k must be in 1..={d}, got {k}")));
    }
    if v0.d != d {
        return Err(Error::DimensionMismatch("initial vector".into()));
    }
    let mut v = v0.to_dense();
    let mut best = v0.clone();
    let mut best_obj = quadratic_form(s, v0) / dot(&v, &v).max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        let u = s.mul_vec(&v);
        if norm2(&u) == 0.0 {
            break;
        }
        let support = top_k_support(&u, k);
        let (lam, e) = s.top_eigenpair_on(&support);
        let mut next = vec![0.0; d];
        for (&i, &x) in support.iter().zip(&e) {
            next[i] = x;
        }
        if lam > best_obj {
            best_obj = lam;
            best = KSparseVector::from_dense(&next);
        }
        let step = distance_up_to_sign(&next, &v);
        v = next;
        if step < tol {
            break;
        }
    }
    Ok((best, best_obj))
}

/// Support of size exactly `d_bar`: the truncated-power support after
/// `t_iters` iterations, padded with the largest remaining diagonal
/// entries. Returns the sorted support and the principal submatrix.
pub fn submatrix_init(
    s: &Covariance,
    k: usize,
    d_bar: usize,
    t_iters: usize,
    v0: Option<&KSparseVector>,
) -> Result<(Vec<usize>, Covariance)> {
    let d = s.d();
    if k == 0 || k > d_bar || d_bar > d {
        return Err(invalid(format!("need 1 <= k <= d_bar <= d, got k={k}, d_bar={d_bar}, d={d}")));
    }
    let init = match v0 {
        Some(v) => v.clone(),
        None => default_sparse_init(s, k)?,
    };
    let (target, _) = truncated_power(s, k, t_iters, 0.0, &init)?;
    let mut support = target.support.clone();
    let diag = s.diag();
    let mut rest: Vec<usize> = (0..d).filter(|i| !support.contains(i)).collect();
    rest.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));
    support.extend(rest.into_iter().take(d_bar - target.support.len()));
    support.sort_unstable();
    let sub = s.submatrix(&support);
    Ok((support, sub))
}

/// Exact k-sparse leading eigenvector by enumerating supports.
pub fn exact_sparse_pca(s: &Covariance, k: usize) -> Result<(KSparseVector, f64)> {
    let d = s.d();
    if k == 0 || k > d {
        return Err(invalid(format!("k must be in 1..={d}, got {k}")));
    }
    if binomial(d, k) > 5_000_000 {
        return Err(Error::TooLarge(format!("C({d},{k}) supports")));
    }
    let mut best = (f64::NEG_INFINITY, Vec::new(), Vec::new());
    for sup in Combinations::new(d, k) {
        let (lam, e) = s.top_eigenpair_on(&sup);
        if lam > best.0 {
            best = (lam, sup, e);
        }
    }
    let (lam, sup, e) = best;
    let mut dense = vec![0.0; d];
    for (&i, &x) in sup.iter().zip(&e) {
        dense[i] = x;
    }
    Ok((KSparseVector::from_dense(&dense), lam))
}

fn better(a: (f64, bool), b: (f64, bool)) -> bool {
    // feasible beats infeasible, then larger value
    (a.1 && !b.1) || (a.1 == b.1 && a.0 > b.0)
}

/// Best of the projected power method over sparsity levels `1..=k`, each
/// started from the truncated power solution at that level.
pub fn warm_start(x: &SampleMatrix, k: usize, rho: f64, kind: PerturbKind) -> Result<(KSparseVector, f64, bool)> {
    let s = covariance_from_samples(x);
    let opts = PpmOptions::default();
    let mut best: Option<(KSparseVector, f64, bool)> = None;
    for kk in 1..=k {
        let (tp, _) = truncated_power(&s, kk, 200, 1e-10, &default_sparse_init(&s, kk)?)?;
        let tpo = objective_dense(x, &tp.to_dense(), rho, kind);
        let r = ppm(x, kk, rho, kind, &opts, Some(&tp))?;
        for (v, o) in [(tp, tpo), (r.v, (r.objective, r.feasible))] {
            if best.as_ref().is_none_or(|b| better(o, (b.1, b.2))) {
                best = Some((v, o.0, o.1));
            }
        }
    }
    Ok(best.expect("k >= 1"))
}

/// Local improvement of a feasible point: power iterations on its own
/// support size, then repeatedly dropping the smallest entry while that
/// helps.
pub fn polish(x: &SampleMatrix, v: &KSparseVector, rho: f64, kind: PerturbKind) -> Result<(KSparseVector, f64, bool)> {
    let opts = PpmOptions { max_iter: 200, ..PpmOptions::default() };
    let mut cur = v.clone();
    let (mut f, mut feas) = objective_dense(x, &cur.to_dense(), rho, kind);
    let r = ppm(x, cur.nnz().max(1), rho, kind, &opts, Some(&cur))?;
    if better((r.objective, r.feasible), (f, feas)) {
        cur = r.v;
        f = r.objective;
        feas = r.feasible;
    }
    while cur.nnz() > 1 {
        let drop = (0..cur.nnz())
            .min_by(|&a, &b| cur.values[a].abs().total_cmp(&cur.values[b].abs()).then(a.cmp(&b)))
            .expect("nonempty");
        let mut dense = cur.to_dense();
        dense[cur.support[drop]] = 0.0;
        let Ok(cand) = top_k_sparse_project(&dense, cur.nnz() - 1) else { break };
        let r = ppm(x, cand.nnz(), rho, kind, &opts, Some(&cand))?;
        let (c, co) = if better((r.objective, r.feasible), objective_dense(x, &cand.to_dense(), rho, kind)) {
            (r.v, (r.objective, r.feasible))
        } else {
            let o = objective_dense(x, &cand.to_dense(), rho, kind);
            (cand, o)
        };
        if better(co, (f + 1e-12 * (1.0 + f.abs()), feas)) {
            cur = c;
            f = co.0;
            feas = co.1;
        } else {
            break;
        }
    }
    Ok((cur, f, feas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use proptest::prelude::*;
    use rand::Rng;

    fn two_sample() -> SampleMatrix {
        SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap()
    }

    fn rand_matrix(n: usize, d: usize, seed: u64) -> SampleMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SampleMatrix::new(n, d, (0..n * d).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).unwrap()
    }

    #[test]
    fn two_sample_samplewise_fixed_point() {
        let x = two_sample();
        let v0 = KSparseVector::from_dense(&[1.0, 0.0]);
        let r = ppm(&x, 2, 0.9, PerturbKind::Samplewise, &PpmOptions::default(), Some(&v0)).unwrap();
        assert_eq!(r.v.support, vec![0]);
        assert!((r.v.values[0] - 1.0).abs() < 1e-12);
        assert!((r.objective - 0.005).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn zero_iterations_returns_projected_start() {
        let x = rand_matrix(20, 5, 1);
        let v0 = KSparseVector::from_dense(&[0.6, 0.8, 0.0, 0.0, 0.0]);
        let opts = PpmOptions { max_iter: 0, ..Default::default() };
        let r = ppm(&x, 2, 0.3, PerturbKind::Featurewise, &opts, Some(&v0)).unwrap();
        assert_eq!(r.v, v0);
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn truncated_power_on_two_sample() {
        let s = covariance_from_samples(&two_sample());
        let (v, obj) = truncated_power(&s, 2, 50, 1e-12, &KSparseVector::from_dense(&[1.0, 0.0])).unwrap();
        assert!((obj - 0.75).abs() < 1e-12);
        assert!((v.values[0] - 3f64.sqrt() / 2.0).abs() < 1e-10);
    }

    #[test]
    fn truncated_power_recovers_exact_spike() {
        let d = 12;
        let sup = [1usize, 4, 7, 9, 10];
        let lam = 3.0;
        let mut s = vec![0.0; d * d];
        for i in 0..d {
            s[i * d + i] = 1.0;
        }
        for &i in &sup {
            for &j in &sup {
                s[i * d + j] += lam / 5.0;
            }
        }
        let s = Covariance::new(d, s).unwrap();
        let (v, obj) = truncated_power(&s, 5, 100, 1e-12, &default_sparse_init(&s, 5).unwrap()).unwrap();
        assert_eq!(v.support, sup.to_vec());
        assert!((obj - (1.0 + lam)).abs() < 1e-10);
        let (bar, sub) = submatrix_init(&s, 5, 8, 100, None).unwrap();
        assert_eq!(bar.len(), 8);
        assert!(sup.iter().all(|i| bar.contains(i)));
        assert_eq!(sub.d(), 8);
    }

    #[test]
    fn exact_sparse_pca_matches_brute_force() {
        let x = rand_matrix(30, 6, 7);
        let s = covariance_from_samples(&x);
        let (v, lam) = exact_sparse_pca(&s, 2).unwrap();
        assert!((quadratic_form(&s, &v) - lam).abs() < 1e-10);
        for sup in Combinations::new(6, 2) {
            // 2x2 closed form
            let (a, b, c) = (s.get(sup[0], sup[0]), s.get(sup[0], sup[1]), s.get(sup[1], sup[1]));
            let top = 0.5 * (a + c) + (0.25 * (a - c).powi(2) + b * b).sqrt();
            assert!(lam >= top - 1e-12);
        }
    }

    #[test]
    fn submatrix_init_validates() {
        let s = covariance_from_samples(&rand_matrix(10, 4, 3));
        assert!(submatrix_init(&s, 3, 2, 10, None).is_err());
        assert!(submatrix_init(&s, 2, 5, 10, None).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn featurewise_gradient_matches_differences(seed in 0u64..10_000, rho in 0.0f64..1.5) {
            let x = rand_matrix(15, 5, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let v: Vec<f64> = (0..5).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            prop_assume!(v.iter().all(|x| x.abs() > 1e-2));
            let f = |w: &[f64]| (norm2(&x.mul_vec(w)) - rho * norm1(w)).powi(2);
            let (g, degen) = featurewise_gradient(&x, &v, rho);
            prop_assume!(!degen);
            let h = 1e-6;
            for j in 0..5 {
                let mut p = v.clone(); p[j] += h;
                let mut m = v.clone(); m[j] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                prop_assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0));
            }
        }

        #[test]
        fn ppm_trace_is_monotone(seed in 0u64..10_000, rho in 0.0f64..3.0, k in 1usize..5,
                                 sw in any::<bool>()) {
            let x = rand_matrix(25, 6, seed);
            let kind = if sw { PerturbKind::Samplewise } else { PerturbKind::Featurewise };
            let r = ppm(&x, k, rho, kind, &PpmOptions { init: PpmInit::Random(seed), ..Default::default() }, None).unwrap();
            prop_assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
            prop_assert!(r.v.nnz() <= k);
            prop_assert!((r.v.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn ppm_fixed_point_support_is_gradient_top_k(seed in 0u64..10_000, rho in 0.0f64..1.0) {
            let x = rand_matrix(25, 6, seed);
            let r = ppm(&x, 3, rho, PerturbKind::Featurewise, &PpmOptions { tol: 1e-12, ..Default::default() }, None).unwrap();
            prop_assume!(r.converged && !r.degenerate);
            let (g, _) = featurewise_gradient(&x, &r.v.to_dense(), rho);
            let top = top_k_sparse_project(&g, 3).unwrap();
            prop_assert_eq!(top.support, r.v.support);
        }
    }
}
