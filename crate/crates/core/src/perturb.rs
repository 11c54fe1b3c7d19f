//! Robust objectives under sample-wise (l2->inf) and feature-wise (l1->2)
//! bounded perturbations, with their closed-form projections.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{norm1, norm2, KSparseVector, SampleMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbKind {
    Samplewise,
    Featurewise,
}

impl std::str::FromStr for PerturbKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "samplewise" => Ok(Self::Samplewise),
            "featurewise" => Ok(Self::Featurewise),
            other => Err(invalid(format!("unknown perturbation kind {other:?}"))),
        }
    }
}

impl std::fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Samplewise => "samplewise",
            Self::Featurewise => "featurewise",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbedObjective {
    pub kind: PerturbKind,
    pub value: f64,
    /// False only for feature-wise when the whole signal is absorbed by the
    /// perturbation set (`rho ||v||_1 > ||Xv||_2`); `value` is then 0.
    pub feasible: bool,
}

/// Squared distance from `t` to `[-rho, rho]`.
pub fn loss_eq(t: f64, rho: f64) -> f64 {
    let e = t.abs() - rho;
    if e > 0.0 {
        e * e
    } else {
        0.0
    }
}

/// `phi_rho(t) = loss_eq(t, rho) - t^2`; concave, `<= 0`.
pub fn phi(t: f64, rho: f64) -> f64 {
    if t > rho {
        -2.0 * rho * t + rho * rho
    } else if t < -rho {
        2.0 * rho * t + rho * rho
    } else {
        -t * t
    }
}

pub fn phi_derivative(t: f64, rho: f64) -> f64 {
    -2.0 * t.clamp(-rho, rho)
}

fn check(x: &SampleMatrix, v: &KSparseVector, rho: f64) -> Result<()> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(invalid(format!("rho must be finite and >= 0, got {rho}")));
    }
    if v.d != x.d() {
        return Err(Error::DimensionMismatch(format!("v has d={}, X has d={}", v.d, x.d())));
    }
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("v must be unit norm, got {}", v.norm())));
    }
    Ok(())
}

/// `(1/n) sum_i loss_eq(<x_i, v>, rho)` given the scores `Xv`.
pub fn samplewise_from_scores(xv: &[f64], rho: f64) -> f64 {
    xv.iter().map(|&t| loss_eq(t, rho)).sum::<f64>() / xv.len() as f64
}

/// `((||Xv|| - rho ||v||_1)_+)^2 / n` and whether the bracket is nonnegative.
pub fn featurewise_from_parts(xv_norm: f64, v_l1: f64, rho: f64, n: usize) -> (f64, bool) {
    let t = xv_norm - rho * v_l1;
    if t >= 0.0 {
        (t * t / n as f64, true)
    } else {
        (0.0, false)
    }
}

pub fn samplewise_objective(x: &SampleMatrix, v: &KSparseVector, rho: f64) -> Result<f64> {
    check(x, v, rho)?;
    Ok(samplewise_from_scores(&x.mul_sparse(v), rho))
}

pub fn featurewise_objective(x: &SampleMatrix, v: &KSparseVector, rho: f64) -> Result<PerturbedObjective> {
    check(x, v, rho)?;
    let (value, feasible) = featurewise_from_parts(norm2(&x.mul_sparse(v)), v.l1(), rho, x.n());
    Ok(PerturbedObjective { kind: PerturbKind::Featurewise, value, feasible })
}

pub fn robust_objective(
    x: &SampleMatrix,
    v: &KSparseVector,
    rho: f64,
    kind: PerturbKind,
) -> Result<PerturbedObjective> {
    match kind {
        PerturbKind::Samplewise => {
            Ok(PerturbedObjective { kind, value: samplewise_objective(x, v, rho)?, feasible: true })
        }
        PerturbKind::Featurewise => featurewise_objective(x, v, rho),
    }
}

/// Objective at an arbitrary dense `v` (no norm check); used by the solvers.
pub fn objective_dense(x: &SampleMatrix, v: &[f64], rho: f64, kind: PerturbKind) -> (f64, bool) {
    let xv = x.mul_vec(v);
    match kind {
        PerturbKind::Samplewise => (samplewise_from_scores(&xv, rho), true),
        PerturbKind::Featurewise => featurewise_from_parts(norm2(&xv), norm1(v), rho, x.n()),
    }
}

/// Nearest point to `Xv` in `{Delta v : ||Delta||_{2->inf} <= rho}`:
/// each score clamped to `[-rho ||v||_2, rho ||v||_2]`.
pub fn samplewise_projection(x: &SampleMatrix, v: &[f64], rho: f64) -> Vec<f64> {
    let r = rho * norm2(v);
    x.mul_vec(v).into_iter().map(|t| t.clamp(-r, r)).collect()
}

/// Nearest point to `Xv` in `{Delta v : ||Delta||_{1->2} <= rho}`: the
/// l2 ball of radius `rho ||v||_1`.
pub fn featurewise_projection(x: &SampleMatrix, v: &[f64], rho: f64) -> Vec<f64> {
    let xv = x.mul_vec(v);
    let r = rho * norm1(v);
    let nrm = norm2(&xv);
    if nrm <= r {
        xv
    } else {
        xv.into_iter().map(|t| t * r / nrm).collect()
    }
}

/// Gradient of the sample-wise objective at a dense `v`.
pub fn samplewise_gradient(x: &SampleMatrix, v: &[f64], rho: f64) -> Vec<f64> {
    let scale = 2.0 / x.n() as f64;
    let r: Vec<f64> = x.mul_vec(v).into_iter().map(|t| scale * (t - t.clamp(-rho, rho))).collect();
    x.tmul_vec(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::covariance_from_samples;
    use crate::linalg::quadratic_form;
    use proptest::prelude::*;

    fn two_sample() -> SampleMatrix {
        SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap()
    }

    fn unit(x: &[f64]) -> KSparseVector {
        let n = norm2(x);
        KSparseVector::from_dense(&x.iter().map(|v| v / n).collect::<Vec<_>>())
    }

    #[test]
    fn two_sample_values() {
        let x = two_sample();
        let e1 = unit(&[1.0, 0.0]);
        assert!((samplewise_objective(&x, &e1, 0.9).unwrap() - 0.005).abs() < 1e-15);
        let top = unit(&[3f64.sqrt() / 2.0, 0.5]);
        assert_eq!(samplewise_objective(&x, &top, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn featurewise_scaled_identity() {
        let r2 = 2f64.sqrt();
        let x = SampleMatrix::from_rows(&[vec![r2, 0.0], vec![0.0, r2]]).unwrap();
        let o = featurewise_objective(&x, &unit(&[1.0, 0.0]), 0.4).unwrap();
        assert!(o.feasible);
        assert!((o.value - (r2 - 0.4).powi(2) / 2.0).abs() < 1e-15);
        assert!((o.value - 0.514_314_6).abs() < 1e-7);
        let o = featurewise_objective(&x, &unit(&[1.0, 0.0]), 2.0).unwrap();
        assert!(!o.feasible && o.value == 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let x = two_sample();
        let v = KSparseVector::from_dense(&[0.5, 0.0]);
        assert!(samplewise_objective(&x, &v, 0.1).is_err());
        assert!(samplewise_objective(&x, &unit(&[1.0, 0.0]), -0.1).is_err());
        let v3 = unit(&[1.0, 0.0, 0.0]);
        assert!(matches!(featurewise_objective(&x, &v3, 0.1), Err(Error::DimensionMismatch(_))));
    }

    fn instance() -> impl Strategy<Value = (SampleMatrix, Vec<f64>)> {
        (1usize..6, 1usize..8).prop_flat_map(|(d, n)| {
            (proptest::collection::vec(-3.0f64..3.0, n * d), proptest::collection::vec(-1.0f64..1.0, d))
                .prop_filter("nonzero v", |(_, v)| norm2(v) > 1e-3)
                .prop_map(move |(data, v)| {
                    let nv = norm2(&v);
                    (SampleMatrix::new(n, d, data).unwrap(), v.iter().map(|x| x / nv).collect())
                })
        })
    }

    proptest! {
        #[test]
        fn loss_splits_as_square_plus_phi(t in -10.0f64..10.0, rho in 0.0f64..5.0) {
            prop_assert!((loss_eq(t, rho) - (t * t + phi(t, rho))).abs() <= 1e-12 * (1.0 + t * t));
            prop_assert!(phi(t, rho) <= 0.0);
        }

        #[test]
        fn phi_is_concave(a in -5.0f64..5.0, b in -5.0f64..5.0, w in 0.0f64..1.0, rho in 0.0f64..3.0) {
            let m = phi(w * a + (1.0 - w) * b, rho);
            prop_assert!(m >= w * phi(a, rho) + (1.0 - w) * phi(b, rho) - 1e-12);
        }

        #[test]
        fn objectives_are_projection_residuals((x, v) in instance(), rho in 0.0f64..3.0) {
            let n = x.n() as f64;
            let xv = x.mul_vec(&v);
            for (kind, p) in [
                (PerturbKind::Samplewise, samplewise_projection(&x, &v, rho)),
                (PerturbKind::Featurewise, featurewise_projection(&x, &v, rho)),
            ] {
                let resid: f64 = xv.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
                let (obj, _) = objective_dense(&x, &v, rho, kind);
                prop_assert!((obj - resid).abs() <= 1e-12 * (1.0 + resid));
            }
        }

        #[test]
        fn projections_are_nearest((x, v) in instance(), rho in 0.0f64..3.0,
                                   probe in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let xv = x.mul_vec(&v);
            let dist = |u: &[f64]| xv.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            // A random member of each perturbation image set.
            let r_inf = rho * norm2(&v);
            let cand_s: Vec<f64> = (0..x.n()).map(|i| probe[i % 8] * r_inf).collect();
            prop_assert!(dist(&samplewise_projection(&x, &v, rho)) <= dist(&cand_s) + 1e-12);
            let r_2 = rho * norm1(&v);
            let pn = norm2(&probe[..x.n().min(8)]).max(1e-12);
            let mut cand_f = vec![0.0; x.n()];
            for i in 0..x.n().min(8) { cand_f[i] = probe[i] / pn * r_2 * 0.999; }
            prop_assert!(dist(&featurewise_projection(&x, &v, rho)) <= dist(&cand_f) + 1e-12);
        }

        #[test]
        fn rho_zero_is_vanilla((x, v) in instance()) {
            let s = covariance_from_samples(&x);
            let sv = KSparseVector::from_dense(&v);
            let q = quadratic_form(&s, &sv);
            for kind in [PerturbKind::Samplewise, PerturbKind::Featurewise] {
                let (o, f) = objective_dense(&x, &v, 0.0, kind);
                prop_assert!(f);
                prop_assert!((o - q).abs() <= 1e-10 * (1.0 + q));
            }
        }

        #[test]
        fn nonincreasing_in_rho((x, v) in instance(), r1 in 0.0f64..3.0, dr in 0.0f64..2.0) {
            for kind in [PerturbKind::Samplewise, PerturbKind::Featurewise] {
                let (a, _) = objective_dense(&x, &v, r1, kind);
                let (b, _) = objective_dense(&x, &v, r1 + dr, kind);
                prop_assert!(b <= a + 1e-12);
                prop_assert!(a >= 0.0);
            }
        }

        #[test]
        fn samplewise_gradient_matches_differences((x, v) in instance(), rho in 0.0f64..2.0) {
            let g = samplewise_gradient(&x, &v, rho);
            let h = 1e-6;
            for j in 0..v.len() {
                let mut p = v.clone(); p[j] += h;
                let mut m = v.clone(); m[j] -= h;
                let fd = (objective_dense(&x, &p, rho, PerturbKind::Samplewise).0
                    - objective_dense(&x, &m, rho, PerturbKind::Samplewise).0) / (2.0 * h);
                prop_assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()));
            }
        }
    }
}
