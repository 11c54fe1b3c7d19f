//! Mixed-integer conic models for the robust sparse PCA problem.
//!
//! A [`MicpModel`] carries an explicit variable/constraint list (for
//! inspection, JSON export and feasibility checks of candidate points) plus
//! the data the branch-and-bound solver works from directly. Four builders
//! cover {sample-wise, feature-wise} x {full, rank-r}.
//!
//! Variable blocks: `v` (loadings), `z` (support binaries), `g` (eigen
//! coordinates), `xi` (upper approximation of `g^2`), `eta` (SOS-II weights
//! per group), then `phi` (sample-wise), or `t`, `y`, `s` (feature-wise), and
//! `gamma` for rank-r.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};
use crate::linalg::{covariance_from_samples, norm1, Covariance, SampleMatrix};
use crate::perturb::{phi, PerturbKind};
use crate::plu::PluGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Full,
    RankR,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarInfo {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    /// `sum x_i^2 <= 1`
    Ball {
        vars: Vec<usize>,
    },
    /// `sum z_i <= k`
    Cardinality {
        vars: Vec<usize>,
        k: usize,
    },
    /// `-z <= v <= z`
    Indicator {
        v: usize,
        z: usize,
    },
    Linear {
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    },
    /// At most two consecutive nonzeros.
    Sos2 {
        vars: Vec<usize>,
    },
    /// `phi <= phi_rho(<x_sample, v>)`
    PhiEnvelope {
        phi: usize,
        sample: usize,
    },
    /// `(t + rho y)^2 <= sum c_j x_j`
    Cone {
        t: usize,
        y: usize,
        rho: f64,
        terms: Vec<(usize, f64)>,
    },
    /// `sum g_j^2 + gamma <= 1`
    Residual {
        vars: Vec<usize>,
        gamma: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub v: Range<usize>,
    pub z: Range<usize>,
    pub g: Range<usize>,
    pub xi: Range<usize>,
    pub eta: Vec<Range<usize>>,
    pub phi: Option<Range<usize>>,
    pub t: Option<usize>,
    pub y: Option<usize>,
    pub s: Option<Range<usize>>,
    pub gamma: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub continuous: usize,
    pub binary: usize,
    pub sos2_groups: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone)]
pub struct MicpModel {
    pub kind: PerturbKind,
    pub formulation: Formulation,
    pub k: usize,
    pub rho: f64,
    pub grid: PluGrid,
    /// Number of approximated eigen-directions (`d` or `r`).
    pub groups: usize,
    pub x: Arc<SampleMatrix>,
    pub cov: Arc<Covariance>,
    /// Eigenvalues of the sample covariance, clamped at 0.
    pub lambda: Vec<f64>,
    /// `lambda_{r+1}` for rank-r (0 when `r = d`), 0 for full.
    pub lambda_tail: f64,
    pub vars: Vec<VarInfo>,
    pub constraints: Vec<Constraint>,
    pub layout: Layout,
    /// Linear objective over `vars`.
    pub objective: Vec<(usize, f64)>,
    /// Feature-wise with `rho^2 >= n lambda_1`: every unit vector is fully
    /// absorbed by the perturbation, so the true optimum is 0.
    pub expect_zero: bool,
}

pub fn build_samplewise_full(x: &SampleMatrix, k: usize, rho: f64, n_seg: usize) -> Result<MicpModel> {
    Builder::build(x, PerturbKind::Samplewise, k, rho, n_seg, None)
}

pub fn build_samplewise_rankr(x: &SampleMatrix, k: usize, rho: f64, n_seg: usize, r: usize) -> Result<MicpModel> {
    Builder::build(x, PerturbKind::Samplewise, k, rho, n_seg, Some(r))
}

pub fn build_featurewise_full(x: &SampleMatrix, k: usize, rho: f64, n_seg: usize) -> Result<MicpModel> {
    Builder::build(x, PerturbKind::Featurewise, k, rho, n_seg, None)
}

pub fn build_featurewise_rankr(x: &SampleMatrix, k: usize, rho: f64, n_seg: usize, r: usize) -> Result<MicpModel> {
    Builder::build(x, PerturbKind::Featurewise, k, rho, n_seg, Some(r))
}

/// Dispatches on kind and formulation; `r` is required for rank-r.
pub fn build_model(
    x: &SampleMatrix,
    kind: PerturbKind,
    formulation: Formulation,
    k: usize,
    rho: f64,
    n_seg: usize,
    r: Option<usize>,
) -> Result<MicpModel> {
    let r = match formulation {
        Formulation::Full => None,
        Formulation::RankR => Some(r.ok_or_else(|| invalid("rank-r formulation needs r"))?),
    };
    Builder::build(x, kind, k, rho, n_seg, r)
}

struct Builder {
    vars: Vec<VarInfo>,
    cons: Vec<Constraint>,
}

impl Builder {
    fn block(&mut self, name: &str, len: usize, lb: f64, ub: f64, binary: bool) -> Range<usize> {
        let start = self.vars.len();
        for i in 0..len {
            self.vars.push(VarInfo { name: format!("{name}[{i}]"), lb, ub, binary });
        }
        start..self.vars.len()
    }

    fn build(
        x: &SampleMatrix,
        kind: PerturbKind,
        k: usize,
        rho: f64,
        n_seg: usize,
        r: Option<usize>,
    ) -> Result<MicpModel> {
        let (n, d) = (x.n(), x.d());
        if k == 0 || k > d {
            return Err(invalid(format!("k must be in 1..={d}, got {k}")));
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(invalid(format!("rho must be finite and >= 0, got {rho}")));
        }
        let grid = PluGrid::new(n_seg)?;
        if let Some(r) = r {
            if r == 0 || r > d {
                return Err(invalid(format!("r must be in 1..={d}, got {r}")));
            }
        }
        let cov = Arc::new(covariance_from_samples(x));
        let lambda: Vec<f64> = cov.eigen().values.iter().map(|l| l.max(0.0)).collect();
        let groups = r.unwrap_or(d);
        let lambda_tail = match r {
            Some(r) if r < d => lambda[r],
            _ => 0.0,
        };

        let mut b = Builder { vars: Vec::new(), cons: Vec::new() };
        let v = b.block("v", d, -1.0, 1.0, false);
        let z = b.block("z", d, 0.0, 1.0, true);
        let g = b.block("g", groups, -1.0, 1.0, false);
        let xi = b.block("xi", groups, 0.0, 1.0, false);
        let knots = grid.knots();
        let eta: Vec<Range<usize>> =
            (0..groups).map(|j| b.block(&format!("eta{j}"), knots.len(), 0.0, 1.0, false)).collect();

        b.cons.push(Constraint::Ball { vars: v.clone().collect() });
        b.cons.push(Constraint::Cardinality { vars: z.clone().collect(), k });
        for i in 0..d {
            b.cons.push(Constraint::Indicator { v: v.start + i, z: z.start + i });
        }
        let e = cov.eigen();
        for (j, w) in eta.iter().enumerate() {
            let mut terms = vec![(g.start + j, 1.0)];
            terms.extend((0..d).map(|i| (v.start + i, -e.component(i, j))));
            b.cons.push(Constraint::Linear { terms, sense: Sense::Eq, rhs: 0.0 });
            b.cons.push(Constraint::Linear {
                terms: w.clone().map(|q| (q, 1.0)).collect(),
                sense: Sense::Eq,
                rhs: 1.0,
            });
            let mut tg = vec![(g.start + j, 1.0)];
            tg.extend(w.clone().zip(&knots).map(|(q, th)| (q, -th)));
            b.cons.push(Constraint::Linear { terms: tg, sense: Sense::Eq, rhs: 0.0 });
            let mut tx = vec![(xi.start + j, 1.0)];
            tx.extend(w.clone().zip(&knots).map(|(q, th)| (q, -th * th)));
            b.cons.push(Constraint::Linear { terms: tx, sense: Sense::Eq, rhs: 0.0 });
            b.cons.push(Constraint::Sos2 { vars: w.clone().collect() });
        }

        let gamma = r.map(|_| b.block("gamma", 1, 0.0, 1.0, false).start);
        if let Some(gm) = gamma {
            b.cons.push(Constraint::Residual { vars: g.clone().collect(), gamma: gm });
        }

        let mut objective = Vec::new();
        let (mut phi_r, mut t_v, mut y_v, mut s_r) = (None, None, None, None);
        let mut expect_zero = false;
        match kind {
            PerturbKind::Samplewise => {
                let start = b.vars.len();
                for i in 0..n {
                    let lb = phi(crate::linalg::norm2(x.row(i)), rho);
                    b.vars.push(VarInfo { name: format!("phi[{i}]"), lb, ub: 0.0, binary: false });
                }
                let pr = start..b.vars.len();
                for i in 0..n {
                    b.cons.push(Constraint::PhiEnvelope { phi: pr.start + i, sample: i });
                }
                objective.extend((0..groups).map(|j| (xi.start + j, lambda[j])));
                if let Some(gm) = gamma {
                    objective.push((gm, lambda_tail));
                }
                objective.extend(pr.clone().map(|q| (q, 1.0 / n as f64)));
                phi_r = Some(pr);
            }
            PerturbKind::Featurewise => {
                let t = b.block("t", 1, 0.0, (n as f64 * lambda[0]).sqrt(), false).start;
                let y = b.block("y", 1, 0.0, (k as f64).sqrt(), false).start;
                let s = b.block("s", d, 0.0, 1.0, false);
                let mut ty = vec![(y, 1.0)];
                ty.extend(s.clone().map(|q| (q, -1.0)));
                b.cons.push(Constraint::Linear { terms: ty, sense: Sense::Ge, rhs: 0.0 });
                for i in 0..d {
                    let (si, vi) = (s.start + i, v.start + i);
                    b.cons.push(Constraint::Linear { terms: vec![(si, 1.0), (vi, -1.0)], sense: Sense::Ge, rhs: 0.0 });
                    b.cons.push(Constraint::Linear { terms: vec![(si, 1.0), (vi, 1.0)], sense: Sense::Ge, rhs: 0.0 });
                }
                let mut terms: Vec<(usize, f64)> = (0..groups).map(|j| (xi.start + j, n as f64 * lambda[j])).collect();
                if let Some(gm) = gamma {
                    terms.push((gm, n as f64 * lambda_tail));
                }
                b.cons.push(Constraint::Cone { t, y, rho, terms });
                objective.push((t, 1.0 / (n as f64).sqrt()));
                expect_zero = rho * rho >= n as f64 * lambda[0];
                t_v = Some(t);
                y_v = Some(y);
                s_r = Some(s);
            }
        }

        Ok(MicpModel {
            kind,
            formulation: if r.is_some() { Formulation::RankR } else { Formulation::Full },
            k,
            rho,
            grid,
            groups,
            x: Arc::new(x.clone()),
            cov,
            lambda,
            lambda_tail,
            vars: b.vars,
            constraints: b.cons,
            layout: Layout { v, z, g, xi, eta, phi: phi_r, t: t_v, y: y_v, s: s_r, gamma },
            objective,
            expect_zero,
        })
    }
}

fn digest(data: &[f64]) -> String {
    let mut h = Sha256::new();
    for x in data {
        h.update(x.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct ModelJson<'a> {
    kind: PerturbKind,
    formulation: Formulation,
    d: usize,
    n: usize,
    k: usize,
    #[serde(rename = "N")]
    n_seg: usize,
    r: Option<usize>,
    rho: f64,
    lambda: &'a [f64],
    data_sha256: String,
    covariance_sha256: String,
    expect_zero: bool,
    stats: ModelStats,
    variables: &'a [VarInfo],
    constraints: &'a [Constraint],
    objective: &'a [(usize, f64)],
}

impl MicpModel {
    pub fn d(&self) -> usize {
        self.x.d()
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn r(&self) -> Option<usize> {
        (self.formulation == Formulation::RankR).then_some(self.groups)
    }

    pub fn stats(&self) -> ModelStats {
        let binary = self.vars.iter().filter(|v| v.binary).count();
        ModelStats {
            continuous: self.vars.len() - binary,
            binary,
            sos2_groups: self.groups,
            constraints: self.constraints.len(),
        }
    }

    /// Upper bound on `t` (feature-wise), `sqrt(n lambda_1)`.
    pub fn t_max(&self) -> f64 {
        (self.n() as f64 * self.lambda[0]).sqrt()
    }

    pub fn to_json(&self) -> Result<String> {
        let j = ModelJson {
            kind: self.kind,
            formulation: self.formulation,
            d: self.d(),
            n: self.n(),
            k: self.k,
            n_seg: self.grid.n,
            r: self.r(),
            rho: self.rho,
            lambda: &self.lambda,
            data_sha256: digest(self.x.data()),
            covariance_sha256: digest(self.cov.data()),
            expect_zero: self.expect_zero,
            stats: self.stats(),
            variables: &self.vars,
            constraints: &self.constraints,
            objective: &self.objective,
        };
        Ok(serde_json::to_string_pretty(&j)?)
    }

    /// `sum_j lambda_j xi_j (+ lambda_{r+1} gamma)` at the point induced by
    /// `v`, with `xi_j` the piecewise-linear value of `g_j`.
    pub fn quadratic_part(&self, v: &[f64]) -> (f64, f64) {
        let g = self.cov.eigen().coordinates(v);
        let mut q: f64 = (0..self.groups).map(|j| self.lambda[j] * self.grid.value(g[j])).sum();
        let mut gamma = 0.0;
        if self.formulation == Formulation::RankR {
            gamma = (1.0 - g[..self.groups].iter().map(|x| x * x).sum::<f64>()).max(0.0);
            q += self.lambda_tail * gamma;
        }
        (q, gamma)
    }

    /// Best model objective attainable with `v` fixed, in reported units
    /// (feature-wise: `(t/sqrt n)^2`). Valid lower bound on the model
    /// optimum for any `v` in the k-sparse unit ball.
    pub fn model_value(&self, v: &[f64]) -> f64 {
        let (q, _) = self.quadratic_part(v);
        match self.kind {
            PerturbKind::Samplewise => {
                let xv = self.x.mul_vec(v);
                q + xv.iter().map(|&t| phi(t, self.rho)).sum::<f64>() / self.n() as f64
            }
            PerturbKind::Featurewise => {
                let n = self.n() as f64;
                let mut t = (n * q).sqrt() - self.rho * norm1(v);
                if t < 0.0 {
                    // same fallback witness as `induced_assignment`
                    t = (n * self.quadratic_part(&vec![0.0; v.len()]).0).sqrt();
                }
                let t = t.min(self.t_max());
                t * t / n
            }
        }
    }

    /// The point whose induced assignment attains [`Self::model_value`]
    /// at `v`: `v` itself, or the origin when the perturbation absorbs `v`.
    pub fn witness(&self, v: &[f64]) -> Vec<f64> {
        if self.kind == PerturbKind::Featurewise {
            let (q, _) = self.quadratic_part(v);
            if (self.n() as f64 * q).sqrt() < self.rho * norm1(v) {
                return vec![0.0; v.len()];
            }
        }
        v.to_vec()
    }

    /// Converts the linear objective into reported units.
    pub fn reported(&self, linear: f64) -> f64 {
        match self.kind {
            PerturbKind::Samplewise => linear,
            PerturbKind::Featurewise => linear * linear,
        }
    }

    /// Full assignment of every model variable induced by `v`. For a
    /// feature-wise `v` that the perturbation absorbs entirely
    /// (`rho ||v||_1 > sqrt(n q)`) the cone has no room, and the point
    /// induced by the origin (objective 0) is returned instead.
    pub fn induced_assignment(&self, v: &[f64]) -> Vec<f64> {
        if self.kind == PerturbKind::Featurewise {
            let (q, _) = self.quadratic_part(v);
            if (self.n() as f64 * q).sqrt() < self.rho * norm1(v) {
                return self.induced_assignment(&vec![0.0; v.len()]);
            }
        }
        let l = &self.layout;
        let mut a = vec![0.0; self.vars.len()];
        for (i, &vi) in v.iter().enumerate() {
            a[l.v.start + i] = vi;
            a[l.z.start + i] = if vi != 0.0 { 1.0 } else { 0.0 };
        }
        let g = self.cov.eigen().coordinates(v);
        for j in 0..self.groups {
            let gj = g[j].clamp(-1.0, 1.0);
            a[l.g.start + j] = gj;
            let (s, w0, w1) = self.grid.sos2_weights(gj);
            let base = l.eta[j].start + (s + self.grid.n as i64) as usize;
            a[base] = w0;
            a[base + 1] = w1;
            a[l.xi.start + j] = w0 * self.grid.knot(s).powi(2) + w1 * self.grid.knot(s + 1).powi(2);
        }
        let (q, gamma) = self.quadratic_part(v);
        if let Some(gm) = l.gamma {
            a[gm] = gamma;
        }
        if let Some(pr) = &l.phi {
            for (i, t) in self.x.mul_vec(v).into_iter().enumerate() {
                a[pr.start + i] = phi(t, self.rho);
            }
        }
        if let (Some(t), Some(y), Some(s)) = (l.t, l.y, &l.s) {
            let y_val = norm1(v);
            a[y] = y_val;
            for (i, vi) in v.iter().enumerate() {
                a[s.start + i] = vi.abs();
            }
            a[t] = ((self.n() as f64 * q).sqrt() - self.rho * y_val).clamp(0.0, self.t_max());
        }
        a
    }

    pub fn objective_value(&self, a: &[f64]) -> f64 {
        self.objective.iter().map(|&(q, c)| c * a[q]).sum()
    }

    /// Checks bounds, integrality and every constraint at tolerance `tol`.
    pub fn check_assignment(&self, a: &[f64], tol: f64) -> std::result::Result<(), String> {
        if a.len() != self.vars.len() {
            return Err("assignment length".into());
        }
        for (q, info) in self.vars.iter().enumerate() {
            if a[q] < info.lb - tol || a[q] > info.ub + tol {
                return Err(format!("{} = {} outside [{}, {}]", info.name, a[q], info.lb, info.ub));
            }
            if info.binary && a[q] != 0.0 && a[q] != 1.0 {
                return Err(format!("{} not binary", info.name));
            }
        }
        let lin = |terms: &[(usize, f64)]| terms.iter().map(|&(q, c)| c * a[q]).sum::<f64>();
        for c in &self.constraints {
            let ok = match c {
                Constraint::Ball { vars } => vars.iter().map(|&q| a[q] * a[q]).sum::<f64>() <= 1.0 + tol,
                Constraint::Cardinality { vars, k } => vars.iter().map(|&q| a[q]).sum::<f64>() <= *k as f64 + tol,
                Constraint::Indicator { v, z } => a[*v].abs() <= a[*z] + tol,
                Constraint::Linear { terms, sense, rhs } => {
                    let s = lin(terms);
                    match sense {
                        Sense::Le => s <= rhs + tol,
                        Sense::Ge => s >= rhs - tol,
                        Sense::Eq => (s - rhs).abs() <= tol,
                    }
                }
                Constraint::Sos2 { vars } => {
                    let nz: Vec<usize> = (0..vars.len()).filter(|&i| a[vars[i]].abs() > tol).collect();
                    nz.len() <= 2 && (nz.len() < 2 || nz[1] == nz[0] + 1)
                }
                Constraint::PhiEnvelope { phi: p, sample } => {
                    let l = &self.layout.v;
                    let t: f64 = self.x.row(*sample).iter().zip(&a[l.clone()]).map(|(x, v)| x * v).sum();
                    a[*p] <= phi(t, self.rho) + tol
                }
                Constraint::Cone { t, y, rho, terms } => {
                    let lhs = a[*t] + rho * a[*y];
                    lhs * lhs <= lin(terms) + tol * (1.0 + lin(terms).abs())
                }
                Constraint::Residual { vars, gamma } => {
                    vars.iter().map(|&q| a[q] * a[q]).sum::<f64>() + a[*gamma] <= 1.0 + tol
                }
            };
            if !ok {
                return Err(format!("violated: {c:?}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use crate::perturb::objective_dense;
    use proptest::prelude::*;

    fn data(n: usize, d: usize, seed: u64) -> SampleMatrix {
        // small deterministic LCG, enough for structural tests
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let v = (0..n * d)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        SampleMatrix::new(n, d, v).unwrap()
    }

    #[test]
    fn variable_counts() {
        let x = data(100, 15, 1);
        let m = build_samplewise_full(&x, 5, 0.5, 3).unwrap();
        let st = m.stats();
        assert_eq!(st.continuous, 15 + 15 + 15 + 100 + 105);
        assert_eq!(st.binary, 15);
        assert_eq!(st.sos2_groups, 15);
        let m = build_samplewise_rankr(&x, 5, 0.5, 3, 3).unwrap();
        assert_eq!(m.stats().continuous, 15 + 3 + 3 + 21 + 1 + 100);
        assert_eq!(m.stats().sos2_groups, 3);
        let m = build_featurewise_full(&x, 5, 0.5, 3).unwrap();
        assert_eq!(m.stats().continuous, 15 + 15 + 15 + 105 + 2 + 15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = data(10, 4, 2);
        assert!(build_samplewise_full(&x, 0, 0.5, 3).is_err());
        assert!(build_samplewise_full(&x, 5, 0.5, 3).is_err());
        assert!(build_samplewise_full(&x, 2, -1.0, 3).is_err());
        assert!(build_samplewise_full(&x, 2, 0.5, 0).is_err());
        assert!(build_featurewise_rankr(&x, 2, 0.5, 3, 0).is_err());
        assert!(build_featurewise_rankr(&x, 2, 0.5, 3, 5).is_err());
    }

    #[test]
    fn expect_zero_flag() {
        let x = data(10, 4, 3);
        let lam = build_featurewise_full(&x, 2, 0.0, 2).unwrap().lambda[0];
        let big = (10.0 * lam).sqrt() * 1.01;
        assert!(build_featurewise_full(&x, 2, big, 2).unwrap().expect_zero);
        assert!(!build_featurewise_full(&x, 2, big * 0.5, 2).unwrap().expect_zero);
    }

    #[test]
    fn json_lists_constraints() {
        let x = data(5, 3, 4);
        let m = build_featurewise_rankr(&x, 2, 0.3, 2, 2).unwrap();
        let j: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(j["kind"], "featurewise");
        assert_eq!(j["N"], 2);
        assert_eq!(j["data_sha256"].as_str().unwrap().len(), 64);
        assert!(j["constraints"].as_array().unwrap().iter().any(|c| c["type"] == "cone"));
        assert!(j["constraints"].as_array().unwrap().iter().any(|c| c["type"] == "residual"));
    }

    fn unit_sparse(d: usize, k: usize) -> impl Strategy<Value = Vec<f64>> {
        (proptest::collection::vec(-1.0f64..1.0, d), proptest::sample::subsequence((0..d).collect::<Vec<_>>(), 1..=k))
            .prop_filter_map("nonzero", |(v, s)| {
                let mut w = vec![0.0; v.len()];
                for &i in &s {
                    w[i] = v[i];
                }
                let n = norm2(&w);
                (n > 1e-3).then(|| w.iter().map(|x| x / n).collect())
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn induced_point_is_feasible_and_dominates(
            seed in 0u64..1000, v in unit_sparse(5, 3), rho in 0.0f64..2.0, n_seg in 1usize..6, r in 1usize..=5,
        ) {
            let x = data(12, 5, seed);
            for kind in [PerturbKind::Samplewise, PerturbKind::Featurewise] {
                for form in [Formulation::Full, Formulation::RankR] {
                    let m = build_model(&x, kind, form, 3, rho, n_seg, Some(r)).unwrap();
                    let a = m.induced_assignment(&v);
                    if let Err(e) = m.check_assignment(&a, 1e-9) {
                        return Err(TestCaseError::fail(e));
                    }
                    let ir = m.reported(m.objective_value(&a));
                    let (exact, _) = objective_dense(&x, &v, rho, kind);
                    prop_assert!(ir >= exact - 1e-9, "{kind:?} {form:?}: {ir} < {exact}");
                    prop_assert!((ir - m.model_value(&v)).abs() <= 1e-9 * (1.0 + ir), "{kind:?} {form:?} ir={ir} mv={}", m.model_value(&v));
                    if kind == PerturbKind::Samplewise && form == Formulation::Full {
                        // additive sandwich at a fixed point
                        let slack: f64 = m.lambda.iter().sum::<f64>() * m.grid.max_gap();
                        prop_assert!(ir <= exact + slack + 1e-9);
                    }
                }
            }
        }
    }
}
