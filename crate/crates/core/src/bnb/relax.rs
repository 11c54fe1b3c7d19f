//! Node relaxations and their certified upper bounds.
//!
//! On a node the support is restricted to an index set `A` and each group's
//! `g_j` to a knot interval `[a_j, b_j]`, where `xi_j` is replaced by the
//! chord. What remains is a concave maximization over
//! `C = {w : ||w|| <= 1, a <= Gw <= b}` with `G = V_A^T`:
//!
//! * sample-wise: `Q(w) + (1/n) sum_i phi_rho(<x_i, w>)`
//! * feature-wise: `sqrt(n Q(w)) - rho ||w||_1` (the cone's `t`)
//!
//! where `Q` is affine (full) or concave quadratic (rank-r). A primal-dual
//! iteration finds `(w, mu)`; the bound
//! `s(w) - <s'(w), w> + sum_j psi_j(mu_j) + ||soft(s'(w) - G^T mu, rho_1)||`
//! holds for every `w` and `mu`, so solver accuracy only affects tightness.

use crate::linalg::{dot, jacobi_eigen, norm2, Covariance};
use crate::micp::{Formulation, MicpModel};
use crate::perturb::{phi, phi_derivative, PerturbKind};
use crate::plu::SegmentInterval;

/// Per-support data shared by every node on that support.
#[derive(Debug, Clone)]
pub(crate) struct SupportData {
    pub idx: Vec<usize>,
    /// `groups x m`, row `j` is eigenvector `j` restricted to `idx`.
    pub gmat: Vec<f64>,
    pub gnorm: Vec<f64>,
    /// `m x m`, `lambda_tail * sum_j G_j G_j^T` (rank-r only).
    pub qmat: Option<Vec<f64>>,
    /// Largest eigenvalue of the restricted sample covariance.
    pub cov_max: f64,
    /// Largest eigenvalue of the restricted rank-r surrogate (equals
    /// `cov_max` for full models).
    pub surrogate_max: f64,
}

impl SupportData {
    pub fn new(m: &MicpModel, idx: Vec<usize>, surrogate: Option<&Covariance>) -> Self {
        let e = m.cov.eigen();
        let k = idx.len();
        let mut gmat = Vec::with_capacity(m.groups * k);
        for j in 0..m.groups {
            gmat.extend(idx.iter().map(|&i| e.component(i, j)));
        }
        let gnorm = gmat.chunks(k).map(norm2).collect();
        let cov_max = jacobi_eigen(m.cov.submatrix(&idx).data(), k).values[0].max(0.0);
        let (qmat, surrogate_max) = match (m.formulation, surrogate) {
            (Formulation::RankR, Some(s)) => {
                let mut q = vec![0.0; k * k];
                for row in gmat.chunks(k) {
                    for a in 0..k {
                        for b in 0..k {
                            q[a * k + b] += m.lambda_tail * row[a] * row[b];
                        }
                    }
                }
                let sm = jacobi_eigen(s.submatrix(&idx).data(), k).values[0].max(0.0);
                (Some(q), sm)
            }
            _ => (None, cov_max),
        };
        Self { idx, gmat, gnorm, qmat, cov_max, surrogate_max }
    }

    pub fn m(&self) -> usize {
        self.idx.len()
    }

    fn row(&self, j: usize) -> &[f64] {
        let k = self.m();
        &self.gmat[j * k..(j + 1) * k]
    }
}

/// Rank-r surrogate `sum_{j<r} lambda_j v_j v_j^T + lambda_tail (I - sum_{j<r} v_j v_j^T)`;
/// on unit vectors its quadratic form dominates the rank-r model's `Q` up
/// to the piecewise-linear slack.
pub(crate) fn rank_r_surrogate(m: &MicpModel) -> Covariance {
    let d = m.d();
    let e = m.cov.eigen();
    let mut s = vec![0.0; d * d];
    for i in 0..d {
        s[i * d + i] = m.lambda_tail;
    }
    for j in 0..m.groups {
        let c = m.lambda[j] - m.lambda_tail;
        let v = e.vector(j);
        for a in 0..d {
            for b in 0..d {
                s[a * d + b] += c * v[a] * v[b];
            }
        }
    }
    Covariance::new(d, s).expect("surrogate is symmetric by construction")
}

/// Bound valid for every node on a support, from `v^T M v <= mu ||v||^2`,
/// the piecewise-linear slack `min(1/(4N^2), |g|/N)` per group and
/// `||v||_1 >= ||v||_2`. Reported units.
pub(crate) fn support_cap(m: &MicpModel, sd: &SupportData) -> f64 {
    let lam = &m.lambda[..m.groups];
    let slack_total: f64 = lam.iter().sum::<f64>() * m.grid.max_gap();
    let slack_lin = norm2(lam) / m.grid.n as f64;
    let q_at = |r: f64| (sd.surrogate_max - m.lambda_tail) * r * r + m.lambda_tail + slack_total.min(slack_lin * r);
    match m.kind {
        PerturbKind::Samplewise => q_at(1.0),
        PerturbKind::Featurewise => {
            // Q is nondecreasing in r, so on a cell [r0, r1] the bracket is
            // at most sqrt(n Q(r1)) - rho r0.
            let n = m.n() as f64;
            let cells = 256;
            let mut best = 0.0f64;
            for c in 0..cells {
                let r0 = c as f64 / cells as f64;
                let r1 = (c + 1) as f64 / cells as f64;
                best = best.max((n * q_at(r1)).sqrt() - m.rho * r0);
            }
            let t = best.min(m.t_max());
            t * t / n
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct RelaxResult {
    /// Certified bound in reported units; `-inf` when the node is empty.
    pub bound: f64,
    /// Approximate maximizer, dense over `0..d`.
    pub w: Vec<f64>,
    /// `V^T w` restricted to the groups.
    pub g: Vec<f64>,
}

pub(crate) struct NodeRelaxation<'a> {
    m: &'a MicpModel,
    sd: &'a SupportData,
    lo: Vec<f64>,
    hi: Vec<f64>,
    c_lin: Vec<f64>,
    c0: f64,
    rows: Vec<usize>,
    l1_cap: Option<f64>,
    rho1: f64,
    lsmooth_base: f64,
}

fn soft(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

fn psi(mu: f64, a: f64, b: f64) -> f64 {
    (mu * a).max(mu * b)
}

impl<'a> NodeRelaxation<'a> {
    /// `None` when some interval misses the range of its group on the
    /// unit ball of the support.
    pub fn new(
        m: &'a MicpModel,
        sd: &'a SupportData,
        intervals: &[SegmentInterval],
        l1_cap: Option<f64>,
    ) -> Option<Self> {
        let k = sd.m();
        let mut lo = Vec::with_capacity(m.groups);
        let mut hi = Vec::with_capacity(m.groups);
        let mut rows = Vec::new();
        let mut c_lin = vec![0.0; k];
        let mut c0 = m.lambda_tail;
        for (j, iv) in intervals.iter().enumerate() {
            let (a, b) = (iv.a(&m.grid), iv.b(&m.grid));
            let r = sd.gnorm[j];
            if b < -r - 1e-15 || a > r + 1e-15 {
                return None;
            }
            if a > -r || b < r {
                rows.push(j);
            }
            lo.push(a);
            hi.push(b);
            let lam = m.lambda[j];
            for (c, gj) in c_lin.iter_mut().zip(sd.row(j)) {
                *c += lam * (a + b) * gj;
            }
            c0 -= lam * a * b;
        }
        let (rho1, lsmooth_base) = match m.kind {
            PerturbKind::Samplewise => (0.0, 2.0 * sd.cov_max + 2.0 * m.lambda_tail),
            PerturbKind::Featurewise => (m.rho, 2.0 * m.lambda_tail),
        };
        Some(Self { m, sd, lo, hi, c_lin, c0, rows, l1_cap, rho1, lsmooth_base })
    }

    fn q_and_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let mut q = dot(&self.c_lin, w) + self.c0;
        let mut g = self.c_lin.clone();
        if let Some(qm) = &self.sd.qmat {
            let k = w.len();
            for a in 0..k {
                let row = &qm[a * k..(a + 1) * k];
                let qa = dot(row, w);
                q -= w[a] * qa;
                g[a] -= 2.0 * qa;
            }
        }
        (q, g)
    }

    /// Sample-wise smooth part `s(w)` and its gradient.
    fn samplewise_smooth(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let (mut s, mut g) = self.q_and_grad(w);
        let x = &self.m.x;
        let n = x.n() as f64;
        let rho = self.m.rho;
        for i in 0..x.n() {
            let row = x.row(i);
            let t: f64 = self.sd.idx.iter().zip(w).map(|(&c, wc)| row[c] * wc).sum();
            s += phi(t, rho) / n;
            let dphi = phi_derivative(t, rho) / n;
            if dphi != 0.0 {
                for (ga, &c) in g.iter_mut().zip(&self.sd.idx) {
                    *ga += dphi * row[c];
                }
            }
        }
        (s, g)
    }

    /// Smooth part and gradient; feature-wise uses the tangent majorant of
    /// `sqrt(n Q)` at `tau`: `n Q / (2 tau) + tau / 2`.
    fn smooth(&self, w: &[f64], tau: f64) -> (f64, Vec<f64>) {
        match self.m.kind {
            PerturbKind::Samplewise => self.samplewise_smooth(w),
            PerturbKind::Featurewise => {
                let n = self.m.n() as f64;
                let (q, g) = self.q_and_grad(w);
                let c = n / (2.0 * tau);
                (c * q + tau / 2.0, g.into_iter().map(|x| c * x).collect())
            }
        }
    }

    /// Relaxed objective at `w` (feature-wise in `t` units).
    fn value(&self, w: &[f64]) -> f64 {
        match self.m.kind {
            PerturbKind::Samplewise => self.samplewise_smooth(w).0,
            PerturbKind::Featurewise => {
                let n = self.m.n() as f64;
                let q = self.q_and_grad(w).0.max(0.0);
                (n * q).sqrt() - self.rho1 * w.iter().map(|x| x.abs()).sum::<f64>()
            }
        }
    }

    fn tau_at(&self, w: &[f64]) -> f64 {
        let n = self.m.n() as f64;
        (n * self.q_and_grad(w).0).max(0.0).sqrt().max(1e-9)
    }

    fn row_dot(&self, j: usize, w: &[f64]) -> f64 {
        dot(self.sd.row(j), w)
    }

    fn max_violation(&self, w: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|&j| {
                let g = self.row_dot(j, w);
                (self.lo[j] - g).max(g - self.hi[j]).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// `max_{||w|| <= 1 (, ||w||_1 <= cap)} <r, w> - rho1 ||w||_1`, bounded
    /// through a multiplier on the l1 cap.
    fn linear_max(&self, r: &[f64]) -> f64 {
        let at = |nu: f64| -> f64 {
            r.iter().map(|&x| soft(x, self.rho1 + nu).powi(2)).sum::<f64>().sqrt() + nu * self.l1_cap.unwrap_or(0.0)
        };
        let Some(_) = self.l1_cap else { return at(0.0) };
        let (mut a, mut b) = (0.0, r.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        let mut best = at(0.0).min(at(b));
        for _ in 0..80 {
            let m1 = a + (b - a) * 0.382;
            let m2 = a + (b - a) * 0.618;
            let (f1, f2) = (at(m1), at(m2));
            best = best.min(f1).min(f2);
            if f1 <= f2 {
                b = m2;
            } else {
                a = m1;
            }
        }
        best
    }

    /// Valid upper bound (same units as [`Self::value`]) for any `w` in the
    /// domain and any multipliers `mu` (indexed like `self.rows`) generated
    /// for the majorant at `tau_mu`.
    fn certificate(&self, w: &[f64], mu: &[f64], tau_mu: f64) -> f64 {
        let tau = match self.m.kind {
            PerturbKind::Samplewise => 1.0,
            PerturbKind::Featurewise => self.tau_at(w),
        };
        // multipliers scale with the majorant's gradient, which is ~1/tau
        let scale = if self.m.kind == PerturbKind::Featurewise { tau_mu / tau } else { 1.0 };
        let (s, grad) = self.smooth(w, tau);
        let mut r = grad.clone();
        let mut pen = 0.0;
        for (&j, &mj) in self.rows.iter().zip(mu) {
            let mj = mj * scale;
            pen += psi(mj, self.lo[j], self.hi[j]);
            for (ra, ga) in r.iter_mut().zip(self.sd.row(j)) {
                *ra -= mj * ga;
            }
        }
        s - dot(&grad, w) + pen + self.linear_max(&r)
    }

    /// Farkas test on the multipliers: `sum psi(mu) + ||G^T mu|| < 0`
    /// certifies that the slabs miss the unit ball.
    fn proves_empty(&self, mu: &[f64]) -> bool {
        let nm = norm2(mu);
        if nm == 0.0 {
            return false;
        }
        let k = self.sd.m();
        let mut r = vec![0.0; k];
        let mut pen = 0.0;
        for (&j, &mj) in self.rows.iter().zip(mu) {
            pen += psi(mj, self.lo[j], self.hi[j]);
            for (ra, ga) in r.iter_mut().zip(self.sd.row(j)) {
                *ra += mj * ga;
            }
        }
        pen + norm2(&r) < -1e-9 * nm
    }

    /// Primal-dual iterations from `w0` for the majorant at `tau`; returns
    /// the last primal/dual pair and the best certificate seen.
    fn pdhg(&self, w0: &[f64], mu0: &[f64], tau: f64, iters: usize) -> (Vec<f64>, Vec<f64>, f64, bool) {
        let k = self.sd.m();
        let lsmooth = match self.m.kind {
            PerturbKind::Samplewise => self.lsmooth_base,
            PerturbKind::Featurewise => self.lsmooth_base * self.m.n() as f64 / (2.0 * tau),
        };
        let mut w = w0.to_vec();
        let mut mu = mu0.to_vec();
        let omega = norm2(&self.smooth(&w, tau).1).max(1e-3);
        let sigma = omega;
        let tp = 0.95 / (sigma + lsmooth / 2.0);
        let mut best = f64::INFINITY;
        let mut empty = false;
        let check_every = 20;
        for it in 0..iters {
            let (_, grad) = self.smooth(&w, tau);
            let mut step = w.clone();
            for a in 0..k {
                step[a] += tp * grad[a];
            }
            for (&j, &mj) in self.rows.iter().zip(&mu) {
                for (sa, ga) in step.iter_mut().zip(self.sd.row(j)) {
                    *sa -= tp * mj * ga;
                }
            }
            for s in step.iter_mut() {
                *s = soft(*s, tp * self.rho1);
            }
            let ns = norm2(&step);
            if ns > 1.0 {
                step.iter_mut().for_each(|s| *s /= ns);
            }
            for (q, &j) in self.rows.iter().enumerate() {
                let ext: f64 =
                    self.sd.row(j).iter().zip(step.iter().zip(&w)).map(|(g, (a, b))| g * (2.0 * a - b)).sum();
                let y = mu[q] + sigma * ext;
                mu[q] = y - sigma * (y / sigma).clamp(self.lo[j], self.hi[j]);
            }
            w = step;
            if (it + 1) % check_every == 0 || it + 1 == iters {
                if self.proves_empty(&mu) {
                    empty = true;
                    break;
                }
                let c = self.certificate(&w, &mu, tau);
                best = best.min(c);
                let p = self.value(&w);
                if self.max_violation(&w) <= 1e-10 && best - p <= 1e-9 * (1.0 + p.abs()) {
                    break;
                }
            }
        }
        (w, mu, best, empty)
    }

    /// Certified bound in the relaxation's own units (`t` for feature-wise)
    /// and the final primal point.
    pub fn solve(&self, w0: &[f64], iters: usize) -> (f64, Vec<f64>) {
        let mut w = w0.to_vec();
        let nw = norm2(&w);
        if nw > 1.0 {
            w.iter_mut().for_each(|x| *x /= nw);
        }
        let mut mu = vec![0.0; self.rows.len()];
        let mut best = f64::INFINITY;
        let rounds = match self.m.kind {
            PerturbKind::Samplewise => 1,
            PerturbKind::Featurewise => 4,
        };
        for _ in 0..rounds {
            let tau = match self.m.kind {
                PerturbKind::Samplewise => 1.0,
                PerturbKind::Featurewise => self.tau_at(&w),
            };
            let (nw, nmu, c, empty) = self.pdhg(&w, &mu, tau, (iters / rounds).max(20));
            if empty {
                return (f64::NEG_INFINITY, nw);
            }
            best = best.min(c);
            // carry the multipliers over to the next majorant's scale
            let tau_next = match self.m.kind {
                PerturbKind::Samplewise => 1.0,
                PerturbKind::Featurewise => self.tau_at(&nw),
            };
            mu = nmu.into_iter().map(|x| x * tau / tau_next).collect();
            w = nw;
            if best - self.value(&w) <= 1e-9 * (1.0 + best.abs()) && self.max_violation(&w) <= 1e-10 {
                break;
            }
        }
        (best, w)
    }
}

/// Evaluates one node: `idx` is the allowed support, `intervals` one per
/// group. `w0` (length `idx.len()`) seeds the iteration.
pub(crate) fn evaluate(
    m: &MicpModel,
    sd: &SupportData,
    intervals: &[SegmentInterval],
    l1_cap: Option<f64>,
    w0: &[f64],
    iters: usize,
) -> RelaxResult {
    let d = m.d();
    let Some(p) = NodeRelaxation::new(m, sd, intervals, l1_cap) else {
        return RelaxResult { bound: f64::NEG_INFINITY, w: vec![0.0; d], g: vec![0.0; m.groups] };
    };
    let (b, w) = p.solve(w0, iters);
    let mut dense = vec![0.0; d];
    for (&i, &x) in sd.idx.iter().zip(&w) {
        dense[i] = x;
    }
    let g = (0..m.groups).map(|j| p.row_dot(j, &w)).collect();
    let bound = match m.kind {
        PerturbKind::Samplewise => b,
        PerturbKind::Featurewise if b == f64::NEG_INFINITY => b,
        PerturbKind::Featurewise => {
            let t = b.max(0.0).min(m.t_max());
            t * t / m.n() as f64
        }
    };
    RelaxResult { bound, w: dense, g }
}
