//! Certified best-first branch-and-bound for [`MicpModel`].
//!
//! Nodes fix the support (by enumeration or by branching on indicators)
//! and narrow each group's SOS-II range to a knot interval. Bounds come
//! from [`relax`]; every bound carries its own certificate, so an inexact
//! inner solve only costs tightness.

pub mod oracle;
mod relax;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::heuristics::{polish, ppm, warm_start, PpmInit, PpmOptions};
use crate::linalg::{top_k_sparse_project, Combinations, KSparseVector};
use crate::micp::{Formulation, MicpModel};
use crate::perturb::{objective_dense, PerturbKind};
use crate::plu::SegmentInterval;

use relax::{evaluate, rank_r_surrogate, support_cap, SupportData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchMode {
    BranchBinaries,
    EnumerateSupports,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub node_limit: usize,
    pub time_limit_s: f64,
    pub mode: SearchMode,
    pub relax_iters: usize,
    /// Seeds one extra randomly started power-method run in the warm start.
    pub seed: u64,
    /// Ignore the time limit and report `wall_ms = 0`, so that reports are
    /// byte-identical across runs.
    pub deterministic: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            abs_gap: 1e-4,
            rel_gap: 1e-3,
            node_limit: 1_000_000,
            time_limit_s: 1800.0,
            mode: SearchMode::EnumerateSupports,
            relax_iters: 500,
            seed: 0,
            deterministic: false,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if !(self.abs_gap > 0.0) || !(self.rel_gap > 0.0) || !(self.time_limit_s > 0.0) {
            return Err(invalid("gap tolerances and time limit must be positive"));
        }
        if self.relax_iters == 0 {
            return Err(invalid("relax_iters must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    GapReached,
    NodeLimit,
    TimeLimit,
    AllPerturbed,
}

impl SolveStatus {
    pub fn hit_limit(self) -> bool {
        matches!(self, SolveStatus::NodeLimit | SolveStatus::TimeLimit)
    }
}

/// A subproblem: indicator fixings plus one knot interval per group.
#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub forced_in: Vec<usize>,
    pub forced_out: Vec<usize>,
    pub intervals: Vec<SegmentInterval>,
    pub parent_bound: f64,
}

impl BnbNode {
    pub fn root(m: &MicpModel) -> Self {
        Self {
            forced_in: Vec::new(),
            forced_out: Vec::new(),
            intervals: (0..m.groups).map(|j| m.grid.full_interval(j)).collect(),
            parent_bound: f64::INFINITY,
        }
    }
}

fn serialize_incumbent<S: Serializer>(v: &KSparseVector, s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct Inc<'a> {
        support: &'a [usize],
        values: &'a [f64],
    }
    Inc { support: &v.support, values: &v.values }.serialize(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub kind: PerturbKind,
    pub d: usize,
    pub n: usize,
    pub k: usize,
    #[serde(rename = "N")]
    pub n_seg: usize,
    pub r: Option<usize>,
    pub rho: f64,
    /// Exact robust objective of the incumbent.
    pub lb: f64,
    /// Certified bound on the model optimum.
    pub ub: f64,
    pub gap: f64,
    pub nodes: usize,
    pub wall_ms: u64,
    pub status: SolveStatus,
    #[serde(serialize_with = "serialize_incumbent")]
    pub incumbent: KSparseVector,
    /// Residual `gamma = 1 - sum_{j<r} g_j^2` at the best model point
    /// found (rank-r only).
    pub gamma_hat: Option<f64>,
    /// Best model objective seen (lower bound on the model optimum).
    pub model_lb: f64,
    #[serde(skip)]
    pub incumbent_feasible: bool,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Certified bound of one node, in reported units; `-inf` when empty.
pub fn relax_bound(m: &MicpModel, node: &BnbNode, opts: &SolverOptions) -> Result<f64> {
    let d = m.d();
    if node.intervals.len() != m.groups {
        return Err(Error::DimensionMismatch(format!(
            "node has {} intervals, model has {} groups",
            node.intervals.len(),
            m.groups
        )));
    }
    if node.forced_in.iter().chain(&node.forced_out).any(|&i| i >= d) {
        return Err(invalid("fixed index out of range"));
    }
    if node.forced_in.len() > m.k || node.forced_in.iter().any(|i| node.forced_out.contains(i)) {
        return Ok(f64::NEG_INFINITY);
    }
    let allowed: Vec<usize> = (0..d).filter(|i| !node.forced_out.contains(i)).collect();
    if allowed.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let surrogate = (m.formulation == Formulation::RankR).then(|| rank_r_surrogate(m));
    let cap = (allowed.len() > m.k).then(|| (m.k as f64).sqrt());
    let sd = SupportData::new(m, allowed, surrogate.as_ref());
    let w0 = vec![0.0; sd.m()];
    let r = evaluate(m, &sd, &node.intervals, cap, &w0, opts.relax_iters);
    Ok(r.bound.min(support_cap(m, &sd)).min(node.parent_bound))
}

/// Top-k projection of a relaxed point and its exact objective.
pub fn round_incumbent(m: &MicpModel, relaxed_v: &[f64]) -> Result<(KSparseVector, f64, bool)> {
    let v = top_k_sparse_project(relaxed_v, m.k)?;
    let (f, feasible) = objective_dense(&m.x, &v.to_dense(), m.rho, m.kind);
    Ok((v, f, feasible))
}

struct Node {
    bound: f64,
    seq: u64,
    sd: Rc<SupportData>,
    forced_in: Vec<usize>,
    forced_out: Vec<usize>,
    intervals: Vec<SegmentInterval>,
    /// Start point for the relaxation, in support coordinates.
    w0: Vec<f64>,
    /// Relaxed argmax (dense) once evaluated.
    w: Option<Vec<f64>>,
    g: Vec<f64>,
    resolved: bool,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    m: &'a MicpModel,
    opts: &'a SolverOptions,
    surrogate: Option<crate::linalg::Covariance>,
    heap: BinaryHeap<Node>,
    seq: u64,
    nodes: usize,
    model_lb: f64,
    model_best: Vec<f64>,
    best: KSparseVector,
    best_val: f64,
    best_feasible: bool,
    closed_max: f64,
    pruned_max: f64,
}

fn better(a: (f64, bool), b: (f64, bool)) -> bool {
    (a.1 && !b.1) || (a.1 == b.1 && a.0 > b.0)
}

impl<'a> Search<'a> {
    fn tol(&self) -> f64 {
        self.opts.abs_gap.max(self.opts.rel_gap * self.model_lb.abs())
    }

    fn push(&mut self, mut node: Node) {
        if node.bound <= self.model_lb + self.tol() {
            self.pruned_max = self.pruned_max.max(node.bound);
            return;
        }
        node.seq = self.seq;
        self.seq += 1;
        self.heap.push(node);
    }

    fn support_data(&self, idx: Vec<usize>) -> Rc<SupportData> {
        Rc::new(SupportData::new(self.m, idx, self.surrogate.as_ref()))
    }

    fn root_intervals(&self, sd: &SupportData) -> Vec<SegmentInterval> {
        (0..self.m.groups).map(|j| self.m.grid.cover(j, -sd.gnorm[j], sd.gnorm[j])).collect()
    }

    fn new_root(&self, sd: Rc<SupportData>, forced_in: Vec<usize>, forced_out: Vec<usize>, parent: f64) -> Node {
        let cap = support_cap(self.m, &sd);
        Node {
            bound: cap.min(parent),
            seq: 0,
            intervals: self.root_intervals(&sd),
            w0: vec![0.0; sd.m()],
            sd,
            forced_in,
            forced_out,
            w: None,
            g: Vec::new(),
            resolved: false,
        }
    }

    fn support_fixed(&self, node: &Node) -> bool {
        node.sd.m() <= self.m.k
    }

    /// Records a point of the model's feasible region (any vector in the
    /// unit ball with at most k nonzeros).
    fn offer_model(&mut self, v: &[f64]) {
        let mv = self.m.model_value(v);
        if mv > self.model_lb {
            self.model_lb = mv;
            self.model_best = self.m.witness(v);
        }
    }

    fn offer(&mut self, v: &KSparseVector) -> Result<()> {
        let dense = v.to_dense();
        self.offer_model(&dense);
        let (f, feas) = objective_dense(&self.m.x, &dense, self.m.rho, self.m.kind);
        if better((f, feas), (self.best_val, self.best_feasible)) {
            let (p, pf, pfeas) = polish(&self.m.x, v, self.m.rho, self.m.kind)?;
            let (cand, cf, cfeas) = if better((pf, pfeas), (f, feas)) { (p, pf, pfeas) } else { (v.clone(), f, feas) };
            self.offer_model(&cand.to_dense());
            self.best = cand;
            self.best_val = cf;
            self.best_feasible = cfeas;
        }
        Ok(())
    }

    fn evaluate(&mut self, node: &mut Node, iters: usize) -> Result<()> {
        let cap = (!self.support_fixed(node)).then(|| (self.m.k as f64).sqrt());
        let r = evaluate(self.m, &node.sd, &node.intervals, cap, &node.w0, iters);
        self.nodes += 1;
        node.bound = node.bound.min(r.bound);
        node.w0 = node.sd.idx.iter().map(|&i| r.w[i]).collect();
        if r.bound > f64::NEG_INFINITY {
            if r.w.iter().filter(|&&x| x != 0.0).count() <= self.m.k {
                self.offer_model(&r.w);
            }
            if let Ok(v) = top_k_sparse_project(&r.w, self.m.k) {
                self.offer(&v)?;
            }
        }
        node.w = Some(r.w);
        node.g = r.g;
        Ok(())
    }

    /// Group whose chord exceeds the piecewise-linear value the most at
    /// the relaxed point, or the widest interval when none does.
    fn sos_branch_group(&self, node: &Node) -> Option<(usize, i64)> {
        let grid = &self.m.grid;
        let mut best: Option<(usize, f64)> = None;
        for (j, iv) in node.intervals.iter().enumerate() {
            if iv.is_single() {
                continue;
            }
            let g = node.g[j].clamp(iv.a(grid), iv.b(grid));
            let disc = self.m.lambda[j] * (iv.chord(grid, g) - grid.value(g));
            if disc > 1e-14 && best.is_none_or(|(_, b)| disc > b) {
                best = Some((j, disc));
            }
        }
        if let Some((j, _)) = best {
            let iv = node.intervals[j];
            return iv.nearest_interior_knot(grid, node.g[j]).map(|m| (j, m));
        }
        let j = (0..node.intervals.len()).filter(|&j| !node.intervals[j].is_single()).max_by(|&a, &b| {
            let (ia, ib) = (node.intervals[a], node.intervals[b]);
            (self.m.lambda[a] * ia.segments() as f64)
                .total_cmp(&(self.m.lambda[b] * ib.segments() as f64))
                .then(b.cmp(&a))
        })?;
        let iv = node.intervals[j];
        Some((j, (iv.lo + iv.hi).div_euclid(2)))
    }

    fn branch(&mut self, node: Node) -> Result<()> {
        if !self.support_fixed(&node) {
            return self.branch_binary(node);
        }
        let Some((j, knot)) = self.sos_branch_group(&node) else {
            // leaf: every interval is a single segment
            if !node.resolved {
                let mut node = node;
                node.resolved = true;
                let iters = self.opts.relax_iters * 8;
                self.evaluate(&mut node, iters)?;
                self.push(node);
            } else {
                self.closed_max = self.closed_max.max(node.bound);
            }
            return Ok(());
        };
        let (left, right) = node.intervals[j].split(knot);
        for iv in [left, right] {
            let mut intervals = node.intervals.clone();
            intervals[j] = iv;
            let child = Node {
                bound: node.bound,
                seq: 0,
                sd: Rc::clone(&node.sd),
                forced_in: node.forced_in.clone(),
                forced_out: node.forced_out.clone(),
                intervals,
                w0: node.w0.clone(),
                w: None,
                g: Vec::new(),
                resolved: false,
            };
            self.push(child);
        }
        Ok(())
    }

    fn branch_binary(&mut self, node: Node) -> Result<()> {
        let w = node.w.as_ref().expect("branching an evaluated node");
        let i = node
            .sd
            .idx
            .iter()
            .copied()
            .filter(|i| !node.forced_in.contains(i))
            .max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()).then(b.cmp(&a)))
            .expect("unfixed support has a free index");
        let mut fin = node.forced_in.clone();
        fin.push(i);
        fin.sort_unstable();
        let mut fout = node.forced_out.clone();
        fout.push(i);
        fout.sort_unstable();
        let d = self.m.d();
        for (forced_in, forced_out) in [(fin, node.forced_out.clone()), (node.forced_in.clone(), fout)] {
            let allowed: Vec<usize> = if forced_in.len() == self.m.k {
                forced_in.clone()
            } else {
                (0..d).filter(|i| !forced_out.contains(i)).collect()
            };
            if allowed.len() < forced_in.len() || allowed.is_empty() {
                continue;
            }
            let sd = self.support_data(allowed);
            let child = self.new_root(sd, forced_in, forced_out, node.bound);
            self.push(child);
        }
        Ok(())
    }

    fn upper_bound(&self) -> f64 {
        let open = self.heap.peek().map_or(f64::NEG_INFINITY, |n| n.bound);
        open.max(self.closed_max).max(self.pruned_max).max(self.model_lb)
    }
}

/// Runs the search. `warm` seeds the incumbent; without it the
/// projected power method supplies one.
pub fn solve(m: &MicpModel, opts: &SolverOptions, warm: Option<&KSparseVector>) -> Result<SolveReport> {
    opts.validate()?;
    let d = m.d();
    if let Some(w) = warm {
        if w.d != d || w.nnz() > m.k {
            return Err(invalid("warm start must be a k-sparse vector of dimension d"));
        }
    }
    let start = Instant::now();
    let surrogate = (m.formulation == Formulation::RankR).then(|| rank_r_surrogate(m));
    let origin = vec![0.0; d];
    let mut s = Search {
        m,
        opts,
        surrogate,
        heap: BinaryHeap::new(),
        seq: 0,
        nodes: 0,
        model_lb: m.model_value(&origin),
        model_best: m.witness(&origin),
        best: top_k_sparse_project(m.cov.eigen().vector(0), m.k)?,
        best_val: f64::NEG_INFINITY,
        best_feasible: false,
        closed_max: f64::NEG_INFINITY,
        pruned_max: f64::NEG_INFINITY,
    };
    let first = s.best.clone();
    s.offer(&first)?;
    let (ws, _, _) = warm_start(&m.x, m.k, m.rho, m.kind)?;
    s.offer(&ws)?;
    let rnd =
        ppm(&m.x, m.k, m.rho, m.kind, &PpmOptions { init: PpmInit::Random(opts.seed), ..PpmOptions::default() }, None)?;
    s.offer(&rnd.v)?;
    if let Some(w) = warm {
        if w.nnz() > 0 {
            s.offer(&top_k_sparse_project(&w.to_dense(), m.k)?)?;
        }
    }

    match opts.mode {
        SearchMode::EnumerateSupports if m.k < d => {
            for sup in Combinations::new(d, m.k) {
                let sd = s.support_data(sup);
                let node = s.new_root(sd, Vec::new(), Vec::new(), f64::INFINITY);
                s.push(node);
            }
        }
        _ => {
            let sd = s.support_data((0..d).collect());
            let node = s.new_root(sd, Vec::new(), Vec::new(), f64::INFINITY);
            s.push(node);
        }
    }

    let mut status = None;
    while let Some(mut node) = s.heap.pop() {
        if node.bound <= s.model_lb + s.tol() {
            s.pruned_max = s.pruned_max.max(node.bound);
            continue;
        }
        if s.nodes >= opts.node_limit {
            s.heap.push(node);
            status = Some(SolveStatus::NodeLimit);
            break;
        }
        if !opts.deterministic && start.elapsed().as_secs_f64() > opts.time_limit_s {
            s.heap.push(node);
            status = Some(SolveStatus::TimeLimit);
            break;
        }
        if node.w.is_none() {
            s.evaluate(&mut node, opts.relax_iters)?;
            s.push(node);
        } else {
            s.branch(node)?;
        }
    }

    let ub = s.upper_bound();
    let status = status.unwrap_or(if m.kind == PerturbKind::Featurewise && !s.best_feasible {
        SolveStatus::AllPerturbed
    } else if ub - s.model_lb <= opts.abs_gap {
        SolveStatus::Optimal
    } else {
        SolveStatus::GapReached
    });
    let lb = s.best_val;
    Ok(SolveReport {
        kind: m.kind,
        d,
        n: m.n(),
        k: m.k,
        n_seg: m.grid.n,
        r: m.r(),
        rho: m.rho,
        lb,
        ub,
        gap: (ub - lb) / lb.max(1e-12),
        nodes: s.nodes,
        wall_ms: if opts.deterministic { 0 } else { start.elapsed().as_millis() as u64 },
        status,
        gamma_hat: (m.formulation == Formulation::RankR).then(|| m.quadratic_part(&s.model_best).1),
        incumbent: s.best,
        model_lb: s.model_lb,
        incumbent_feasible: s.best_feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SampleMatrix;
    use crate::micp::build_model;

    fn two_sample() -> SampleMatrix {
        SampleMatrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap()
    }

    #[test]
    fn two_sample_samplewise() {
        let m = build_model(&two_sample(), PerturbKind::Samplewise, Formulation::Full, 2, 0.9, 10, None).unwrap();
        let r = solve(&m, &SolverOptions::default(), None).unwrap();
        assert!((r.lb - 0.005).abs() < 1e-6, "{r:?}");
        assert!(r.ub <= 0.0075 + 1e-4, "{r:?}");
        assert!(r.ub >= r.lb);
        let v = r.incumbent.to_dense();
        let c1 = v[0].abs();
        let c2 = (0.5 * v[0] + 3f64.sqrt() / 2.0 * v[1]).abs();
        assert!((c1 - 1.0).abs() < 1e-6 || (c2 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scaled_identity_featurewise() {
        // sqrt(2) I_2 has sample covariance I_2
        let x = SampleMatrix::from_rows(&[vec![2f64.sqrt(), 0.0], vec![0.0, 2f64.sqrt()]]).unwrap();
        let m = build_model(&x, PerturbKind::Featurewise, Formulation::Full, 1, 0.4, 10, None).unwrap();
        let r = solve(&m, &SolverOptions::default(), None).unwrap();
        assert!((r.lb - 0.514_314_6).abs() < 1e-6, "{r:?}");
        assert!(r.ub <= r.lb + 2.0 / 400.0 + 1e-4, "{r:?}");
    }

    #[test]
    fn contradictory_node_is_empty() {
        let m = build_model(&two_sample(), PerturbKind::Samplewise, Formulation::Full, 1, 0.9, 4, None).unwrap();
        let mut node = BnbNode::root(&m);
        node.forced_in = vec![0, 1];
        assert_eq!(relax_bound(&m, &node, &SolverOptions::default()).unwrap(), f64::NEG_INFINITY);
        node.forced_in = vec![0];
        node.forced_out = vec![0];
        assert_eq!(relax_bound(&m, &node, &SolverOptions::default()).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn rounding_is_idempotent_on_feasible_points() {
        let m = build_model(&two_sample(), PerturbKind::Samplewise, Formulation::Full, 2, 0.9, 10, None).unwrap();
        let (v, f, _) = round_incumbent(&m, &[0.99, 0.05]).unwrap();
        let (v2, f2, _) = round_incumbent(&m, &v.to_dense()).unwrap();
        assert_eq!(v, v2);
        assert_eq!(f, f2);
        let m1 = build_model(&two_sample(), PerturbKind::Samplewise, Formulation::Full, 1, 0.9, 10, None).unwrap();
        let (v, f, _) = round_incumbent(&m1, &[0.99, 0.05]).unwrap();
        assert_eq!(v.support, vec![0]);
        assert!((f - 0.005).abs() < 1e-12);
    }
}
