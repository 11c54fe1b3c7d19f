//! Recovery metrics and the synthetic experiment sweep.
//!
//! An experiment draws `trials` spiked sample matrices, reduces each to
//! `d_bar` features with the submatrix initialization, and for every value
//! of the normalized radius `rho_bar` runs the selected methods. Each
//! `(trial, rho_bar)` cell also gets a `best` row copied from the method
//! with the largest objective.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::bnb::{solve, SearchMode, SolverOptions};
use crate::error::{Error, Result};
use crate::heuristics::{exact_sparse_pca, ppm, submatrix_init, PpmOptions};
use crate::linalg::{covariance_from_samples, dot, norm2, KSparseVector};
use crate::micp::{build_model, Formulation};
use crate::perturb::{objective_dense, PerturbKind};
use crate::statgen::{build_strong_weak_truth, sample_spiked, spiked_truth, SpikedModel, StrongWeakSpec};

/// Iterations of the truncated power method inside the reduction step.
const REDUCTION_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthMode {
    Spiked,
    StrongWeak { c: f64, k1: usize, k2: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mip,
    MipR,
    Spca,
    Ppm,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mip, Method::MipR, Method::Spca, Method::Ppm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mip => "MIP",
            Method::MipR => "MIP-r",
            Method::Spca => "spca",
            Method::Ppm => "PPM",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?} (expected MIP, MIP-r, spca or PPM)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub d: usize,
    pub n: usize,
    pub k: usize,
    pub lambda: f64,
    pub truth: TruthMode,
    pub rho_bar_grid: Vec<f64>,
    pub d_bar: usize,
    pub n_seg: usize,
    pub r: usize,
    pub trials: usize,
    pub seed_base: u64,
    pub methods: Vec<Method>,
    pub perturb: PerturbKind,
    pub time_limit_s: f64,
    pub node_limit: usize,
    pub deterministic: bool,
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 100,
            n: 500,
            k: 5,
            lambda: 3.0,
            truth: TruthMode::Spiked,
            rho_bar_grid: vec![0.0],
            d_bar: 15,
            n_seg: 3,
            r: 3,
            trials: 10,
            seed_base: 0,
            methods: Method::ALL.to_vec(),
            perturb: PerturbKind::Featurewise,
            time_limit_s: 60.0,
            node_limit: 1_000_000,
            deterministic: false,
            threads: 1,
        }
    }
}

fn cfg_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_val<T: std::str::FromStr>(v: &str, line: usize, key: &str) -> Result<T> {
    v.parse().map_err(|_| cfg_err(line, format!("bad value {v:?} for `{key}`")))
}

fn parse_list<T: std::str::FromStr>(v: &str, line: usize, key: &str) -> Result<Vec<T>> {
    v.split(',').map(|t| parse_val(t.trim(), line, key)).collect()
}

impl ExperimentConfig {
    /// Parses `key = value` lines. `#` starts a comment, lists are comma
    /// separated, and unknown or repeated keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        let mut truth = "spiked".to_string();
        let (mut c, mut k1, mut k2) = (None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, val) = body.split_once('=').ok_or_else(|| cfg_err(line, "expected `key = value`"))?;
            let (key, val) = (key.trim(), val.trim());
            if !seen.insert(key.to_string()) {
                return Err(cfg_err(line, format!("duplicate key `{key}`")));
            }
            match key {
                "d" => cfg.d = parse_val(val, line, key)?,
                "n" => cfg.n = parse_val(val, line, key)?,
                "k" => cfg.k = parse_val(val, line, key)?,
                "lambda" => cfg.lambda = parse_val(val, line, key)?,
                "truth" => truth = val.to_string(),
                "c" => c = Some(parse_val(val, line, key)?),
                "k1" => k1 = Some(parse_val(val, line, key)?),
                "k2" => k2 = Some(parse_val(val, line, key)?),
                "rho_bar" => cfg.rho_bar_grid = parse_list(val, line, key)?,
                "d_bar" => cfg.d_bar = parse_val(val, line, key)?,
                "N" => cfg.n_seg = parse_val(val, line, key)?,
                "r" => cfg.r = parse_val(val, line, key)?,
                "trials" => cfg.trials = parse_val(val, line, key)?,
                "seed_base" => cfg.seed_base = parse_val(val, line, key)?,
                "methods" => cfg.methods = parse_list(val, line, key)?,
                "perturb" => cfg.perturb = parse_val(val, line, key)?,
                "time_limit_s" => cfg.time_limit_s = parse_val(val, line, key)?,
                "node_limit" => cfg.node_limit = parse_val(val, line, key)?,
                "deterministic" => cfg.deterministic = parse_val(val, line, key)?,
                "threads" => cfg.threads = parse_val(val, line, key)?,
                other => return Err(cfg_err(line, format!("unknown key `{other}`"))),
            }
        }
        cfg.truth = match truth.as_str() {
            "spiked" => {
                if c.is_some() || k1.is_some() || k2.is_some() {
                    return Err(Error::Config("c, k1, k2 require truth = strongweak".into()));
                }
                TruthMode::Spiked
            }
            "strongweak" => match (c, k1, k2) {
                (Some(c), Some(k1), Some(k2)) => TruthMode::StrongWeak { c, k1, k2 },
                _ => return Err(Error::Config("truth = strongweak needs c, k1 and k2".into())),
            },
            other => return Err(Error::Config(format!("unknown truth mode {other:?}"))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.k == 0 || self.k > self.d_bar || self.d_bar > self.d {
            return bad(format!("need 1 <= k <= d_bar <= d, got k={}, d_bar={}, d={}", self.k, self.d_bar, self.d));
        }
        if self.trials == 0 || self.n == 0 || self.threads == 0 {
            return bad("trials, n and threads must be >= 1".into());
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be finite and >= 0".into());
        }
        if self.rho_bar_grid.is_empty() || self.rho_bar_grid.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return bad("rho_bar must be a nonempty list of finite values >= 0".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        if m.len() != self.methods.len() {
            return bad("methods contains duplicates".into());
        }
        if self.n_seg == 0 || self.r == 0 || self.r > self.d_bar {
            return bad("need N >= 1 and 1 <= r <= d_bar".into());
        }
        if let TruthMode::StrongWeak { c, k1, k2 } = self.truth {
            if !(c > 0.0 && c < 1.0) || k1 == 0 || k2 == 0 || k1 + k2 > self.d {
                return bad("strong/weak truth needs 0 < c < 1, k1, k2 >= 1 and k1 + k2 <= d".into());
            }
        }
        if !(self.time_limit_s > 0.0) {
            return bad("time_limit_s must be positive".into());
        }
        Ok(())
    }

    /// `rho = rho_bar * sqrt(n / k)`.
    pub fn rho(&self, rho_bar: f64) -> f64 {
        rho_bar * (self.n as f64 / self.k as f64).sqrt()
    }
}

/// Recovery metrics of one estimate. Undefined restricted angles (a zero
/// sub-vector) are reported as 0 and flagged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub gap: f64,
    pub ang: f64,
    pub ang_s: f64,
    pub ang_w: f64,
    pub rate_supp: f64,
    pub rate_s: f64,
    pub rate_w: f64,
    pub ang_s_undefined: bool,
    pub ang_w_undefined: bool,
}

/// `(ub - lb) / lb`, or `+inf` when `lb <= 0`.
pub fn relative_gap(lb: f64, ub: f64) -> f64 {
    if lb > 0.0 {
        (ub - lb) / lb
    } else {
        f64::INFINITY
    }
}

fn restricted_angle(a: &[f64], b: &[f64], idx: &[usize]) -> Option<f64> {
    let ra: Vec<f64> = idx.iter().map(|&i| a[i]).collect();
    let rb: Vec<f64> = idx.iter().map(|&i| b[i]).collect();
    let den = norm2(&ra) * norm2(&rb);
    (den > 0.0).then(|| (dot(&ra, &rb).abs() / den).min(1.0))
}

fn hit_rate(found: &HashSet<usize>, set: &[usize]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    set.iter().filter(|i| found.contains(i)).count() as f64 / set.len() as f64
}

/// For a plain spiked truth the strong set is the whole support and the weak
/// set is empty.
pub fn compute_metrics(
    v_hat: &KSparseVector,
    v_star: &KSparseVector,
    strong_weak: Option<&StrongWeakSpec>,
    lb: f64,
    ub: f64,
) -> Result<Metrics> {
    if v_hat.d != v_star.d {
        return Err(Error::DimensionMismatch(format!("estimate has d={}, truth has d={}", v_hat.d, v_star.d)));
    }
    if v_star.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let (a, b) = (v_hat.to_dense(), v_star.to_dense());
    let all: Vec<usize> = (0..a.len()).collect();
    let (s1, s2) = match strong_weak {
        Some(sw) => (sw.s1.clone(), sw.s2.clone()),
        None => (v_star.support.clone(), Vec::new()),
    };
    let found: HashSet<usize> =
        v_hat.support.iter().zip(&v_hat.values).filter(|(_, x)| **x != 0.0).map(|(i, _)| *i).collect();
    let ang_s = restricted_angle(&a, &b, &s1);
    let ang_w = restricted_angle(&a, &b, &s2);
    Ok(Metrics {
        gap: relative_gap(lb, ub),
        ang: restricted_angle(&a, &b, &all).unwrap_or(0.0),
        ang_s: ang_s.unwrap_or(0.0),
        ang_w: ang_w.unwrap_or(0.0),
        rate_supp: hit_rate(&found, &v_star.support),
        rate_s: hit_rate(&found, &s1),
        rate_w: hit_rate(&found, &s2),
        ang_s_undefined: ang_s.is_none(),
        ang_w_undefined: ang_w.is_none(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub trial: usize,
    pub seed: u64,
    pub rho_bar: f64,
    pub rho: f64,
    /// Method name, or `best`.
    pub method: String,
    /// Exact robust objective of the returned vector.
    pub objective: f64,
    /// Best objective over all methods in the same cell.
    pub lb: f64,
    /// Certified upper bound; NaN for heuristics.
    pub ub: f64,
    pub gap: f64,
    pub ang: f64,
    pub ang_s: f64,
    pub ang_w: f64,
    pub rate_supp: f64,
    pub rate_s: f64,
    pub rate_w: f64,
    pub nodes: usize,
    pub wall_ms: u64,
    pub status: String,
}

pub const CSV_HEADER: &str =
    "trial,seed,rho_bar,rho,method,objective,lb,ub,gap,ang,ang_s,ang_w,rate_supp,rate_s,rate_w,nodes,wall_ms,status";

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.8e}")
    }
}

pub fn format_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let floats = [r.objective, r.lb, r.ub, r.gap, r.ang, r.ang_s, r.ang_w, r.rate_supp, r.rate_s, r.rate_w];
        let _ = write!(s, "{},{},{},{},{}", r.trial, r.seed, fmt_f(r.rho_bar), fmt_f(r.rho), r.method);
        for f in floats {
            let _ = write!(s, ",{}", fmt_f(f));
        }
        let _ = writeln!(s, ",{},{},{}", r.nodes, r.wall_ms, r.status);
    }
    s
}

/// One method's output before the cell-wide `lb` is known.
struct Outcome {
    method: Method,
    v: KSparseVector,
    objective: f64,
    ub: f64,
    nodes: usize,
    wall_ms: u64,
    status: String,
}

fn embed(v: &KSparseVector, idx: &[usize], d: usize) -> KSparseVector {
    let support = v.support.iter().map(|&i| idx[i]).collect();
    KSparseVector::new(d, support, v.values.clone()).expect("reduced support maps into range")
}

/// All rows of a single trial, in `(rho_bar, method)` order with `best` last.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<Vec<MetricsRow>> {
    cfg.validate()?;
    let seed = cfg.seed_base.wrapping_add(trial as u64);
    let (v_star, spec) = match cfg.truth {
        TruthMode::Spiked => (spiked_truth(cfg.d, cfg.k, seed)?, None),
        TruthMode::StrongWeak { c, k1, k2 } => {
            let spec = StrongWeakSpec::random(c, k1, k2, cfg.d, seed)?;
            (build_strong_weak_truth(&spec, cfg.d)?, Some(spec))
        }
    };
    let x = sample_spiked(&SpikedModel::new(cfg.lambda, v_star.clone())?, cfg.n, seed)?;
    let (idx, sub) = submatrix_init(&covariance_from_samples(&x), cfg.k, cfg.d_bar, REDUCTION_ITERS, None)?;
    let xr = x.columns(&idx);
    let (v_spca, spca_value) = exact_sparse_pca(&sub, cfg.k)?;
    let opts = SolverOptions {
        node_limit: cfg.node_limit,
        time_limit_s: cfg.time_limit_s,
        mode: SearchMode::EnumerateSupports,
        seed,
        deterministic: cfg.deterministic,
        ..SolverOptions::default()
    };

    let mut rows = Vec::new();
    for &rho_bar in &cfg.rho_bar_grid {
        let rho = cfg.rho(rho_bar);
        let (spca_obj, _) = objective_dense(&xr, &v_spca.to_dense(), rho, cfg.perturb);
        let pp = ppm(&xr, cfg.k, rho, cfg.perturb, &PpmOptions::default(), Some(&v_spca))?;
        let warm = if pp.objective > spca_obj { &pp.v } else { &v_spca };
        let mut outs = Vec::new();
        for &m in &cfg.methods {
            outs.push(match m {
                Method::Spca => Outcome {
                    method: m,
                    v: v_spca.clone(),
                    objective: spca_obj,
                    ub: spca_value,
                    nodes: 0,
                    wall_ms: 0,
                    status: "Exact".into(),
                },
                Method::Ppm => Outcome {
                    method: m,
                    v: pp.v.clone(),
                    objective: pp.objective,
                    ub: f64::NAN,
                    nodes: 0,
                    wall_ms: 0,
                    status: if pp.degenerate {
                        "Degenerate"
                    } else if pp.stalled {
                        "Stalled"
                    } else if pp.converged {
                        "Converged"
                    } else {
                        "MaxIter"
                    }
                    .into(),
                },
                Method::Mip | Method::MipR => {
                    let (form, r) =
                        if m == Method::Mip { (Formulation::Full, None) } else { (Formulation::RankR, Some(cfg.r)) };
                    let model = build_model(&xr, cfg.perturb, form, cfg.k, rho, cfg.n_seg, r)?;
                    let rep = solve(&model, &opts, Some(warm))?;
                    Outcome {
                        method: m,
                        v: rep.incumbent.clone(),
                        objective: rep.lb,
                        ub: rep.ub,
                        nodes: rep.nodes,
                        wall_ms: rep.wall_ms,
                        status: format!("{:?}", rep.status),
                    }
                }
            });
        }
        let lb = outs.iter().map(|o| o.objective).fold(f64::NEG_INFINITY, f64::max);
        let mut best: Option<MetricsRow> = None;
        for o in &outs {
            let mt = compute_metrics(&embed(&o.v, &idx, cfg.d), &v_star, spec.as_ref(), lb, o.ub)?;
            let row = MetricsRow {
                trial,
                seed,
                rho_bar,
                rho,
                method: o.method.name().into(),
                objective: o.objective,
                lb,
                ub: o.ub,
                gap: if o.ub.is_nan() { f64::NAN } else { mt.gap },
                ang: mt.ang,
                ang_s: mt.ang_s,
                ang_w: mt.ang_w,
                rate_supp: mt.rate_supp,
                rate_s: mt.rate_s,
                rate_w: mt.rate_w,
                nodes: o.nodes,
                wall_ms: o.wall_ms,
                status: o.status.clone(),
            };
            if best.as_ref().is_none_or(|b| row.objective > b.objective) {
                best = Some(row.clone());
            }
            rows.push(row);
        }
        if let Some(mut b) = best {
            b.method = "best".into();
            rows.push(b);
        }
    }
    Ok(rows)
}

/// Runs every trial, on `cfg.threads` worker threads, and returns the rows
/// ordered by trial.
pub fn experiment_rows(cfg: &ExperimentConfig) -> Result<Vec<MetricsRow>> {
    cfg.validate()?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Vec<MetricsRow>>>>> = Mutex::new((0..cfg.trials).map(|_| None).collect());
    std::thread::scope(|sc| {
        for _ in 0..cfg.threads.min(cfg.trials) {
            sc.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= cfg.trials {
                    break;
                }
                let res = run_trial(cfg, t);
                slots.lock().expect("worker panicked")[t] = Some(res);
            });
        }
    });
    let mut rows = Vec::new();
    for slot in slots.into_inner().expect("worker panicked") {
        rows.extend(slot.expect("every trial ran")?);
    }
    Ok(rows)
}

/// Runs the sweep and writes the CSV to `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<MetricsRow>> {
    let rows = experiment_rows(cfg)?;
    fs::write(out, format_csv(&rows))?;
    Ok(rows)
}

/// Mean of `field` over rows of `method` at `rho_bar`.
pub fn mean_over_trials(rows: &[MetricsRow], method: &str, rho_bar: f64, field: impl Fn(&MetricsRow) -> f64) -> f64 {
    let sel: Vec<f64> = rows.iter().filter(|r| r.method == method && r.rho_bar == rho_bar).map(field).collect();
    if sel.is_empty() {
        return f64::NAN;
    }
    sel.iter().sum::<f64>() / sel.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(d: usize, sup: &[usize], vals: &[f64]) -> KSparseVector {
        KSparseVector::new(d, sup.to_vec(), vals.to_vec()).unwrap()
    }

    #[test]
    fn identical_vectors() {
        let v = sv(6, &[0, 2, 5], &[0.6, 0.0, -0.8]);
        let v = sv(6, &[0, 5], &[v.values[0], v.values[2]]);
        let m = compute_metrics(&v, &v, None, 1.0, 1.1).unwrap();
        assert!((m.ang - 1.0).abs() < 1e-15);
        assert_eq!(m.rate_supp, 1.0);
        assert!((m.gap - 0.1).abs() < 1e-12);
        assert!(m.ang_w_undefined && m.ang_w == 0.0);
    }

    #[test]
    fn support_rate_two_of_three() {
        let s = 3f64.sqrt().recip();
        let vs = sv(6, &[1, 2, 3], &[s, s, s]);
        let vh = sv(6, &[1, 2, 4], &[s, s, s]);
        let m = compute_metrics(&vh, &vs, None, 1.0, 1.0).unwrap();
        assert!((m.rate_supp - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.ang - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn strong_weak_split_and_gap_sentinel() {
        let spec = StrongWeakSpec::new(0.8, vec![0], vec![1, 2, 3, 4]).unwrap();
        let vs = build_strong_weak_truth(&spec, 8).unwrap();
        let vh = sv(8, &[0], &[1.0]);
        let m = compute_metrics(&vh, &vs, Some(&spec), 0.0, 1.0).unwrap();
        assert_eq!(m.gap, f64::INFINITY);
        assert!((m.ang_s - 1.0).abs() < 1e-15 && !m.ang_s_undefined);
        assert!(m.ang_w_undefined && m.ang_w == 0.0);
        assert!((m.ang - 0.8f64.sqrt()).abs() < 1e-12);
        assert_eq!((m.rate_s, m.rate_w), (1.0, 0.0));
    }

    #[test]
    fn config_grammar() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nd = 20\nn = 100 # samples\nk = 3\nd_bar = 8\ntruth = strongweak\nc = 0.8\nk1 = 1\nk2 = 2\n\
             rho_bar = 0, 0.5,1\nmethods = PPM, spca\nperturb = samplewise\ndeterministic = true\n",
        )
        .unwrap();
        assert_eq!(cfg.rho_bar_grid, vec![0.0, 0.5, 1.0]);
        assert_eq!(cfg.methods, vec![Method::Ppm, Method::Spca]);
        assert_eq!(cfg.truth, TruthMode::StrongWeak { c: 0.8, k1: 1, k2: 2 });
        assert_eq!(cfg.perturb, PerturbKind::Samplewise);
        assert!(cfg.deterministic);
        assert!((cfg.rho(1.0) - (100f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn config_errors() {
        for bad in [
            "bogus = 1",
            "k = 1\nk = 2",
            "d = ten",
            "no equals sign",
            "k = 20\nd_bar = 15",
            "trials = 0",
            "truth = strongweak\nc = 0.5",
            "c = 0.5",
            "methods = MIP, LASSO",
            "rho_bar = 1, -1",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn csv_layout() {
        let row = MetricsRow {
            trial: 0,
            seed: 7,
            rho_bar: 0.5,
            rho: 1.0 / 3.0,
            method: "PPM".into(),
            objective: 1.0,
            lb: 1.0,
            ub: f64::NAN,
            gap: f64::INFINITY,
            ang: 1.0,
            ang_s: 1.0,
            ang_w: 0.0,
            rate_supp: 1.0,
            rate_s: 1.0,
            rate_w: 0.0,
            nodes: 0,
            wall_ms: 0,
            status: "Converged".into(),
        };
        let csv = format_csv(&[row]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let line = lines.next().unwrap();
        assert!(line.starts_with("0,7,5.00000000e-1,3.33333333e-1,PPM,1.00000000e0,"), "{line}");
        assert!(line.contains(",nan,inf,"));
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
    }

    #[test]
    fn ppm_smoke_run_recovers_an_easy_spike() {
        let cfg = ExperimentConfig {
            d: 30,
            trials: 1,
            methods: vec![Method::Ppm],
            rho_bar_grid: vec![0.0],
            ..ExperimentConfig::default()
        };
        let rows = experiment_rows(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].method, "best");
        assert!(rows[0].ang > 0.95, "{rows:?}");
        assert_eq!(format_csv(&rows), format_csv(&experiment_rows(&cfg).unwrap()));
    }
}
