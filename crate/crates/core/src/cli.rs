//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 the solver hit a
//! node or time limit (the report is still written).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bnb::oracle::brute_force_oracle;
use crate::bnb::{solve, SearchMode, SolverOptions};
use crate::error::{Error, Result};
use crate::harness::{run_experiment, ExperimentConfig};
use crate::heuristics::{ppm, PpmInit, PpmOptions};
use crate::linalg::SampleMatrix;
use crate::micp::{build_model, Formulation};
use crate::perturb::PerturbKind;
use crate::statgen::{
    build_strong_weak_truth, recovery_threshold, sample_spiked, spiked_truth, stage_thresholds, SpikedModel,
    StrongWeakSpec, ThresholdQuery,
};
use crate::textio::{format_sample_matrix, format_truth, read_sample_matrix, write_text};

pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "robust-spca", version, about = "Sparse PCA under adversarial perturbation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Perturb {
    Samplewise,
    Featurewise,
}

impl From<Perturb> for PerturbKind {
    fn from(p: Perturb) -> Self {
        match p {
            Perturb::Samplewise => PerturbKind::Samplewise,
            Perturb::Featurewise => PerturbKind::Featurewise,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Truth {
    Spiked,
    Strongweak,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Form {
    Full,
    Rankr,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Enumerate,
    Branch,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Init {
    Spca,
    Random,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Draw a spiked sample matrix and its planted direction.
    Gen {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// Support size of a spiked truth (strong/weak uses k1 + k2).
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Truth::Spiked)]
        truth: Truth,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        k1: Option<usize>,
        #[arg(long)]
        k2: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth_out: PathBuf,
    },
    /// Branch-and-bound on the mixed-integer model; writes a JSON report.
    Solve {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        perturb: Perturb,
        #[arg(long, value_enum, default_value_t = Form::Full)]
        formulation: Form,
        #[arg(long)]
        r: Option<usize>,
        /// Number of linear pieces on [0, 1].
        #[arg(long = "N", default_value_t = 10)]
        n_seg: usize,
        #[arg(long, value_enum, default_value_t = Mode::Enumerate)]
        mode: Mode,
        #[arg(long, default_value_t = 1800.0)]
        time_limit: f64,
        #[arg(long, default_value_t = 1_000_000)]
        node_limit: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Omit wall-clock data and ignore the time limit.
        #[arg(long)]
        deterministic: bool,
        #[arg(long)]
        report: PathBuf,
    },
    /// Exhaustive search of the exact objective (d <= 8).
    Oracle {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum)]
        perturb: Perturb,
        #[arg(long, default_value_t = 1e-3)]
        resolution: f64,
    },
    /// Projected power method.
    Ppm {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = Perturb::Featurewise)]
        perturb: Perturb,
        #[arg(long, value_enum, default_value_t = Init::Spca)]
        init: Init,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Population radius thresholds.
    Thresholds {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        k1: Option<usize>,
        #[arg(long)]
        k2: Option<usize>,
    },
    /// Synthetic sweep described by a config file; writes CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args, Debug)]
struct DataArgs {
    /// Sample matrix file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    k: usize,
    /// Subtract column means before solving.
    #[arg(long)]
    center: bool,
}

impl DataArgs {
    fn load(&self) -> Result<SampleMatrix> {
        let x = read_sample_matrix(&self.input)?;
        Ok(if self.center { x.centered() } else { x })
    }
}

fn missing(what: &str) -> Error {
    Error::InvalidParameter(format!("missing {what}"))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { 0 };
        }
    };
    match execute(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_INVALID,
            }
        }
    }
}

fn execute(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Gen { d, n, k, lambda, seed, truth, c, k1, k2, out, truth_out } => {
            let v = match truth {
                Truth::Spiked => spiked_truth(d, k.ok_or_else(|| missing("--k"))?, seed)?,
                Truth::Strongweak => {
                    let spec = StrongWeakSpec::random(
                        c.ok_or_else(|| missing("--c"))?,
                        k1.ok_or_else(|| missing("--k1"))?,
                        k2.ok_or_else(|| missing("--k2"))?,
                        d,
                        seed,
                    )?;
                    build_strong_weak_truth(&spec, d)?
                }
            };
            let x = sample_spiked(&SpikedModel::new(lambda, v.clone())?, n, seed)?;
            write_text(&out, &format_sample_matrix(&x))?;
            write_text(&truth_out, &format_truth(&v))?;
            Ok(0)
        }
        Cmd::Solve {
            data,
            perturb,
            formulation,
            r,
            n_seg,
            mode,
            time_limit,
            node_limit,
            seed,
            deterministic,
            report,
        } => {
            let x = data.load()?;
            let form = match formulation {
                Form::Full => Formulation::Full,
                Form::Rankr => Formulation::RankR,
            };
            let model = build_model(&x, perturb.into(), form, data.k, data.rho, n_seg, r)?;
            let opts = SolverOptions {
                time_limit_s: time_limit,
                node_limit,
                seed,
                deterministic,
                mode: match mode {
                    Mode::Enumerate => SearchMode::EnumerateSupports,
                    Mode::Branch => SearchMode::BranchBinaries,
                },
                ..SolverOptions::default()
            };
            let rep = solve(&model, &opts, None)?;
            write_text(&report, &rep.to_json()?)?;
            println!("status {:?} lb {:.9e} ub {:.9e} nodes {}", rep.status, rep.lb, rep.ub, rep.nodes);
            Ok(if rep.status.hit_limit() { EXIT_LIMIT } else { 0 })
        }
        Cmd::Oracle { data, perturb, resolution } => {
            let x = data.load()?;
            let (value, v) = brute_force_oracle(&x, data.k, data.rho, perturb.into(), resolution)?;
            let out = json!({ "value": value, "support": v.support, "values": v.values });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
        Cmd::Ppm { data, perturb, init, seed, max_iter, tol } => {
            let x = data.load()?;
            let init = match init {
                Init::Spca => PpmInit::FromSpca,
                Init::Random => PpmInit::Random(seed),
            };
            let res = ppm(&x, data.k, data.rho, perturb.into(), &PpmOptions { max_iter, tol, init }, None)?;
            let out = json!({
                "objective": res.objective,
                "feasible": res.feasible,
                "iterations": res.iterations,
                "converged": res.converged,
                "degenerate": res.degenerate,
                "stalled": res.stalled,
                "support": res.v.support,
                "values": res.v.values,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
        Cmd::Thresholds { lambda, n, k, delta, c, k1, k2 } => {
            let out = match (k, delta, c, k1, k2) {
                (Some(k), Some(delta), None, None, None) => {
                    json!({ "recovery_threshold": recovery_threshold(&ThresholdQuery { delta, lambda, n, k })? })
                }
                (None, None, Some(c), Some(k1), Some(k2)) => {
                    let t = stage_thresholds(lambda, n, c, k1, k2)?;
                    json!({
                        "robust_lower": t.robust_lower,
                        "robust_upper": t.robust_upper,
                        "window_nonempty": t.window_nonempty(),
                    })
                }
                _ => return Err(Error::InvalidParameter("give either --k and --delta, or --c, --k1 and --k2".into())),
            };
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(0)
        }
        Cmd::Experiment { config, out } => {
            let cfg = ExperimentConfig::parse(&std::fs::read_to_string(&config)?)?;
            let rows = run_experiment(&cfg, &out)?;
            let limited = rows.iter().filter(|r| r.status == "NodeLimit" || r.status == "TimeLimit").count();
            println!("{} rows written to {}", rows.len(), out.display());
            Ok(if limited > 0 { EXIT_LIMIT } else { 0 })
        }
    }
}
