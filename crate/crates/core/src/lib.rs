//! Sparse principal component analysis when an adversary may perturb the
//! data matrix within a norm ball before the variance is measured.
//!
//! * [`perturb`]: the robust objectives and their closed-form inner minimizers
//!   for sample-wise and feature-wise budgets.
//! * [`plu`], [`micp`]: the piecewise-linear upper model of `g^2` and the
//!   mixed-integer formulations built on it.
//! * [`bnb`]: a branch-and-bound solver returning certified bounds, plus a
//!   brute-force oracle for small instances.
//! * [`heuristics`]: projected power method, truncated power method and the
//!   submatrix reduction.
//! * [`statgen`]: spiked data, population objectives and stage thresholds.
//! * [`harness`], [`textio`], [`cli`]: experiments, file formats and the
//!   command-line tool.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bnb;
pub mod cli;
pub mod error;
pub mod harness;
pub mod heuristics;
pub mod linalg;
pub mod micp;
pub mod perturb;
pub mod plu;
pub mod statgen;
pub mod textio;
