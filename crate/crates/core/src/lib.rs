//! Sparse Bayesian learning for linear models `y = Ax + e + n` whose noise is
//! a mix of sparse outliers `e` and dense Gaussian noise `n`.
//!
//! The main solver ([`fit_sdrvm`]) folds both noises into one Gaussian with a
//! per-measurement precision, so the outliers are absorbed by the noise model
//! instead of being estimated. Block-structured variants live in [`block`],
//! reference solvers in [`baselines`], and the benchmark harnesses in
//! [`experiments`].

pub mod baselines;
pub mod block;
pub mod cli;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod sdrvm;
pub mod selfcheck;
pub mod types;

pub use baselines::{fit_rbrvm, fit_rvm, AugmentedPosterior, RobustFit};
pub use block::{fit_sdrvm_blocks, fit_sdrvm_overlap, fit_sdrvm_sparse_dense, BlockPrecisionMaps};
pub use engine::FitResult;
pub use error::{Error, Result};
pub use linalg::{spd_solve, SpdFactor, SpdSolution};
pub use sdrvm::{evidence, fit_sdrvm, nonsymmetric_cost, posterior, update_beta, update_gamma};
pub use types::{
    validate, BlockLayout, FitOptions, FitReport, HyperPriors, LayoutKind, LinearSystem,
    Posterior, PrecisionState,
};
