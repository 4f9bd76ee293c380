use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BlockLayout, FitOptions, HyperPriors, LinearSystem};
use crate::{baselines, block, sdrvm};

/// Solvers the harnesses know how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Standard RVM, one shared noise precision.
    Rvm,
    /// Robust RVM on `[A I_m]`.
    RbRvm,
    /// Componentwise combined-noise RVM.
    SdRvm,
    /// Per-measurement precisions overlapped with one dense-noise block.
    SdRvmSparseDense,
    /// Known disjoint blocks.
    SdRvmBlock,
    /// Overlapping candidate blocks.
    SdRvmOverlap,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Rvm,
        Method::RbRvm,
        Method::SdRvm,
        Method::SdRvmSparseDense,
        Method::SdRvmBlock,
        Method::SdRvmOverlap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rvm => "rvm",
            Method::RbRvm => "rbrvm",
            Method::SdRvm => "sdrvm",
            Method::SdRvmSparseDense => "sdrvm-sd",
            Method::SdRvmBlock => "sdrvm-block",
            Method::SdRvmOverlap => "sdrvm-overlap",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Method::from_str)
        .collect()
}

/// Block layouts handed to the block-aware methods.
#[derive(Debug, Clone, Default)]
pub struct Layouts {
    pub signal: Option<BlockLayout>,
    pub noise: Option<BlockLayout>,
}

/// Estimate returned by one solver run.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub x_hat: DVector<f64>,
    pub iterations: usize,
    pub seconds: f64,
    pub iteration_seconds: Vec<f64>,
}

/// Anything that turns a measurement system into a signal estimate.
///
/// The sweeps accept external implementations as well, which is how
/// solutions computed elsewhere (a convex solver, say) can be scored
/// alongside the built-in methods.
pub trait Estimator: Sync {
    fn name(&self) -> String;
    fn estimate(&self, system: &LinearSystem, layouts: &Layouts) -> Result<Estimate>;
}

/// A built-in method with fixed priors and options.
#[derive(Debug, Clone, Copy)]
pub struct Solver {
    pub method: Method,
    pub priors: HyperPriors,
    pub opts: FitOptions,
}

impl Solver {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            priors: HyperPriors::default(),
            opts: FitOptions::default(),
        }
    }
}

fn need<'a>(l: &'a Option<BlockLayout>, what: &str) -> Result<&'a BlockLayout> {
    l.as_ref()
        .ok_or_else(|| Error::InvalidConfig(format!("method needs a {what} block layout")))
}

impl Estimator for Solver {
    fn name(&self) -> String {
        self.method.name().to_string()
    }

    fn estimate(&self, system: &LinearSystem, layouts: &Layouts) -> Result<Estimate> {
        let (p, o) = (&self.priors, &self.opts);
        let (x_hat, report) = match self.method {
            Method::Rvm => {
                let f = baselines::fit_rvm(system, p, o)?;
                (f.posterior.x_hat, f.report)
            }
            Method::RbRvm => {
                let f = baselines::fit_rbrvm(system, p, o)?;
                (f.posterior.x_hat, f.report)
            }
            Method::SdRvm => {
                let f = sdrvm::fit_sdrvm(system, p, o)?;
                (f.posterior.x_hat, f.report)
            }
            Method::SdRvmSparseDense => {
                let f = block::fit_sdrvm_sparse_dense(system, p, o)?;
                (f.posterior.x_hat, f.report)
            }
            Method::SdRvmBlock => {
                let f = block::fit_sdrvm_blocks(
                    system,
                    need(&layouts.signal, "signal")?,
                    need(&layouts.noise, "noise")?,
                    p,
                    o,
                )?;
                (f.posterior.x_hat, f.report)
            }
            Method::SdRvmOverlap => {
                let f = block::fit_sdrvm_overlap(
                    system,
                    need(&layouts.signal, "signal")?,
                    need(&layouts.noise, "noise")?,
                    p,
                    o,
                )?;
                (f.posterior.x_hat, f.report)
            }
        };
        Ok(Estimate {
            x_hat,
            iterations: report.iterations,
            seconds: report.elapsed_seconds,
            iteration_seconds: report.iteration_seconds,
        })
    }
}
