//! Numerical self-checks of the identities the solvers rely on, evaluated
//! on small random problems against a direct `m × m` computation.
//!
//! The posterior side comes from [`crate::sdrvm::posterior`]; the reference
//! side forms `C = B⁻¹ + AΓ⁻¹Aᵀ` explicitly and factors it with nalgebra's
//! LU, so the two share no code beyond matrix storage.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::experiments::rng::{normal, stream};
use crate::sdrvm::posterior;
use crate::types::{LinearSystem, PrecisionState};

/// The checked identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Identity {
    /// `∂/∂γ_i yᵀC⁻¹y = x̂_i²`, by central differences.
    GammaDerivative,
    /// `∂/∂β_j yᵀC⁻¹y = (y − Ax̂)_j²`, by central differences.
    BetaDerivative,
    /// `log det C = log det Σ⁻¹ − Σ log γ_i − Σ log β_j`.
    DeterminantLemma,
    /// `Γ⁻¹AᵀC⁻¹y = x̂`.
    PosteriorMean,
    /// `A_Iᵀ C⁻¹ y = γ_I x̂_I` for every block `I` of a partition with
    /// block-constant precisions.
    BlockPosteriorMean,
}

impl Identity {
    pub const ALL: [Identity; 5] = [
        Identity::GammaDerivative,
        Identity::BetaDerivative,
        Identity::DeterminantLemma,
        Identity::PosteriorMean,
        Identity::BlockPosteriorMean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::GammaDerivative => "gamma-derivative",
            Identity::BetaDerivative => "beta-derivative",
            Identity::DeterminantLemma => "determinant-lemma",
            Identity::PosteriorMean => "posterior-mean",
            Identity::BlockPosteriorMean => "block-posterior-mean",
        }
    }

    /// Finite-difference checks get a looser bound than exact algebra.
    pub fn tolerance(self) -> f64 {
        match self {
            Identity::GammaDerivative | Identity::BetaDerivative => 1e-5,
            _ => 1e-9,
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Identity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Identity::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown identity '{s}'")))
    }
}

/// Worst error seen for one identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub identity: Identity,
    pub max_error: f64,
    pub tolerance: f64,
    pub instances: usize,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

/// A random instance with `m, n ≤ 8` and precisions log-uniform in
/// `[0.1, 10]`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub system: LinearSystem,
    pub state: PrecisionState,
}

fn log_uniform(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.random_range(-1.0..1.0))
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let m = rng.random_range(1..=8);
    let n = rng.random_range(1..=8);
    let a = DMatrix::from_fn(m, n, |_, _| normal(rng));
    let y = DVector::from_fn(m, |_, _| normal(rng));
    let gamma = DVector::from_fn(n, |_, _| log_uniform(rng));
    let beta = DVector::from_fn(m, |_, _| log_uniform(rng));
    Instance {
        system: LinearSystem::new(a, y).expect("random instance is well formed"),
        state: PrecisionState::componentwise(gamma, beta),
    }
}

/// `C = B⁻¹ + AΓ⁻¹Aᵀ` formed explicitly.
pub fn marginal_covariance(system: &LinearSystem, gamma: &DVector<f64>, beta: &DVector<f64>) -> DMatrix<f64> {
    let a = system.a();
    let mut scaled = a.clone();
    for (i, mut col) in scaled.column_iter_mut().enumerate() {
        col /= gamma[i];
    }
    let mut c = &scaled * a.transpose();
    for j in 0..system.m() {
        c[(j, j)] += 1.0 / beta[j];
    }
    c
}

/// `C⁻¹y` and `yᵀC⁻¹y` by LU.
fn solve_marginal(system: &LinearSystem, gamma: &DVector<f64>, beta: &DVector<f64>) -> (DVector<f64>, f64) {
    let c = marginal_covariance(system, gamma, beta);
    let z = c.lu().solve(system.y()).expect("marginal covariance is nonsingular");
    let q = system.y().dot(&z);
    (z, q)
}

fn quad(system: &LinearSystem, gamma: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    solve_marginal(system, gamma, beta).1
}

/// Central difference along one precision, with a step proportional to
/// its value.
fn central_difference<F>(v: &DVector<f64>, i: usize, f: F) -> f64
where
    F: Fn(&DVector<f64>) -> f64,
{
    let h = 1e-4;
    let mut up = v.clone();
    let mut down = v.clone();
    up[i] = v[i] * (1.0 + h);
    down[i] = v[i] * (1.0 - h);
    (f(&up) - f(&down)) / (2.0 * h * v[i])
}

/// Largest entrywise mismatch, relative to the largest reference entry
/// (at least one).
fn scaled_error(reference: &DVector<f64>, value: &DVector<f64>) -> f64 {
    let scale = reference.amax().max(1.0);
    (reference - value).amax() / scale
}

/// Shifts the first entry by `1e-3` of the vector's scale.
fn nudge(mut v: DVector<f64>, on: bool) -> DVector<f64> {
    if on {
        v[0] += 1e-3 * v.amax().max(1.0);
    }
    v
}

/// Error of one identity on one instance. `perturb` shifts the library side
/// by a relative `1e-3`, as a hook for testing the checker itself.
pub fn check(identity: Identity, inst: &Instance, rng: &mut ChaCha8Rng, perturb: bool) -> Result<f64> {
    let s = &inst.system;
    let (gamma, beta) = (&inst.state.gamma, &inst.state.beta);
    let post = posterior(s, &inst.state)?;
    match identity {
        Identity::GammaDerivative => {
            let fd = DVector::from_fn(s.n(), |i, _| central_difference(gamma, i, |g| quad(s, g, beta)));
            let an = nudge(post.x_hat.map(|x| x * x), perturb);
            Ok(scaled_error(&fd, &an))
        }
        Identity::BetaDerivative => {
            let fd = DVector::from_fn(s.m(), |j, _| central_difference(beta, j, |b| quad(s, gamma, b)));
            let an = nudge(post.residual(s).map(|r| r * r), perturb);
            Ok(scaled_error(&fd, &an))
        }
        Identity::DeterminantLemma => {
            let direct = marginal_covariance(s, gamma, beta).lu().determinant().ln();
            let mut lemma = post.log_det_precision
                - gamma.iter().map(|g| g.ln()).sum::<f64>()
                - beta.iter().map(|b| b.ln()).sum::<f64>();
            if perturb {
                lemma += 1e-3 * lemma.abs().max(1.0);
            }
            Ok((direct - lemma).abs() / direct.abs().max(1.0))
        }
        Identity::PosteriorMean => {
            let (z, _) = solve_marginal(s, gamma, beta);
            let lhs = (s.a().transpose() * z).component_div(gamma);
            Ok(scaled_error(&lhs, &nudge(post.x_hat.clone(), perturb)))
        }
        Identity::BlockPosteriorMean => {
            // random contiguous partition with one precision per block
            let n = s.n();
            let mut g = gamma.clone();
            let mut blocks = Vec::new();
            let mut start = 0;
            while start < n {
                let len = rng.random_range(1..=(n - start).min(3));
                let v = log_uniform(rng);
                for i in start..start + len {
                    g[i] = v;
                }
                blocks.push(start..start + len);
                start += len;
            }
            let state = PrecisionState::componentwise(g.clone(), beta.clone());
            let post = posterior(s, &state)?;
            let (z, _) = solve_marginal(s, &g, beta);
            let atz = s.a().transpose() * z;
            let mut worst = 0.0f64;
            for (k, b) in blocks.into_iter().enumerate() {
                let lhs = atz.rows(b.start, b.len()).into_owned();
                let rhs = nudge(post.x_hat.rows(b.start, b.len()) * g[b.start], perturb && k == 0);
                worst = worst.max(scaled_error(&lhs, &rhs));
            }
            Ok(worst)
        }
    }
}

/// Runs every identity on `trials` instances drawn from `seed`.
pub fn run_selfcheck(trials: usize, seed: u64, perturb: Option<Identity>) -> Result<Vec<CheckOutcome>> {
    Identity::ALL
        .iter()
        .enumerate()
        .map(|(k, &id)| {
            let mut rng = stream(seed, k as u64);
            let mut worst = 0.0f64;
            for _ in 0..trials {
                let inst = random_instance(&mut rng);
                let e = check(id, &inst, &mut rng, perturb == Some(id))?;
                worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
            }
            Ok(CheckOutcome {
                identity: id,
                max_error: worst,
                tolerance: id.tolerance(),
                instances: trials,
            })
        })
        .collect()
}
