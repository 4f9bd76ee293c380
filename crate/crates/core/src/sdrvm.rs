//! Componentwise solver for combined sparse and dense noise.
//!
//! The noise `e + n` is modelled as one Gaussian with a diagonal precision
//! `B = diag(β)`, one precision per measurement, so the sparse noise never has
//! to be estimated explicitly. Each iteration computes the posterior, then
//!
//! ```text
//! γ_i ← (1 − γ_i Σ_ii + 2a) / (x̂_i² + 2b)
//! β_j ← (1 − β_j [AΣAᵀ]_jj + 2c) / ([y − Ax̂]_j² + 2d)
//! ```
//!
//! both from the same posterior.

use nalgebra::{DMatrix, DVector};

use crate::engine::{self, next_precision, FitResult};
use crate::error::Result;
use crate::types::{
    is_pruned, BlockLayout, FitOptions, HyperPriors, LinearSystem, Posterior, PrecisionState,
};

/// Posterior mean and covariance for fixed precisions.
///
/// Pruned noise precisions enter at the default prune threshold.
pub fn posterior(system: &LinearSystem, state: &PrecisionState) -> Result<Posterior> {
    engine::posterior_capped(system, state, FitOptions::default().prune_threshold)
}

/// One signal-precision step. Pruned coordinates are left alone.
pub fn update_gamma(
    state: &PrecisionState,
    post: &Posterior,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> PrecisionState {
    let mut next = state.clone();
    for (p, &i) in post.active.iter().enumerate() {
        let g = state.gamma[i];
        let x = post.x_hat[i];
        let num = 1.0 - g * post.sigma[(p, p)] + 2.0 * priors.a;
        let den = x * x + 2.0 * priors.b;
        next.gamma[i] = next_precision(num, den, priors.b, opts);
    }
    next
}

/// One noise-precision step, using the same posterior as [`update_gamma`].
pub fn update_beta(
    system: &LinearSystem,
    state: &PrecisionState,
    post: &Posterior,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> PrecisionState {
    let mut next = state.clone();
    let h = post.a_sigma_at_diag(system);
    let r = post.residual(system);
    for j in 0..system.m() {
        let b = state.beta[j];
        if is_pruned(b) {
            continue;
        }
        let num = 1.0 - b * h[j] + 2.0 * priors.c;
        let den = r[j] * r[j] + 2.0 * priors.d;
        next.beta[j] = next_precision(num, den, priors.d, opts);
    }
    next
}

/// Log evidence `log p(y, γ, β)`, with the constant `−(m/2) log 2π`.
pub fn evidence(
    system: &LinearSystem,
    state: &PrecisionState,
    priors: &HyperPriors,
) -> Result<f64> {
    let cap = FitOptions::default().prune_threshold;
    let post = engine::posterior_capped(system, state, cap)?;
    Ok(engine::evidence_from(system, state, &post, priors, cap))
}

/// Fits from the default initialization (`γ = 1`, `β = m/‖y‖²`).
pub fn fit_sdrvm(
    system: &LinearSystem,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_sdrvm_from(system, PrecisionState::initial(system), priors, opts)
}

/// Fits from a caller-supplied starting state.
pub fn fit_sdrvm_from(
    system: &LinearSystem,
    init: PrecisionState,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> Result<FitResult> {
    crate::types::validate(
        system,
        &BlockLayout::singletons(system.n()),
        &BlockLayout::singletons(system.m()),
        &init,
    )?;
    engine::run_fixed_point(system, init, priors, opts, |state, post| {
        let mut next = update_gamma(state, post, priors, opts);
        next.beta = update_beta(system, state, post, priors, opts).beta;
        next
    })
}

/// The log-sum surrogate minimized by one iteration:
///
/// ```text
/// (1+2a) Σ_i log(x̂_i² + Σᵒˡᵈ_ii + 2b) + (1+2c) Σ_j log(ẽ_j² + [AΣᵒˡᵈAᵀ]_jj + 2d)
/// ```
///
/// with `ẽ = y − Ax̂`. `prev_sigma` is the full `n × n` covariance of the
/// previous iteration. Terms whose argument is exactly zero (pruned
/// coordinates under zero rate constants) are left out.
pub fn nonsymmetric_cost(
    system: &LinearSystem,
    post: &Posterior,
    prev_sigma: &DMatrix<f64>,
    priors: &HyperPriors,
) -> f64 {
    let a = system.a();
    let resid: DVector<f64> = post.residual(system);
    let g = a * prev_sigma;
    let mut signal = 0.0;
    for i in 0..system.n() {
        let arg = post.x_hat[i].powi(2) + prev_sigma[(i, i)] + 2.0 * priors.b;
        if arg > 0.0 {
            signal += arg.ln();
        }
    }
    let mut noise = 0.0;
    for j in 0..system.m() {
        let h = g.row(j).dot(&a.row(j));
        let arg = resid[j].powi(2) + h + 2.0 * priors.d;
        if arg > 0.0 {
            noise += arg.ln();
        }
    }
    (1.0 + 2.0 * priors.a) * signal + (1.0 + 2.0 * priors.c) * noise
}
