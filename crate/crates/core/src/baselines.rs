//! Reference solvers: the standard RVM with one shared noise precision, and
//! the robust RVM that appends an identity dictionary for the sparse noise
//! and estimates it explicitly.

use nalgebra::{DMatrix, DVector};

use crate::engine::{self, next_precision, FitResult};
use crate::error::{Error, Result};
use crate::sdrvm::update_gamma;
use crate::types::{
    initial_noise_precision, is_pruned, BlockLayout, FitOptions, FitReport, HyperPriors,
    LinearSystem, Posterior, PrecisionState,
};

/// Scalar noise step of the standard RVM:
/// `β ← (m − k + Σ_i γ_i Σ_ii + 2c) / (‖y − Ax̂‖² + 2d)` with `k` active columns.
pub fn update_scalar_beta(
    system: &LinearSystem,
    state: &PrecisionState,
    post: &Posterior,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> PrecisionState {
    let mut next = state.clone();
    let b = state.beta[0];
    if is_pruned(b) {
        return next;
    }
    let well_determined: f64 = post
        .active
        .iter()
        .enumerate()
        .map(|(p, &i)| state.gamma[i] * post.sigma[(p, p)])
        .sum();
    let num = system.m() as f64 - post.active.len() as f64 + well_determined + 2.0 * priors.c;
    let den = post.residual(system).norm_squared() + 2.0 * priors.d;
    next.beta[0] = next_precision(num, den, priors.d, opts);
    next
}

/// `γ = 1`, scalar `β = m/‖y‖²`.
pub fn rvm_initial(system: &LinearSystem) -> PrecisionState {
    PrecisionState::componentwise(
        DVector::from_element(system.n(), 1.0),
        DVector::from_element(1, initial_noise_precision(system)),
    )
}

pub fn fit_rvm(system: &LinearSystem, priors: &HyperPriors, opts: &FitOptions) -> Result<FitResult> {
    fit_rvm_from(system, rvm_initial(system), priors, opts)
}

pub fn fit_rvm_from(
    system: &LinearSystem,
    init: PrecisionState,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> Result<FitResult> {
    if init.beta.len() != 1 {
        return Err(Error::DimensionMismatch(
            "the standard RVM carries a single noise precision".into(),
        ));
    }
    crate::types::validate(
        system,
        &BlockLayout::singletons(system.n()),
        &BlockLayout::singletons(system.m()),
        &init,
    )?;
    engine::run_fixed_point(system, init, priors, opts, |state, post| {
        let mut next = update_gamma(state, post, priors, opts);
        next.beta = update_scalar_beta(system, state, post, priors, opts).beta;
        next
    })
}

/// Joint estimate of signal and sparse noise on `[A I_m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPosterior {
    pub x_hat: DVector<f64>,
    pub e_hat: DVector<f64>,
    /// Covariance over the active augmented columns.
    pub sigma_rb: DMatrix<f64>,
    /// Active augmented column indices; `n + j` is noise coordinate `j`.
    pub active: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RobustFit {
    pub posterior: AugmentedPosterior,
    /// Precisions on the augmented system: `gamma[..n]` for the signal,
    /// `gamma[n..]` for the sparse noise, scalar `beta`.
    pub state: PrecisionState,
    pub report: FitReport,
}

impl RobustFit {
    pub fn nu(&self, n: usize) -> DVector<f64> {
        self.state.gamma.rows(n, self.state.gamma.len() - n).into_owned()
    }
}

/// Starting state on the augmented system: `γ = ν = 1`, `β = m/‖y‖²`.
pub fn rbrvm_initial(system: &LinearSystem) -> PrecisionState {
    let mut s = rvm_initial(&system.augmented());
    s.beta[0] = initial_noise_precision(system);
    s
}

pub fn fit_rbrvm(system: &LinearSystem, priors: &HyperPriors, opts: &FitOptions) -> Result<RobustFit> {
    fit_rbrvm_from(system, rbrvm_initial(system), priors, opts)
}

/// Runs the standard RVM on `([A I_m], y)` from `init` and splits the
/// augmented estimate into `x̂` and `ê`.
pub fn fit_rbrvm_from(
    system: &LinearSystem,
    init: PrecisionState,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> Result<RobustFit> {
    let n = system.n();
    let m = system.m();
    let aug = system.augmented();
    let fit = fit_rvm_from(&aug, init, priors, opts)?;
    let z = &fit.posterior.x_hat;
    Ok(RobustFit {
        posterior: AugmentedPosterior {
            x_hat: z.rows(0, n).into_owned(),
            e_hat: z.rows(n, m).into_owned(),
            sigma_rb: fit.posterior.sigma.clone(),
            active: fit.posterior.active.clone(),
        },
        state: fit.state,
        report: fit.report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::PRUNED;

    #[test]
    fn null_data() {
        let sys = LinearSystem::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.2, 1.0, 0.3, 0.1]),
            DVector::zeros(3),
        )
        .unwrap();
        let fit = fit_rbrvm(&sys, &HyperPriors::default(), &FitOptions::default()).unwrap();
        assert!(fit.posterior.x_hat.iter().all(|&v| v == 0.0));
        assert!(fit.posterior.e_hat.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rvm_rejects_vector_beta() {
        let sys = LinearSystem::new(DMatrix::identity(2, 2), DVector::from_element(2, 1.0)).unwrap();
        let init = PrecisionState::initial(&sys);
        assert!(fit_rvm_from(&sys, init, &HyperPriors::default(), &FitOptions::default()).is_err());
    }

    #[test]
    fn scalar_beta_uses_active_count() {
        let sys = LinearSystem::new(
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
            DVector::from_row_slice(&[1.0, 2.0, 3.5]),
        )
        .unwrap();
        let st = PrecisionState::componentwise(
            DVector::from_row_slice(&[1.0, PRUNED]),
            DVector::from_element(1, 2.0),
        );
        let post = crate::sdrvm::posterior(&sys, &st).unwrap();
        let opts = FitOptions {
            denom_floor: 0.0,
            ..Default::default()
        };
        let next = update_scalar_beta(&sys, &st, &post, &HyperPriors::default(), &opts);
        let g_sigma = st.gamma[0] * post.sigma[(0, 0)];
        let r = post.residual(&sys).norm_squared();
        assert!((next.beta[0] - (3.0 - 1.0 + g_sigma) / r).abs() < 1e-12);
    }
}
