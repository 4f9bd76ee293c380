//! Machinery shared by every RVM variant: the Gaussian posterior over the
//! active columns, the log evidence, and the fixed-point driver.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::SpdFactor;
use crate::types::{
    is_pruned, FitOptions, FitReport, HyperPriors, LinearSystem, Posterior, PrecisionState,
    MIN_PRECISION, PRUNED,
};

/// Outcome of a fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub posterior: Posterior,
    pub state: PrecisionState,
    pub report: FitReport,
}

/// Noise precisions as they enter the posterior: pruned (noiseless)
/// measurements are held at `cap`.
pub(crate) fn effective_noise(state: &PrecisionState, m: usize, cap: f64) -> DVector<f64> {
    DVector::from_iterator(m, (0..m).map(|j| state.beta_at(j).min(cap)))
}

/// Posterior over the columns whose precision is finite.
pub(crate) fn posterior_capped(
    system: &LinearSystem,
    state: &PrecisionState,
    cap: f64,
) -> Result<Posterior> {
    let n = system.n();
    let active = state.active_signal();
    if active.is_empty() {
        return Ok(Posterior::empty(n));
    }
    let w = effective_noise(state, system.m(), cap);
    let a_s = system.a().select_columns(active.iter());
    let mut wa = a_s.clone();
    for (j, mut row) in wa.row_iter_mut().enumerate() {
        row *= w[j];
    }
    // M = Γ_S + A_Sᵀ W A_S
    let mut prec = a_s.transpose() * &wa;
    for (p, &i) in active.iter().enumerate() {
        prec[(p, p)] += state.gamma[i];
    }
    let factor = SpdFactor::new(&prec)?;
    let rhs = wa.tr_mul(system.y());
    let x_s = factor.solve_vec(&rhs);
    let mut x_hat = DVector::zeros(n);
    for (p, &i) in active.iter().enumerate() {
        x_hat[i] = x_s[p];
    }
    Ok(Posterior {
        x_hat,
        sigma: factor.inverse(),
        active,
        log_det_precision: factor.log_det(),
    })
}

/// Log evidence evaluated from an already computed posterior.
///
/// Uses `det(B⁻¹ + AΓ⁻¹Aᵀ) = det(Σ⁻¹) det(Γ⁻¹) det(B⁻¹)` and
/// `yᵀ(B⁻¹ + AΓ⁻¹Aᵀ)⁻¹y = yᵀBy − yᵀBAx̂`, so no `m × m` system is formed.
pub(crate) fn evidence_from(
    system: &LinearSystem,
    state: &PrecisionState,
    post: &Posterior,
    priors: &HyperPriors,
    cap: f64,
) -> f64 {
    let m = system.m();
    let w = effective_noise(state, m, cap);
    let y = system.y();
    let log_det_gamma: f64 = post.active.iter().map(|&i| state.gamma[i].ln()).sum();
    let log_det_noise: f64 = w.iter().map(|v| v.ln()).sum();
    let log_det_cov = post.log_det_precision - log_det_gamma - log_det_noise;

    let wy = y.component_mul(&w);
    let fitted = system.a() * &post.x_hat;
    let quad = wy.dot(y) - wy.dot(&fitted);

    let signal_prior = match &state.tilde_gamma {
        Some(t) => prior_sum(t.iter().copied(), priors.a, priors.b),
        None => prior_sum(state.gamma.iter().copied(), priors.a, priors.b),
    };
    let noise_prior = match &state.tilde_beta {
        Some(t) => prior_sum(t.iter().copied(), priors.c, priors.d),
        None if state.beta.len() == 1 => prior_sum(std::iter::once(state.beta[0].min(cap)), priors.c, priors.d),
        None => prior_sum(w.iter().copied(), priors.c, priors.d),
    };

    -0.5 * m as f64 * (2.0 * PI).ln() - 0.5 * log_det_cov - 0.5 * quad + signal_prior + noise_prior
}

fn prior_sum(p: impl Iterator<Item = f64>, shape: f64, rate: f64) -> f64 {
    if shape == 0.0 && rate == 0.0 {
        return 0.0;
    }
    p.filter(|v| !is_pruned(*v))
        .map(|v| shape * v.ln() - rate * v)
        .sum()
}

/// `num / den` with pruning, the zero-rate floor and the lower clamp applied.
///
/// The prune test looks at the unfloored ratio, so a vanishing estimate
/// (or an exactly zero `den`) still reaches `+∞`; the floor only keeps the
/// retained value finite.
#[inline]
pub(crate) fn next_precision(num: f64, den: f64, rate: f64, opts: &FitOptions) -> f64 {
    if den == 0.0 || num / den > opts.prune_threshold {
        return if num > 0.0 { PRUNED } else { MIN_PRECISION };
    }
    let floor = if rate == 0.0 { opts.denom_floor } else { 0.0 };
    let v = num / (den + floor);
    if v.is_nan() {
        MIN_PRECISION
    } else {
        v.max(MIN_PRECISION)
    }
}

fn max_log_change(old: &DVector<f64>, new: &DVector<f64>) -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut newly_pruned = false;
    for (&o, &n) in old.iter().zip(new.iter()) {
        match (is_pruned(o), is_pruned(n)) {
            (false, false) => worst = worst.max((n.ln() - o.ln()).abs()),
            (false, true) => newly_pruned = true,
            _ => {}
        }
    }
    (worst, newly_pruned)
}

/// Largest log change over every precision vector carried by the state.
pub(crate) fn state_change(old: &PrecisionState, new: &PrecisionState) -> (f64, bool) {
    let mut pairs = vec![(&old.gamma, &new.gamma), (&old.beta, &new.beta)];
    if let (Some(a), Some(b)) = (&old.tilde_gamma, &new.tilde_gamma) {
        pairs.push((a, b));
    }
    if let (Some(a), Some(b)) = (&old.tilde_beta, &new.tilde_beta) {
        pairs.push((a, b));
    }
    pairs.into_iter().fold((0.0, false), |(w, p), (a, b)| {
        let (dw, dp) = max_log_change(a, b);
        (w.max(dw), p || dp)
    })
}

/// Posterior for a fit in progress. A pivot failure means some precisions
/// are negligible next to their column's data weight `Σ_j w_j a_ji²`; each
/// retry lifts every active precision to a growing fraction of that weight
/// (and the failing one by at least a factor of ten).
fn robust_posterior(
    system: &LinearSystem,
    state: &mut PrecisionState,
    cap: f64,
) -> Result<Posterior> {
    let mut attempts = 0;
    loop {
        match posterior_capped(system, state, cap) {
            Err(Error::NotPositiveDefinite { pivot }) if attempts < 8 => {
                let w = effective_noise(state, system.m(), cap);
                let rel = 1e-12 * 100f64.powi(attempts);
                let active = state.active_signal();
                for &i in &active {
                    let weight: f64 = system.a().column(i).iter().zip(w.iter()).map(|(a, w)| w * a * a).sum();
                    state.gamma[i] = state.gamma[i].max(rel * weight);
                }
                let col = active[pivot];
                state.gamma[col] *= 10.0;
                attempts += 1;
            }
            other => return other,
        }
    }
}

/// Iterates `posterior → step` until the precisions stop moving.
pub(crate) fn run_fixed_point<F>(
    system: &LinearSystem,
    init: PrecisionState,
    priors: &HyperPriors,
    opts: &FitOptions,
    mut step: F,
) -> Result<FitResult>
where
    F: FnMut(&PrecisionState, &Posterior) -> PrecisionState,
{
    opts.check()?;
    priors.check()?;
    let cap = opts.prune_threshold;
    let start = Instant::now();
    let mut state = init;
    let mut trace = Vec::new();
    let mut iteration_seconds = Vec::new();
    let mut converged = false;

    for _ in 0..opts.max_iter {
        let t0 = Instant::now();
        let post = robust_posterior(system, &mut state, cap)?;
        trace.push(evidence_from(system, &state, &post, priors, cap));
        let next = step(&state, &post);
        let (change, newly_pruned) = state_change(&state, &next);
        state = next;
        iteration_seconds.push(t0.elapsed().as_secs_f64());
        if !newly_pruned && change < opts.rel_tol {
            converged = true;
            break;
        }
    }

    let posterior = robust_posterior(system, &mut state, cap)?;
    let report = FitReport {
        iterations: trace.len(),
        converged,
        evidence_trace: trace,
        active_signal_set: state.active_signal(),
        active_noise_set: state.active_noise(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        iteration_seconds,
    };
    Ok(FitResult {
        posterior,
        state,
        report,
    })
}
