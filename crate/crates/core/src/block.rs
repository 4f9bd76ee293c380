//! Block-structured variants.
//!
//! With a known disjoint partition every block shares one precision. With
//! unknown structure the signal (or noise) is a superposition of overlapping
//! candidate blocks, each with its own underlying precision, and the
//! componentwise precision of position `i` is the harmonic combination
//! `γ_i⁻¹ = Σ_{k ∋ i} γ̃_k⁻¹`.

use nalgebra::{DMatrix, DVector};

use crate::engine::{self, next_precision, FitResult};
use crate::error::{Error, Result};
use crate::types::{
    initial_noise_precision, is_pruned, BlockLayout, FitOptions, HyperPriors, LayoutKind,
    LinearSystem, Posterior, PrecisionState,
};

/// Per-block diagonal precision maps `Γ_k` (and `B_l`): the componentwise
/// precisions restricted to the block's support.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPrecisionMaps {
    dim: usize,
    entries: Vec<Vec<(usize, f64)>>,
}

impl BlockPrecisionMaps {
    pub fn new(layout: &BlockLayout, componentwise: &DVector<f64>) -> Self {
        assert_eq!(layout.dim(), componentwise.len());
        let entries = layout
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&i| (i, componentwise[i])).collect())
            .collect();
        Self {
            dim: layout.dim(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(index, precision)` pairs of block `k`.
    pub fn block(&self, k: usize) -> &[(usize, f64)] {
        &self.entries[k]
    }

    /// `tr(Γ_k)`.
    pub fn trace(&self, k: usize) -> f64 {
        self.entries[k].iter().map(|&(_, g)| g).sum()
    }

    /// `tr(Γ_k S Γ_k)` for a diagonal `S` given by `diag`.
    pub fn sandwich_trace(&self, k: usize, diag: &DVector<f64>) -> f64 {
        self.entries[k].iter().map(|&(i, g)| g * g * diag[i]).sum()
    }

    /// `‖Γ_k v‖²`.
    pub fn weighted_norm_sq(&self, k: usize, v: &DVector<f64>) -> f64 {
        self.entries[k].iter().map(|&(i, g)| (g * v[i]).powi(2)).sum()
    }

    /// Dense `dim × dim` form of `Γ_k`.
    pub fn to_dense(&self, k: usize) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.dim, self.dim);
        for &(i, g) in &self.entries[k] {
            d[(i, i)] = g;
        }
        d
    }
}

fn require_disjoint(layout: &BlockLayout, what: &str) -> Result<()> {
    layout.check()?;
    if layout.kind() != LayoutKind::DisjointPartition {
        return Err(Error::InvalidBlockLayout(format!(
            "{what} layout must be a disjoint partition"
        )));
    }
    Ok(())
}

/// Spreads block precisions over a disjoint partition without rounding.
fn broadcast(layout: &BlockLayout, tilde: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(layout.dim());
    for (b, &q) in layout.blocks().iter().zip(tilde.iter()) {
        for &i in b {
            out[i] = q;
        }
    }
    out
}

fn tilde(state: &Option<DVector<f64>>, what: &str) -> DVector<f64> {
    state
        .clone()
        .unwrap_or_else(|| panic!("{what} block precisions missing from state"))
}

/// Known-block signal step:
/// `γ_k ← (n_k − γ_k tr(Σ_{I_k}) + 2a) / (‖x̂_{I_k}‖² + 2b)`.
pub fn update_block_gamma(
    layout: &BlockLayout,
    state: &PrecisionState,
    post: &Posterior,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> PrecisionState {
    let sd = post.sigma_diag();
    let mut t = tilde(&state.tilde_gamma, "signal");
    for (k, b) in layout.blocks().iter().enumerate() {
        let g = t[k];
        if is_pruned(g) {
            continue;
        }
        let tr: f64 = b.iter().map(|&i| sd[i]).sum();
        let xx: f64 = b.iter().map(|&i| post.x_hat[i] * post.x_hat[i]).sum();
        let num = b.len() as f64 - g * tr + 2.0 * priors.a;
        let den = xx + 2.0 * priors.b;
        t[k] = next_precision(num, den, priors.b, opts);
    }
    let mut next = state.clone();
    next.gamma = broadcast(layout, &t);
    next.tilde_gamma = Some(t);
    next
}

/// Known-block noise step:
/// `β_l ← (m_l − β_l tr([AΣAᵀ]_{J_l}) + 2c) / (‖(y − Ax̂)_{J_l}‖² + 2d)`.
pub fn update_block_beta(
    system: &LinearSystem,
    layout: &BlockLayout,
    state: &PrecisionState,
    post: &Posterior,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> PrecisionState {
    let h = post.a_sigma_at_diag(system);
    let r = post.residual(system);
    let mut t = tilde(&state.tilde_beta, "noise");
    for (l, b) in layout.blocks().iter().enumerate() {
        let q = t[l];
        if is_pruned(q) {
            continue;
        }
        let tr: f64 = b.iter().map(|&j| h[j]).sum();
        let rr: f64 = b.iter().map(|&j| r[j] * r[j]).sum();
        let num = b.len() as f64 - q * tr + 2.0 * priors.c;
        let den = rr + 2.0 * priors.d;
        t[l] = next_precision(num, den, priors.d, opts);
    }
    let mut next = state.clone();
    next.beta = broadcast(layout, &t);
    next.tilde_beta = Some(t);
    next
}

/// Overlapping-block signal step on the underlying precisions:
///
/// ```text
/// γ̃_k ← (tr(Γ_k)/γ̃_k − tr(Γ_k Σ Γ_k)/γ̃_k + 2a) / (‖Γ_k x̂‖²/γ̃_k² + 2b)
/// ```
///
/// followed by the harmonic recombination into componentwise `γ`.
pub fn update_overlap_gamma(
    layout: &BlockLayout,
    state: &PrecisionState,
    post: &Posterior,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> PrecisionState {
    let sd = post.sigma_diag();
    let maps = BlockPrecisionMaps::new(layout, &state.gamma);
    let mut t = tilde(&state.tilde_gamma, "signal");
    for k in 0..layout.len() {
        let g = t[k];
        if is_pruned(g) {
            continue;
        }
        let num = (maps.trace(k) - maps.sandwich_trace(k, &sd)) / g + 2.0 * priors.a;
        let den = maps.weighted_norm_sq(k, &post.x_hat) / (g * g) + 2.0 * priors.b;
        t[k] = next_precision(num, den, priors.b, opts);
    }
    let mut next = state.clone();
    next.gamma = layout.combine(t.as_slice());
    next.tilde_gamma = Some(t);
    next
}

/// Overlapping-block noise step:
///
/// ```text
/// β̃_l ← (tr(B_l)/β̃_l − tr(B_l AΣAᵀ B_l)/β̃_l + 2c) / (‖B_l(y − Ax̂)‖²/β̃_l² + 2d)
/// ```
pub fn update_overlap_beta(
    system: &LinearSystem,
    layout: &BlockLayout,
    state: &PrecisionState,
    post: &Posterior,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> PrecisionState {
    let h = post.a_sigma_at_diag(system);
    let r = post.residual(system);
    let maps = BlockPrecisionMaps::new(layout, &state.beta);
    let mut t = tilde(&state.tilde_beta, "noise");
    for l in 0..layout.len() {
        let q = t[l];
        if is_pruned(q) {
            continue;
        }
        let num = (maps.trace(l) - maps.sandwich_trace(l, &h)) / q + 2.0 * priors.c;
        let den = maps.weighted_norm_sq(l, &r) / (q * q) + 2.0 * priors.d;
        t[l] = next_precision(num, den, priors.d, opts);
    }
    let mut next = state.clone();
    next.beta = layout.combine(t.as_slice());
    next.tilde_beta = Some(t);
    next
}

/// Block precisions `1` (signal) and `m/‖y‖²` (noise) on disjoint partitions.
pub fn block_initial(
    system: &LinearSystem,
    signal: &BlockLayout,
    noise: &BlockLayout,
) -> PrecisionState {
    let tg = DVector::from_element(signal.len(), 1.0);
    let tb = DVector::from_element(noise.len(), initial_noise_precision(system));
    PrecisionState {
        gamma: broadcast(signal, &tg),
        beta: broadcast(noise, &tb),
        tilde_gamma: Some(tg),
        tilde_beta: Some(tb),
    }
}

/// Underlying precisions scaled by how many blocks cover their support, so
/// the implied componentwise precisions start near `1` and `m/‖y‖²`.
pub fn overlap_initial(
    system: &LinearSystem,
    signal: &BlockLayout,
    noise: &BlockLayout,
) -> PrecisionState {
    let scaled = |layout: &BlockLayout, base: f64| {
        let cover = layout.cover_counts();
        DVector::from_iterator(
            layout.len(),
            layout
                .blocks()
                .iter()
                .map(|b| base * b.iter().map(|&i| cover[i]).max().unwrap_or(1) as f64),
        )
    };
    let tg = scaled(signal, 1.0);
    let tb = scaled(noise, initial_noise_precision(system));
    PrecisionState {
        gamma: signal.combine(tg.as_slice()),
        beta: noise.combine(tb.as_slice()),
        tilde_gamma: Some(tg),
        tilde_beta: Some(tb),
    }
}

/// Known block structure for both signal and noise.
pub fn fit_sdrvm_blocks(
    system: &LinearSystem,
    signal: &BlockLayout,
    noise: &BlockLayout,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> Result<FitResult> {
    require_disjoint(signal, "signal")?;
    require_disjoint(noise, "noise")?;
    let init = block_initial(system, signal, noise);
    crate::types::validate(system, signal, noise, &init)?;
    engine::run_fixed_point(system, init, priors, opts, |state, post| {
        let mut next = update_block_gamma(signal, state, post, priors, opts);
        let nb = update_block_beta(system, noise, state, post, priors, opts);
        next.beta = nb.beta;
        next.tilde_beta = nb.tilde_beta;
        next
    })
}

/// Unknown block structure: overlapping candidate blocks for signal and noise.
pub fn fit_sdrvm_overlap(
    system: &LinearSystem,
    signal: &BlockLayout,
    noise: &BlockLayout,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_sdrvm_overlap_from(system, signal, noise, overlap_initial(system, signal, noise), priors, opts)
}

pub fn fit_sdrvm_overlap_from(
    system: &LinearSystem,
    signal: &BlockLayout,
    noise: &BlockLayout,
    init: PrecisionState,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> Result<FitResult> {
    crate::types::validate(system, signal, noise, &init)?;
    if init.tilde_gamma.is_none() || init.tilde_beta.is_none() {
        return Err(Error::InvalidConfig(
            "overlapping fit needs underlying block precisions".into(),
        ));
    }
    engine::run_fixed_point(system, init, priors, opts, |state, post| {
        let mut next = update_overlap_gamma(signal, state, post, priors, opts);
        let nb = update_overlap_beta(system, noise, state, post, priors, opts);
        next.beta = nb.beta;
        next.tilde_beta = nb.tilde_beta;
        next
    })
}

/// Componentwise sparse signal; noise modelled as one precision per
/// measurement overlapped with a single block covering all measurements
/// (sparse plus dense noise).
pub fn fit_sdrvm_sparse_dense(
    system: &LinearSystem,
    priors: &HyperPriors,
    opts: &FitOptions,
) -> Result<FitResult> {
    fit_sdrvm_overlap(
        system,
        &BlockLayout::singletons(system.n()),
        &BlockLayout::singletons_plus_full(system.m()),
        priors,
        opts,
    )
}
