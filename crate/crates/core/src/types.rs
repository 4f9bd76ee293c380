//! Problem instances, precision state, posterior and fit bookkeeping.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Precision value used for a pruned coordinate.
pub const PRUNED: f64 = f64::INFINITY;

/// Lower clamp applied to updated precisions whose numerator collapses to zero.
pub const MIN_PRECISION: f64 = 1e-12;

#[inline]
pub fn is_pruned(p: f64) -> bool {
    p == f64::INFINITY
}

/// `y = A x + noise`, with `A` of shape `m × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    y: DVector<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let sys = Self { a, y };
        sys.check()?;
        Ok(sys)
    }

    fn check(&self) -> Result<()> {
        let (m, n) = self.a.shape();
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch(format!("empty measurement matrix {m}x{n}")));
        }
        if self.y.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "A has {m} rows but y has length {}",
                self.y.len()
            )));
        }
        if self.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measurement matrix"));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation vector"));
        }
        Ok(())
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    /// Number of measurements.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Signal dimension.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `[A I_m]`, the dictionary used by the robust baseline.
    pub fn augmented(&self) -> LinearSystem {
        let (m, n) = self.a.shape();
        let mut a = DMatrix::zeros(m, n + m);
        a.columns_mut(0, n).copy_from(&self.a);
        for j in 0..m {
            a[(j, n + j)] = 1.0;
        }
        LinearSystem {
            a,
            y: self.y.clone(),
        }
    }
}

/// Gamma hyper-prior constants `(a, b)` for signal precisions and `(c, d)`
/// for noise precisions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HyperPriors {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl HyperPriors {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let p = Self { a, b, c, d };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        for v in [self.a, self.b, self.c, self.d] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "hyper-prior constants must be finite and nonnegative, got {self:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayoutKind {
    DisjointPartition,
    Overlapping,
}

/// Index blocks over `0..dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    blocks: Vec<Vec<usize>>,
    kind: LayoutKind,
    dim: usize,
}

impl BlockLayout {
    pub fn new(blocks: Vec<Vec<usize>>, kind: LayoutKind, dim: usize) -> Result<Self> {
        let layout = Self { blocks, kind, dim };
        layout.check()?;
        Ok(layout)
    }

    pub fn singletons(dim: usize) -> Self {
        Self {
            blocks: (0..dim).map(|i| vec![i]).collect(),
            kind: LayoutKind::DisjointPartition,
            dim,
        }
    }

    /// Consecutive blocks of `size`; the last one may be shorter.
    pub fn contiguous(dim: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidBlockLayout("block size must be positive".into()));
        }
        let blocks = (0..dim)
            .step_by(size)
            .map(|s| (s..(s + size).min(dim)).collect())
            .collect();
        Self::new(blocks, LayoutKind::DisjointPartition, dim)
    }

    /// Every window of `size` consecutive positions, stride one.
    pub fn windows(dim: usize, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidBlockLayout("block size must be positive".into()));
        }
        let size = size.min(dim);
        let blocks = (0..=dim - size).map(|s| (s..s + size).collect()).collect();
        Self::new(blocks, LayoutKind::Overlapping, dim)
    }

    /// Singletons plus one block spanning everything: sparse noise on top of
    /// dense noise.
    pub fn singletons_plus_full(dim: usize) -> Self {
        let mut blocks: Vec<Vec<usize>> = (0..dim).map(|i| vec![i]).collect();
        blocks.push((0..dim).collect());
        Self {
            blocks,
            kind: LayoutKind::Overlapping,
            dim,
        }
    }

    /// The same blocks flagged as overlapping.
    pub fn as_overlapping(&self) -> Self {
        Self {
            blocks: self.blocks.clone(),
            kind: LayoutKind::Overlapping,
            dim: self.dim,
        }
    }

    pub fn check(&self) -> Result<()> {
        let mut cover = vec![0usize; self.dim];
        for (k, b) in self.blocks.iter().enumerate() {
            if b.is_empty() {
                return Err(Error::InvalidBlockLayout(format!("block {k} is empty")));
            }
            let mut seen = BTreeSet::new();
            for &i in b {
                if i >= self.dim {
                    return Err(Error::InvalidBlockLayout(format!(
                        "block {k} index {i} out of range 0..{}",
                        self.dim
                    )));
                }
                if !seen.insert(i) {
                    return Err(Error::InvalidBlockLayout(format!(
                        "block {k} repeats index {i}"
                    )));
                }
                cover[i] += 1;
            }
        }
        if let Some(i) = cover.iter().position(|&c| c == 0) {
            return Err(Error::InvalidBlockLayout(format!("position {i} is not covered")));
        }
        if self.kind == LayoutKind::DisjointPartition {
            if let Some(i) = cover.iter().position(|&c| c > 1) {
                return Err(Error::InvalidBlockLayout(format!(
                    "position {i} belongs to more than one block of a disjoint partition"
                )));
            }
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of blocks covering each position.
    pub fn cover_counts(&self) -> Vec<usize> {
        let mut cover = vec![0usize; self.dim];
        for b in &self.blocks {
            for &i in b {
                cover[i] += 1;
            }
        }
        cover
    }

    /// Componentwise precisions implied by block precisions:
    /// `p_i⁻¹ = Σ_{k ∋ i} q_k⁻¹`; pruned blocks contribute nothing.
    pub fn combine(&self, block_precisions: &[f64]) -> DVector<f64> {
        assert_eq!(block_precisions.len(), self.blocks.len());
        let mut var = vec![0.0f64; self.dim];
        for (b, &q) in self.blocks.iter().zip(block_precisions) {
            if is_pruned(q) {
                continue;
            }
            let v = 1.0 / q;
            for &i in b {
                var[i] += v;
            }
        }
        DVector::from_iterator(
            self.dim,
            var.into_iter()
                .map(|v| if v > 0.0 { 1.0 / v } else { PRUNED }),
        )
    }
}

/// Signal precisions `γ` and noise precisions `β`, componentwise, plus the
/// underlying block precisions when a block model is in use.
///
/// Pruned entries hold `+∞`. `beta` has length `m`, or 1 for a shared
/// scalar noise precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionState {
    pub gamma: DVector<f64>,
    pub beta: DVector<f64>,
    pub tilde_gamma: Option<DVector<f64>>,
    pub tilde_beta: Option<DVector<f64>>,
}

impl PrecisionState {
    pub fn componentwise(gamma: DVector<f64>, beta: DVector<f64>) -> Self {
        Self {
            gamma,
            beta,
            tilde_gamma: None,
            tilde_beta: None,
        }
    }

    /// `γ = 1`, `β = m / ‖y‖²` for every measurement.
    pub fn initial(system: &LinearSystem) -> Self {
        Self::componentwise(
            DVector::from_element(system.n(), 1.0),
            DVector::from_element(system.m(), initial_noise_precision(system)),
        )
    }

    /// Effective noise precision of measurement `j`.
    pub fn beta_at(&self, j: usize) -> f64 {
        if self.beta.len() == 1 {
            self.beta[0]
        } else {
            self.beta[j]
        }
    }

    pub fn active_signal(&self) -> Vec<usize> {
        active_indices(&self.gamma)
    }

    pub fn active_noise(&self) -> Vec<usize> {
        active_indices(&self.beta)
    }
}

pub(crate) fn active_indices(p: &DVector<f64>) -> Vec<usize> {
    p.iter()
        .enumerate()
        .filter(|(_, &v)| !is_pruned(v))
        .map(|(i, _)| i)
        .collect()
}

/// `m / ‖y‖²`, or 1 when `y = 0`.
pub fn initial_noise_precision(system: &LinearSystem) -> f64 {
    let yy = system.y().norm_squared();
    if yy > 0.0 {
        system.m() as f64 / yy
    } else {
        1.0
    }
}

fn check_precisions(p: &DVector<f64>, offset: usize) -> Result<()> {
    for (i, &v) in p.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NonPositivePrecision {
                index: offset + i,
                value: v,
            });
        }
    }
    Ok(())
}

fn check_combination(layout: &BlockLayout, tilde: &DVector<f64>, comp: &DVector<f64>) -> Result<()> {
    if tilde.len() != layout.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} block precisions for {} blocks",
            tilde.len(),
            layout.len()
        )));
    }
    check_precisions(tilde, 0)?;
    let implied = layout.combine(tilde.as_slice());
    for (i, (&want, &have)) in implied.iter().zip(comp.iter()).enumerate() {
        let ok = if is_pruned(want) || is_pruned(have) {
            want == have
        } else {
            (want - have).abs() <= 1e-12 * want.abs().max(have.abs())
        };
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "componentwise precision {i} is {have}, block combination gives {want}"
            )));
        }
    }
    Ok(())
}

/// Checks dimensions, layouts and precision positivity together.
pub fn validate(
    system: &LinearSystem,
    signal_layout: &BlockLayout,
    noise_layout: &BlockLayout,
    state: &PrecisionState,
) -> Result<()> {
    system.check()?;
    signal_layout.check()?;
    noise_layout.check()?;
    let (m, n) = (system.m(), system.n());
    if signal_layout.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "signal layout covers {} positions, A has {n} columns",
            signal_layout.dim()
        )));
    }
    if noise_layout.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "noise layout covers {} positions, A has {m} rows",
            noise_layout.dim()
        )));
    }
    if state.gamma.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} signal precisions for {n} columns",
            state.gamma.len()
        )));
    }
    if state.beta.len() != m && state.beta.len() != 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} noise precisions for {m} measurements",
            state.beta.len()
        )));
    }
    check_precisions(&state.gamma, 0)?;
    check_precisions(&state.beta, 0)?;
    if let Some(t) = &state.tilde_gamma {
        check_combination(signal_layout, t, &state.gamma)?;
    }
    if let Some(t) = &state.tilde_beta {
        if state.beta.len() != m {
            return Err(Error::DimensionMismatch(
                "block noise precisions require componentwise beta".into(),
            ));
        }
        check_combination(noise_layout, t, &state.beta)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Stop once `max |log p_new − log p_old|` over active precisions drops below this.
    pub rel_tol: f64,
    pub prune_threshold: f64,
    /// Added to update denominators when the matching rate constant is zero.
    pub denom_floor: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            rel_tol: 1e-4,
            prune_threshold: 1e12,
            denom_floor: 1e-10,
        }
    }
}

impl FitOptions {
    pub fn check(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("rel_tol must be positive".into()));
        }
        if !(self.prune_threshold > 1.0) {
            return Err(Error::InvalidConfig("prune_threshold must exceed 1".into()));
        }
        if !(self.denom_floor >= 0.0) {
            return Err(Error::InvalidConfig("denom_floor must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub converged: bool,
    /// Log evidence of the state entering each iteration.
    pub evidence_trace: Vec<f64>,
    pub active_signal_set: Vec<usize>,
    pub active_noise_set: Vec<usize>,
    pub elapsed_seconds: f64,
    pub iteration_seconds: Vec<f64>,
}

/// MAP estimate `x̂ = Σ Aᵀ B y` with `Σ = (Γ + Aᵀ B A)⁻¹`, both restricted to
/// the active columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub x_hat: DVector<f64>,
    /// `k × k` covariance over `active`.
    pub sigma: DMatrix<f64>,
    /// Active column indices, ascending.
    pub active: Vec<usize>,
    /// `log det Σ⁻¹`.
    pub log_det_precision: f64,
}

impl Posterior {
    pub fn empty(n: usize) -> Self {
        Self {
            x_hat: DVector::zeros(n),
            sigma: DMatrix::zeros(0, 0),
            active: Vec::new(),
            log_det_precision: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.x_hat.len()
    }

    /// `Σ_ii` for every column, zero for pruned ones.
    pub fn sigma_diag(&self) -> DVector<f64> {
        let mut d = DVector::zeros(self.n());
        for (p, &i) in self.active.iter().enumerate() {
            d[i] = self.sigma[(p, p)];
        }
        d
    }

    /// `Σ` embedded in an `n × n` matrix.
    pub fn full_sigma(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.n(), self.n());
        for (p, &i) in self.active.iter().enumerate() {
            for (q, &j) in self.active.iter().enumerate() {
                s[(i, j)] = self.sigma[(p, q)];
            }
        }
        s
    }

    /// `y − A x̂`.
    pub fn residual(&self, system: &LinearSystem) -> DVector<f64> {
        system.y() - system.a() * &self.x_hat
    }

    /// `diag(A Σ Aᵀ)`.
    pub fn a_sigma_at_diag(&self, system: &LinearSystem) -> DVector<f64> {
        let m = system.m();
        if self.active.is_empty() {
            return DVector::zeros(m);
        }
        let a_s = system.a().select_columns(self.active.iter());
        let g = &a_s * &self.sigma;
        DVector::from_iterator(m, (0..m).map(|j| g.row(j).dot(&a_s.row(j))))
    }
}
