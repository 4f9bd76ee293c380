//! Compressed-sensing recovery sweeps over the measurement rate `m/n`, for
//! componentwise and block-sparse signals with sparse outliers on top of
//! dense Gaussian noise.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::methods::{Estimate, Estimator, Layouts, Method, Solver};
use super::rng::{normal, stream, support, RNG_ALGORITHM};
use super::table::{param, ResultTable};
use crate::error::{Error, Result};
use crate::types::{BlockLayout, LinearSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsConfig {
    pub n: usize,
    pub m: usize,
    /// Nonzeros in `x`.
    pub k_signal: usize,
    /// Outliers in `e`.
    pub k_noise: usize,
    pub sdnr_db: f64,
    pub trials_matrices: usize,
    pub trials_signals: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
}

impl Default for CsConfig {
    fn default() -> Self {
        Self {
            n: 100,
            m: 70,
            k_signal: 10,
            k_noise: 4,
            sdnr_db: 20.0,
            trials_matrices: 20,
            trials_signals: 20,
            seed: 7,
            methods: vec![Method::Rvm, Method::RbRvm, Method::SdRvm],
        }
    }
}

impl CsConfig {
    pub fn check(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidConfig("n and m must be positive".into()));
        }
        if self.k_signal > self.n {
            return Err(Error::InvalidConfig(format!(
                "k_signal {} exceeds n {}",
                self.k_signal, self.n
            )));
        }
        if self.k_noise > self.m {
            return Err(Error::InvalidConfig(format!(
                "k_noise {} exceeds m {}",
                self.k_noise, self.m
            )));
        }
        if !self.sdnr_db.is_finite() {
            return Err(Error::InvalidConfig("sdnr_db must be finite".into()));
        }
        Ok(())
    }

    /// `σ_n² = ‖x‖₀ / (m · 10^(SDNR/10))`.
    pub fn noise_variance(&self) -> f64 {
        self.k_signal as f64 / (self.m as f64 * 10f64.powf(self.sdnr_db / 10.0))
    }

    /// Outlier count for a fraction of `m`, rounded.
    pub fn outliers_for(m: usize, fraction: f64) -> usize {
        (fraction * m as f64).round() as usize
    }
}

/// A generated problem together with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CsInstance {
    pub system: LinearSystem,
    pub x_true: DVector<f64>,
    pub e_true: DVector<f64>,
    pub dense_noise: DVector<f64>,
}

/// `N(0,1)` entries, columns scaled to unit norm.
pub fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::from_fn(m, n, |_, _| 0.0);
    for j in 0..n {
        for i in 0..m {
            a[(i, j)] = normal(rng);
        }
        let norm = a.column(j).norm();
        if norm > 0.0 {
            a.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    a
}

fn sparse_vector(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    for i in support(rng, dim, k) {
        v[i] = normal(rng);
    }
    v
}

fn dense_noise(rng: &mut ChaCha8Rng, m: usize, var: f64) -> DVector<f64> {
    let s = var.sqrt();
    DVector::from_iterator(m, (0..m).map(|_| s * normal(rng)))
}

fn assemble(a: DMatrix<f64>, x: DVector<f64>, e: DVector<f64>, nz: DVector<f64>) -> CsInstance {
    let y = &a * &x + &e + &nz;
    CsInstance {
        system: LinearSystem::new(a, y).expect("generated instance is well formed"),
        x_true: x,
        e_true: e,
        dense_noise: nz,
    }
}

/// Signal, outliers and dense noise for a given matrix.
pub fn gen_cs_signal(cfg: &CsConfig, a: DMatrix<f64>, rng: &mut ChaCha8Rng) -> CsInstance {
    let x = sparse_vector(rng, cfg.n, cfg.k_signal);
    let e = sparse_vector(rng, cfg.m, cfg.k_noise);
    let nz = dense_noise(rng, cfg.m, cfg.noise_variance());
    assemble(a, x, e, nz)
}

/// A complete instance drawn from one seed.
pub fn gen_cs_instance(cfg: &CsConfig, seed: u64) -> Result<CsInstance> {
    cfg.check()?;
    let mut rng = stream(seed, 0);
    let a = gaussian_matrix(&mut rng, cfg.m, cfg.n);
    Ok(gen_cs_signal(cfg, a, &mut rng))
}

/// NMSE in dB over a set of `(truth, estimate)` pairs:
/// `10 log10(Σ‖x − x̂‖² / Σ‖x‖²)`. A perfect recovery gives `−∞`.
pub fn nmse<'a, I>(pairs: I) -> Result<f64>
where
    I: IntoIterator<Item = (&'a DVector<f64>, &'a DVector<f64>)>,
{
    let mut err = 0.0;
    let mut truth = 0.0;
    let mut count = 0;
    for (x, x_hat) in pairs {
        if x.len() != x_hat.len() {
            return Err(Error::DimensionMismatch(format!(
                "truth has length {}, estimate {}",
                x.len(),
                x_hat.len()
            )));
        }
        err += (x - x_hat).norm_squared();
        truth += x.norm_squared();
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidConfig("nmse of an empty set".into()));
    }
    if truth == 0.0 {
        return Err(Error::DivisionByZero);
    }
    Ok(10.0 * (err / truth).log10())
}

/// Upper edges of the runtime histogram bins, in seconds; the last bin is open.
pub const RUNTIME_BINS: [f64; 10] = [0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 1.0, 2.0];

/// Percentage of runtimes per bin.
pub fn runtime_histogram(times: &[f64]) -> Vec<(String, f64)> {
    let mut counts = vec![0usize; RUNTIME_BINS.len() + 1];
    for &t in times {
        let b = RUNTIME_BINS.iter().position(|&e| t < e).unwrap_or(RUNTIME_BINS.len());
        counts[b] += 1;
    }
    let total = times.len().max(1) as f64;
    let mut lo = 0.0;
    let mut out = Vec::new();
    for (b, c) in counts.into_iter().enumerate() {
        let label = match RUNTIME_BINS.get(b) {
            Some(hi) => format!("runtime_hist_{lo}_{hi}"),
            None => format!("runtime_hist_{lo}_inf"),
        };
        out.push((label, 100.0 * c as f64 / total));
        if let Some(&hi) = RUNTIME_BINS.get(b) {
            lo = hi;
        }
    }
    out
}

fn median(v: &mut [f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Per-method accumulation of one sweep point.
struct PointStats {
    truths: Vec<DVector<f64>>,
    estimates: Vec<Vec<Estimate>>,
}

fn summarize(
    table: &mut ResultTable,
    sweep: &str,
    names: &[String],
    stats: PointStats,
    seed: u64,
) -> Result<()> {
    let trials = stats.truths.len();
    for (k, name) in names.iter().enumerate() {
        let ests: Vec<&Estimate> = stats.estimates.iter().map(|e| &e[k]).collect();
        let value = if stats.truths.iter().all(|x| x.norm_squared() == 0.0) {
            f64::NEG_INFINITY
        } else {
            nmse(stats.truths.iter().zip(ests.iter().map(|e| &e.x_hat)))?
        };
        table.push(sweep, name, "nmse_db", value, trials, seed);
        let iters = ests.iter().map(|e| e.iterations as f64).sum::<f64>() / trials as f64;
        table.push(sweep, name, "mean_iterations", iters, trials, seed);
        let mut secs: Vec<f64> = ests.iter().map(|e| e.seconds).collect();
        let mean_s = secs.iter().sum::<f64>() / trials as f64;
        table.push(sweep, name, "mean_seconds", mean_s, trials, seed);
        table.push(sweep, name, "median_seconds", median(&mut secs), trials, seed);
        let mut per_iter: Vec<f64> = ests
            .iter()
            .flat_map(|e| e.iteration_seconds.iter().copied())
            .collect();
        table.push(sweep, name, "median_iteration_seconds", median(&mut per_iter), trials, seed);
        let raw: Vec<f64> = ests.iter().map(|e| e.seconds).collect();
        for (label, pct) in runtime_histogram(&raw) {
            table.push(sweep, name, label, pct, trials, seed);
        }
    }
    Ok(())
}

fn solvers(methods: &[Method]) -> Vec<Box<dyn Estimator>> {
    methods
        .iter()
        .map(|&m| Box::new(Solver::new(m)) as Box<dyn Estimator>)
        .collect()
}

/// Trial streams: matrix `i` of point `p` uses stream `(p, i, 0)`, signal `j`
/// uses `(p, i, j + 1)`.
fn stream_id(point: usize, matrix: usize, signal: usize) -> u64 {
    ((point as u64) << 44) | ((matrix as u64) << 22) | signal as u64
}

/// Sweep over measurement rates. `m` and `k_noise` in `base` are replaced per
/// point (`k_noise = round(outlier_fraction · m)`).
pub fn run_cs_sweep(
    base: &CsConfig,
    rates: &[f64],
    outlier_fraction: f64,
) -> Result<ResultTable> {
    run_cs_sweep_with(base, rates, outlier_fraction, &solvers(&base.methods))
}

/// [`run_cs_sweep`] with arbitrary estimators, built-in or external.
pub fn run_cs_sweep_with(
    base: &CsConfig,
    rates: &[f64],
    outlier_fraction: f64,
    estimators: &[Box<dyn Estimator>],
) -> Result<ResultTable> {
    if !(0.0..=1.0).contains(&outlier_fraction) {
        return Err(Error::InvalidConfig("outlier fraction must be within [0, 1]".into()));
    }
    let names: Vec<String> = estimators.iter().map(|e| e.name()).collect();
    let mut table = ResultTable::default();
    table.meta.insert("rng".into(), RNG_ALGORITHM.into());
    table.meta.insert("experiment".into(), "cs-sweep".into());
    table.meta.insert("outlier_fraction".into(), outlier_fraction.to_string());

    for (p, &rate) in rates.iter().enumerate() {
        let m = ((rate * base.n as f64).round() as usize).max(1);
        let cfg = CsConfig {
            m,
            k_noise: CsConfig::outliers_for(m, outlier_fraction),
            ..base.clone()
        };
        cfg.check()?;
        log::info!("cs-sweep: m/n = {rate} (m = {m}, {} outliers)", cfg.k_noise);
        let pairs: Vec<(usize, usize)> = (0..cfg.trials_matrices)
            .flat_map(|i| (0..cfg.trials_signals).map(move |j| (i, j)))
            .collect();
        let results: Vec<Result<(DVector<f64>, Vec<Estimate>)>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let mut arng = stream(cfg.seed, stream_id(p, i, 0));
                let a = gaussian_matrix(&mut arng, cfg.m, cfg.n);
                let mut srng = stream(cfg.seed, stream_id(p, i, j + 1));
                let inst = gen_cs_signal(&cfg, a, &mut srng);
                let layouts = Layouts::default();
                let ests = estimators
                    .iter()
                    .map(|e| e.estimate(&inst.system, &layouts))
                    .collect::<Result<Vec<_>>>()?;
                Ok((inst.x_true, ests))
            })
            .collect();
        let mut stats = PointStats {
            truths: Vec::with_capacity(results.len()),
            estimates: Vec::with_capacity(results.len()),
        };
        for r in results {
            let (x, e) = r?;
            stats.truths.push(x);
            stats.estimates.push(e);
        }
        summarize(&mut table, &param(rate), &names, stats, cfg.seed)?;
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockStructure {
    /// Active blocks drawn from a fixed disjoint partition.
    Known,
    /// Active blocks start anywhere and may overlap.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub n: usize,
    pub block_size: usize,
    /// Nonzero signal blocks.
    pub active_blocks: usize,
    /// Fraction of noise blocks carrying outliers.
    pub noise_block_fraction: f64,
    pub sdnr_db: f64,
    pub trials_matrices: usize,
    pub trials_signals: usize,
    pub seed: u64,
    pub structure: BlockStructure,
    pub methods: Vec<Method>,
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self {
            n: 100,
            block_size: 5,
            active_blocks: 3,
            noise_block_fraction: 0.05,
            sdnr_db: 20.0,
            trials_matrices: 10,
            trials_signals: 10,
            seed: 7,
            structure: BlockStructure::Known,
            methods: vec![Method::SdRvmBlock, Method::SdRvm, Method::Rvm, Method::RbRvm],
        }
    }
}

impl BlockConfig {
    pub fn check(&self) -> Result<()> {
        if self.block_size == 0 || self.block_size > self.n {
            return Err(Error::InvalidConfig("block size must be within 1..=n".into()));
        }
        if self.active_blocks > self.n / self.block_size {
            return Err(Error::InvalidConfig("more active blocks than blocks".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_block_fraction) {
            return Err(Error::InvalidConfig("noise block fraction must be within [0, 1]".into()));
        }
        if !self.sdnr_db.is_finite() {
            return Err(Error::InvalidConfig("sdnr_db must be finite".into()));
        }
        Ok(())
    }

    /// Active outlier blocks for `m` measurements: the configured fraction
    /// of `⌈m / block_size⌉` blocks, rounded, at least one when the fraction
    /// is positive.
    pub fn noise_blocks_for(&self, m: usize) -> usize {
        let blocks = m.div_ceil(self.block_size);
        if self.noise_block_fraction == 0.0 {
            return 0;
        }
        ((self.noise_block_fraction * blocks as f64).round() as usize).clamp(1, blocks)
    }
}

/// Start positions of `k` active blocks of `size` within `0..dim`.
fn block_starts(rng: &mut ChaCha8Rng, dim: usize, size: usize, k: usize, structure: BlockStructure) -> Vec<usize> {
    match structure {
        BlockStructure::Known => support(rng, dim.div_ceil(size), k)
            .into_iter()
            .map(|b| b * size)
            .collect(),
        BlockStructure::Unknown => support(rng, dim - size + 1, k),
    }
}

fn block_sparse(rng: &mut ChaCha8Rng, dim: usize, size: usize, k: usize, structure: BlockStructure) -> DVector<f64> {
    let mut v = DVector::zeros(dim);
    for s in block_starts(rng, dim, size, k, structure) {
        for i in s..(s + size).min(dim) {
            v[i] = normal(rng);
        }
    }
    v
}

/// One block-sparse instance with `m` measurements.
pub fn gen_block_instance(cfg: &BlockConfig, m: usize, a: DMatrix<f64>, rng: &mut ChaCha8Rng) -> CsInstance {
    let x = block_sparse(rng, cfg.n, cfg.block_size, cfg.active_blocks, cfg.structure);
    let e = block_sparse(rng, m, cfg.block_size.min(m), cfg.noise_blocks_for(m), cfg.structure);
    let k = x.iter().filter(|v| **v != 0.0).count().max(1);
    let var = k as f64 / (m as f64 * 10f64.powf(cfg.sdnr_db / 10.0));
    let nz = dense_noise(rng, m, var);
    assemble(a, x, e, nz)
}

/// Layouts the block-aware methods use for a given structure.
pub fn block_layouts(cfg: &BlockConfig, m: usize) -> Result<Layouts> {
    let size_m = cfg.block_size.min(m);
    Ok(match cfg.structure {
        BlockStructure::Known => Layouts {
            signal: Some(BlockLayout::contiguous(cfg.n, cfg.block_size)?),
            noise: Some(BlockLayout::contiguous(m, size_m)?),
        },
        BlockStructure::Unknown => Layouts {
            signal: Some(BlockLayout::windows(cfg.n, cfg.block_size)?),
            noise: Some(BlockLayout::windows(m, size_m)?),
        },
    })
}

/// Block-sparse sweep over measurement rates.
pub fn run_block_sweep(cfg: &BlockConfig, rates: &[f64]) -> Result<ResultTable> {
    run_block_sweep_with(cfg, rates, &solvers(&cfg.methods))
}

pub fn run_block_sweep_with(
    cfg: &BlockConfig,
    rates: &[f64],
    estimators: &[Box<dyn Estimator>],
) -> Result<ResultTable> {
    cfg.check()?;
    let names: Vec<String> = estimators.iter().map(|e| e.name()).collect();
    let mut table = ResultTable::default();
    table.meta.insert("rng".into(), RNG_ALGORITHM.into());
    table.meta.insert("experiment".into(), "block-sweep".into());
    table.meta.insert(
        "structure".into(),
        match cfg.structure {
            BlockStructure::Known => "known".into(),
            BlockStructure::Unknown => "unknown".into(),
        },
    );
    for (p, &rate) in rates.iter().enumerate() {
        let m = ((rate * cfg.n as f64).round() as usize).max(1);
        let layouts = block_layouts(cfg, m)?;
        log::info!("block-sweep: m/n = {rate} (m = {m})");
        let pairs: Vec<(usize, usize)> = (0..cfg.trials_matrices)
            .flat_map(|i| (0..cfg.trials_signals).map(move |j| (i, j)))
            .collect();
        let results: Vec<Result<(DVector<f64>, Vec<Estimate>)>> = pairs
            .par_iter()
            .map(|&(i, j)| {
                let mut arng = stream(cfg.seed, stream_id(p, i, 0));
                let a = gaussian_matrix(&mut arng, m, cfg.n);
                let mut srng = stream(cfg.seed, stream_id(p, i, j + 1));
                let inst = gen_block_instance(cfg, m, a, &mut srng);
                let ests = estimators
                    .iter()
                    .map(|e| e.estimate(&inst.system, &layouts))
                    .collect::<Result<Vec<_>>>()?;
                Ok((inst.x_true, ests))
            })
            .collect();
        let mut stats = PointStats {
            truths: Vec::new(),
            estimates: Vec::new(),
        };
        for r in results {
            let (x, e) = r?;
            stats.truths.push(x);
            stats.estimates.push(e);
        }
        summarize(&mut table, &param(rate), &names, stats, cfg.seed)?;
    }
    Ok(table)
}
