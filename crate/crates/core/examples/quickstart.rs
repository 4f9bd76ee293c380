//! Fit one problem with a handful of gross outliers and compare the
//! combined-noise solver with the plain RVM.
//!
//! ```text
//! cargo run --release --example quickstart
//! ```

use sdrvm::experiments::{gen_cs_instance, nmse, CsConfig};
use sdrvm::{fit_rbrvm, fit_rvm, fit_sdrvm, fit_sdrvm_sparse_dense, FitOptions, HyperPriors};

fn main() -> sdrvm::Result<()> {
    let cfg = CsConfig {
        n: 100,
        m: 60,
        k_signal: 8,
        k_noise: 3,
        ..Default::default()
    };
    let inst = gen_cs_instance(&cfg, 42)?;
    let (priors, opts) = (HyperPriors::default(), FitOptions::default());

    let truth: Vec<usize> = (0..cfg.n).filter(|&i| inst.x_true[i] != 0.0).collect();
    let outliers: Vec<usize> = (0..cfg.m).filter(|&j| inst.e_true[j] != 0.0).collect();
    println!("true support {truth:?}");
    println!("outliers at  {outliers:?}\n");

    let sd = fit_sdrvm(&inst.system, &priors, &opts)?;
    let sds = fit_sdrvm_sparse_dense(&inst.system, &priors, &opts)?;
    let rvm = fit_rvm(&inst.system, &priors, &opts)?;
    let rb = fit_rbrvm(&inst.system, &priors, &opts)?;

    let report = |name: &str, x: &nalgebra::DVector<f64>, iters: usize, secs: f64| -> sdrvm::Result<()> {
        let db = nmse([(&inst.x_true, x)])?;
        let support = x.iter().filter(|v| v.abs() > 1e-3).count();
        println!("{name:<9} NMSE {db:>7.2} dB  {support:>3} coefficients  {iters:>4} iterations  {:>6.1} ms", secs * 1e3);
        Ok(())
    };
    report("sdrvm", &sd.posterior.x_hat, sd.report.iterations, sd.report.elapsed_seconds)?;
    report("sdrvm-sd", &sds.posterior.x_hat, sds.report.iterations, sds.report.elapsed_seconds)?;
    report("rbrvm", &rb.posterior.x_hat, rb.report.iterations, rb.report.elapsed_seconds)?;
    report("rvm", &rvm.posterior.x_hat, rvm.report.iterations, rvm.report.elapsed_seconds)?;

    // small noise precisions mark the measurements the model treats as outliers
    let mut noisiest: Vec<(usize, f64)> = sd.state.beta.iter().copied().enumerate().collect();
    noisiest.sort_by(|a, b| a.1.total_cmp(&b.1));
    let flagged: Vec<usize> = noisiest.iter().take(outliers.len()).map(|p| p.0).collect();
    println!("\nlowest noise precisions at {flagged:?}");
    Ok(())
}
