//! Acceptance suite: eight criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary so the verdicts are always printed. The sweeps
//! take tens of minutes in release mode on a single core.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use nalgebra::DVector;
use sdrvm::baselines::{rvm_initial, update_scalar_beta};
use sdrvm::block::{
    block_initial, update_block_beta, update_block_gamma, update_overlap_beta, update_overlap_gamma,
};
use sdrvm::experiments::*;
use sdrvm::{
    evidence, fit_sdrvm, fit_sdrvm_blocks, fit_sdrvm_sparse_dense, posterior, BlockLayout, FitOptions,
    HyperPriors, LayoutKind, LinearSystem, PrecisionState,
};

const SD: &str = "sdrvm-sd";
const SD_COMPONENTWISE: &str = "sdrvm";
const RB: &str = "rbrvm";
const RVM: &str = "rvm";

const IDENTITY_INSTANCES: usize = 200;
const FD_TOL: f64 = 1e-5;
const ALGEBRA_TOL: f64 = 1e-9;
const REDUCTION_TOL: f64 = 1e-10;
const RATES: [f64; 3] = [0.5, 0.7, 0.9];
const MIN_POINT_GAP_DB: f64 = 0.0;
const MIN_MEAN_GAP_DB: f64 = 0.5;
const NO_DEGRADATION_DB: f64 = 0.5;
const HOUSING_RVM_FACTOR: f64 = 3.0;
const HOUSING_RB_FACTOR: f64 = 1.1;
const EVIDENCE_INSTANCES: usize = 100;
const EVIDENCE_MIN_GROWTH: usize = 95;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

// ---------------------------------------------------------------- 1

/// Worst error of each identity over random `m, n ≤ 8` instances, using the
/// library posterior against the explicit marginal covariance.
fn identities() -> Verdict {
    let mut r = rng(2024);
    let mut worst = [0.0f64; 5];
    for _ in 0..IDENTITY_INSTANCES {
        let m = r.random_range(1..=8);
        let n = r.random_range(1..=8);
        let (sys, st) = random_problem(&mut r, m, n);
        let (a, y, g, b) = (sys.a(), sys.y(), &st.gamma, &st.beta);
        let post = posterior(&sys, &st).unwrap();

        // ∂/∂γ_i yᵀC⁻¹y = x̂_i²
        let fd = DVector::from_fn(n, |i, _| central_difference(g, i, |gg| quad_form(a, y, gg, b)));
        worst[0] = worst[0].max(rel_err(&fd, &post.x_hat.map(|x| x * x)));

        // ∂/∂β_j yᵀC⁻¹y = (y − Ax̂)_j²
        let fd = DVector::from_fn(m, |j, _| central_difference(b, j, |bb| quad_form(a, y, g, bb)));
        worst[1] = worst[1].max(rel_err(&fd, &post.residual(&sys).map(|e| e * e)));

        // log det C = log det Σ⁻¹ − Σ log γ − Σ log β
        let direct = marginal(a, g, b).lu().determinant().ln();
        let lemma = post.log_det_precision - g.iter().map(|v| v.ln()).sum::<f64>() - b.iter().map(|v| v.ln()).sum::<f64>();
        worst[2] = worst[2].max(rel_scalar(direct, lemma));

        // Γ⁻¹AᵀC⁻¹y = x̂
        let cinv_y = marginal(a, g, b).try_inverse().unwrap() * y;
        let lhs = (a.transpose() * &cinv_y).component_div(g);
        worst[3] = worst[3].max(rel_err(&lhs, &post.x_hat));

        // A_Iᵀ C⁻¹ y = γ_I x̂_I with one precision per contiguous block
        let mut gb = g.clone();
        let mut blocks = Vec::new();
        let mut start = 0;
        while start < n {
            let len = r.random_range(1..=(n - start).min(3));
            let v = random_precisions(&mut r, 1)[0];
            for i in start..start + len {
                gb[i] = v;
            }
            blocks.push(start..start + len);
            start += len;
        }
        let bpost = posterior(&sys, &PrecisionState::componentwise(gb.clone(), b.clone())).unwrap();
        let atz = a.transpose() * (marginal(a, &gb, b).try_inverse().unwrap() * y);
        for blk in blocks {
            let lhs = atz.rows(blk.start, blk.len()).into_owned();
            let rhs = bpost.x_hat.rows(blk.start, blk.len()) * gb[blk.start];
            worst[4] = worst[4].max(rel_err(&lhs, &rhs));
        }
    }
    let tol = [FD_TOL, FD_TOL, ALGEBRA_TOL, ALGEBRA_TOL, ALGEBRA_TOL];
    let names = ["gamma-derivative", "beta-derivative", "determinant-lemma", "posterior-mean", "block-posterior-mean"];
    let passed = worst.iter().zip(tol).all(|(w, t)| *w <= t);
    let detail = names
        .iter()
        .zip(worst)
        .zip(tol)
        .map(|((n, w), t)| format!("{n} {w:.1e}/{t:.0e}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(passed, format!("{IDENTITY_INSTANCES} instances: {detail}"))
}

use rand::Rng;

// ---------------------------------------------------------------- 2

fn reduction_problem(seed: u64, m: usize, n: usize) -> LinearSystem {
    let cfg = CsConfig {
        n,
        m,
        k_signal: 5,
        k_noise: 2,
        ..Default::default()
    };
    gen_cs_instance(&cfg, seed).unwrap().system
}

fn reductions() -> Verdict {
    let (p, o) = (HyperPriors::default(), FitOptions::default());
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();

    let mut bitwise = true;
    for seed in 0..5 {
        let sys = reduction_problem(seed, 35, 50);
        let c = fit_sdrvm(&sys, &p, &o).unwrap();
        let s = fit_sdrvm_blocks(&sys, &BlockLayout::singletons(50), &BlockLayout::singletons(35), &p, &o).unwrap();
        bitwise &= bits(&c.report.evidence_trace) == bits(&s.report.evidence_trace)
            && bits(c.posterior.x_hat.as_slice()) == bits(s.posterior.x_hat.as_slice())
            && bits(c.state.gamma.as_slice()) == bits(s.state.gamma.as_slice())
            && bits(c.state.beta.as_slice()) == bits(s.state.beta.as_slice());
    }

    let mut overlap_gap = 0.0f64;
    for seed in 0..5 {
        let sys = reduction_problem(100 + seed, 35, 50);
        let sig = BlockLayout::contiguous(50, 5).unwrap();
        let noi = BlockLayout::contiguous(35, 5).unwrap();
        let (sig_o, noi_o) = (sig.as_overlapping(), noi.as_overlapping());
        let mut st = block_initial(&sys, &sig, &noi);
        for _ in 0..200 {
            let post = posterior(&sys, &st).unwrap();
            let kg = update_block_gamma(&sig, &st, &post, &p, &o);
            let kb = update_block_beta(&sys, &noi, &st, &post, &p, &o);
            let og = update_overlap_gamma(&sig_o, &st, &post, &p, &o);
            let ob = update_overlap_beta(&sys, &noi_o, &st, &post, &p, &o);
            overlap_gap = overlap_gap
                .max(precision_gap(kg.tilde_gamma.as_ref().unwrap(), og.tilde_gamma.as_ref().unwrap()))
                .max(precision_gap(kb.tilde_beta.as_ref().unwrap(), ob.tilde_beta.as_ref().unwrap()));
            st = kg;
            st.beta = kb.beta;
            st.tilde_beta = kb.tilde_beta;
        }
    }

    // one noise step from the shared initialization, on instances of both
    // shapes; drift along whole fits is reported separately
    let full = |m: usize| BlockLayout::new(vec![(0..m).collect()], LayoutKind::DisjointPartition, m).unwrap();
    let scalar_step_gap = |sys: &LinearSystem, st: &PrecisionState| {
        let m = sys.m();
        let mut spread = PrecisionState::componentwise(st.gamma.clone(), DVector::from_element(m, st.beta[0]));
        spread.tilde_beta = Some(st.beta.clone());
        let post = posterior(sys, &spread).unwrap();
        let scalar = update_scalar_beta(sys, st, &post, &p, &o);
        let block = update_block_beta(sys, &full(m), &spread, &post, &p, &o);
        let mut next = sdrvm::update_gamma(st, &post, &p, &o);
        next.beta = scalar.beta.clone();
        (precision_gap(&scalar.beta, block.tilde_beta.as_ref().unwrap()), next)
    };
    let mut scalar_gap = 0.0f64;
    let mut r = rng(77);
    for k in 0..IDENTITY_INSTANCES {
        let (m, n) = if k % 2 == 0 { (35, 50) } else { (50, 35) };
        let sys = reduction_problem(200 + k as u64, m, n);
        let mut st = rvm_initial(&sys);
        st.gamma = random_precisions(&mut r, n);
        scalar_gap = scalar_gap.max(scalar_step_gap(&sys, &st).0);
    }
    let mut drift = 0.0f64;
    for seed in 0..5 {
        let sys = reduction_problem(200 + seed, 35, 50);
        let mut st = rvm_initial(&sys);
        for _ in 0..100 {
            let (gap, next) = scalar_step_gap(&sys, &st);
            drift = drift.max(gap);
            st = next;
        }
    }
    println!("      info: full-block scalar noise step gap along 100-iteration fits {drift:.1e}");

    let passed = bitwise && overlap_gap <= REDUCTION_TOL && scalar_gap <= REDUCTION_TOL;
    verdict(
        passed,
        format!(
            "singleton blocks bitwise {}, disjoint-as-overlapping step gap {overlap_gap:.1e}, full-block scalar noise single-step gap {scalar_gap:.1e} (tol {REDUCTION_TOL:.0e})",
            if bitwise { "identical" } else { "DIFFERENT" }
        ),
    )
}

// ---------------------------------------------------------------- 3, 4

fn sweep(outliers: f64) -> ResultTable {
    let cfg = CsConfig {
        n: 100,
        sdnr_db: 20.0,
        trials_matrices: 20,
        trials_signals: 20,
        methods: vec![Method::RbRvm, Method::SdRvmSparseDense, Method::SdRvm],
        ..Default::default()
    };
    run_cs_sweep(&cfg, &RATES, outliers).unwrap()
}

fn nmse_at(t: &ResultTable, rate: f64, method: &str) -> f64 {
    t.get(&format!("{rate:.2}"), method, "nmse_db").unwrap()
}

fn gaps(t: &ResultTable, method: &str) -> Vec<f64> {
    RATES.iter().map(|&r| nmse_at(t, r, RB) - nmse_at(t, r, method)).collect()
}

fn fmt_points(t: &ResultTable, method: &str) -> String {
    RATES
        .iter()
        .map(|&r| format!("m/n {r}: {:.2} vs {:.2} dB", nmse_at(t, r, method), nmse_at(t, r, RB)))
        .collect::<Vec<_>>()
        .join("; ")
}

fn outlier_sweep() -> Verdict {
    let t = sweep(0.05);
    let g = gaps(&t, SD);
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    let passed = g.iter().all(|v| *v >= MIN_POINT_GAP_DB) && mean >= MIN_MEAN_GAP_DB;
    let info = gaps(&t, SD_COMPONENTWISE);
    println!(
        "      info: componentwise sdrvm gaps over rbrvm {:?} dB",
        info.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
    verdict(
        passed,
        format!(
            "{SD} vs {RB}: {}; gaps {:?} dB, mean {mean:.2} dB (need each >= {MIN_POINT_GAP_DB}, mean >= {MIN_MEAN_GAP_DB})",
            fmt_points(&t, SD),
            g.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
    )
}

fn clean_sweep() -> Verdict {
    let t = sweep(0.0);
    let g = gaps(&t, SD);
    let passed = g.iter().all(|v| *v >= -NO_DEGRADATION_DB);
    let info = gaps(&t, SD_COMPONENTWISE);
    println!(
        "      info: componentwise sdrvm gaps over rbrvm {:?} dB",
        info.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
    verdict(
        passed,
        format!("{SD} vs {RB}: {} (need {SD} <= {RB} + {NO_DEGRADATION_DB} dB)", fmt_points(&t, SD)),
    )
}

// ---------------------------------------------------------------- 5

fn housing() -> Verdict {
    let d = load_housing(&data("boston.csv")).unwrap();
    let methods = [Method::Rvm, Method::RbRvm, Method::SdRvmSparseDense, Method::SdRvm];
    let t = run_housing(&d, 0.5, 100, 7, &methods).unwrap();
    let err = |m: &str| t.get("0.50", m, "mean_abs_error").unwrap();
    let secs = |m: &str| t.get("0.50", m, "mean_seconds").unwrap();
    let (rvm, rb, sd) = (err(RVM), err(RB), err(SD));
    let passed = rvm > HOUSING_RVM_FACTOR * sd && sd <= HOUSING_RB_FACTOR * rb && secs(SD) < secs(RB);
    println!(
        "      info: componentwise sdrvm error {:.3}, {:.3} s per fit",
        err(SD_COMPONENTWISE),
        secs(SD_COMPONENTWISE)
    );
    verdict(
        passed,
        format!(
            "errors rvm {rvm:.3}, rbrvm {rb:.3}, {SD} {sd:.3} (need rvm > {HOUSING_RVM_FACTOR}x and {SD} <= {HOUSING_RB_FACTOR}x rbrvm); fit time {SD} {:.3} s vs rbrvm {:.3} s",
            secs(SD),
            secs(RB)
        ),
    )
}

// ---------------------------------------------------------------- 6

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn per_iteration_cost() -> Verdict {
    let cfg = CsConfig {
        n: 100,
        m: 70,
        k_noise: CsConfig::outliers_for(70, 0.05),
        ..Default::default()
    };
    let mut times: [Vec<f64>; 3] = Default::default();
    let methods = [Method::SdRvmSparseDense, Method::RbRvm, Method::SdRvm];
    for seed in 0..10 {
        let inst = gen_cs_instance(&cfg, 500 + seed).unwrap();
        for (k, m) in methods.iter().enumerate() {
            let e = Solver::new(*m).estimate(&inst.system, &Layouts::default()).unwrap();
            times[k].extend(e.iteration_seconds);
        }
    }
    let [sd, rb, comp] = times.map(median);
    println!("      info: componentwise sdrvm median iteration {:.3} ms", comp * 1e3);
    verdict(
        sd < rb,
        format!(
            "median iteration {SD} {:.3} ms vs rbrvm {:.3} ms, ratio rbrvm/{SD} = {:.2}",
            sd * 1e3,
            rb * 1e3,
            rb / sd
        ),
    )
}

// ---------------------------------------------------------------- 7

fn denoising() -> Verdict {
    let clean = read_pgm(&data("camera64.pgm")).unwrap();
    let denoisers = [
        Denoiser::Median,
        Denoiser::Patch(Method::RbRvm),
        Denoiser::Patch(Method::SdRvmSparseDense),
        Denoiser::Patch(Method::SdRvm),
    ];
    let t = run_denoise(&clean, &[0.2, 0.05], 3, 7, &denoisers, &PatchModel::default()).unwrap();
    let ps = |rho: &str, m: &str| t.get(rho, m, "psnr_db").unwrap();
    let (med, rb, sd) = (ps("0.20", "median"), ps("0.20", RB), ps("0.20", SD));
    let (med_lo, sd_lo) = (ps("0.05", "median"), ps("0.05", SD));
    println!(
        "      info: componentwise sdrvm PSNR {:.2} dB at rho 0.2, {:.2} dB at rho 0.05",
        ps("0.20", SD_COMPONENTWISE),
        ps("0.05", SD_COMPONENTWISE)
    );
    let passed = sd >= rb && sd >= med && med_lo >= sd_lo;
    verdict(
        passed,
        format!(
            "rho 0.2: {SD} {sd:.2}, rbrvm {rb:.2}, median {med:.2} dB (need {SD} >= both); rho 0.05: median {med_lo:.2}, {SD} {sd_lo:.2} dB (need median >= {SD})"
        ),
    )
}

// ---------------------------------------------------------------- 8

fn evidence_growth() -> Verdict {
    let cfg = CsConfig {
        n: 100,
        m: 70,
        k_noise: CsConfig::outliers_for(70, 0.05),
        ..Default::default()
    };
    let (p, o) = (HyperPriors::default(), FitOptions::default());
    let mut grew = 0;
    let mut grew_sd = 0;
    for seed in 0..EVIDENCE_INSTANCES as u64 {
        let sys = gen_cs_instance(&cfg, 900 + seed).unwrap().system;
        let fit = fit_sdrvm(&sys, &p, &o).unwrap();
        if evidence(&sys, &fit.state, &p).unwrap() > fit.report.evidence_trace[0] {
            grew += 1;
        }
        let fit = fit_sdrvm_sparse_dense(&sys, &p, &o).unwrap();
        if evidence(&sys, &fit.state, &p).unwrap() > fit.report.evidence_trace[0] {
            grew_sd += 1;
        }
    }
    println!("      info: {SD} evidence grew in {grew_sd}/{EVIDENCE_INSTANCES}");
    verdict(
        grew >= EVIDENCE_MIN_GROWTH,
        format!("componentwise sdrvm evidence grew in {grew}/{EVIDENCE_INSTANCES} (need >= {EVIDENCE_MIN_GROWTH})"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("identity suite", identities),
        ("reduction equivalences", reductions),
        ("outlier sweep ordering", outlier_sweep),
        ("outlier-free no degradation", clean_sweep),
        ("housing regression", housing),
        ("per-iteration cost", per_iteration_cost),
        ("image denoising ordering", denoising),
        ("evidence growth", evidence_growth),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    let mut ran = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let t = Instant::now();
        let v = run();
        ran += 1;
        if !v.passed {
            failed += 1;
        }
        println!(
            "{} [{}] {name} ({:.1} s): {}",
            if v.passed { "PASS" } else { "FAIL" },
            k + 1,
            t.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {}/{ran} passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
