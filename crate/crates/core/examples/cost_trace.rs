//! Steps the componentwise updates by hand and prints, per iteration, the
//! log evidence and the log-sum surrogate the step minimizes.
//!
//! ```text
//! cargo run --release --example cost_trace -- [iterations]
//! ```

use sdrvm::experiments::{gen_cs_instance, CsConfig};
use sdrvm::{evidence, nonsymmetric_cost, posterior, update_beta, update_gamma, FitOptions, HyperPriors, PrecisionState};

fn main() -> sdrvm::Result<()> {
    let iters: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(25);
    let cfg = CsConfig {
        n: 60,
        m: 40,
        k_signal: 5,
        k_noise: 2,
        ..Default::default()
    };
    let sys = gen_cs_instance(&cfg, 5)?.system;
    let (priors, opts) = (HyperPriors::default(), FitOptions::default());
    let mut state = PrecisionState::initial(&sys);
    let mut prev = posterior(&sys, &state)?;
    println!("{:>4} {:>12} {:>12} {:>7}", "iter", "evidence", "cost", "active");
    for it in 0..iters {
        let mut next = update_gamma(&state, &prev, &priors, &opts);
        next.beta = update_beta(&sys, &state, &prev, &priors, &opts).beta;
        let post = posterior(&sys, &next)?;
        let cost = nonsymmetric_cost(&sys, &post, &prev.full_sigma(), &priors);
        println!(
            "{it:>4} {:>12.4} {cost:>12.4} {:>7}",
            evidence(&sys, &next, &priors)?,
            post.active.len()
        );
        state = next;
        prev = post;
    }
    Ok(())
}
