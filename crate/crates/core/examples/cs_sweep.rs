//! Recovery of sparse signals from measurements hit by a few gross outliers.
//!
//! ```text
//! cargo run --release --example cs_sweep -- [trials_per_axis]
//! ```

use sdrvm::experiments::{run_cs_sweep, CsConfig, Method};

fn main() -> sdrvm::Result<()> {
    let t: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let cfg = CsConfig {
        trials_matrices: t,
        trials_signals: t,
        methods: vec![Method::Rvm, Method::RbRvm, Method::SdRvm, Method::SdRvmSparseDense],
        ..Default::default()
    };
    let rates = [0.5, 0.7, 0.9];
    let table = run_cs_sweep(&cfg, &rates, 0.05)?;
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "m/n", "method", "nmse_db", "iters", "ms");
    for r in &rates {
        let p = format!("{r:.2}");
        for m in &cfg.methods {
            let get = |k| table.get(&p, m.name(), k).unwrap_or(f64::NAN);
            println!(
                "{p:>5} {:>10} {:>10.2} {:>10.1} {:>10.2}",
                m.name(),
                get("nmse_db"),
                get("mean_iterations"),
                1e3 * get("mean_seconds")
            );
        }
    }
    Ok(())
}
