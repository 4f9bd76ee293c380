//! Block-sparse recovery with known and unknown block positions.
//!
//! ```text
//! cargo run --release --example block_sweep -- [trials_per_axis]
//! ```

use sdrvm::experiments::{run_block_sweep, BlockConfig, BlockStructure, Method};

fn main() -> sdrvm::Result<()> {
    let t: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let rates = [0.4, 0.6];
    for (structure, methods) in [
        (BlockStructure::Known, vec![Method::SdRvmBlock, Method::SdRvm, Method::RbRvm]),
        (BlockStructure::Unknown, vec![Method::SdRvmOverlap, Method::SdRvm, Method::RbRvm]),
    ] {
        let cfg = BlockConfig {
            structure,
            trials_matrices: t,
            trials_signals: t,
            methods,
            ..Default::default()
        };
        let table = run_block_sweep(&cfg, &rates)?;
        println!("{structure:?} block positions");
        for r in &rates {
            let p = format!("{r:.2}");
            for m in &cfg.methods {
                let db = table.get(&p, m.name(), "nmse_db").unwrap_or(f64::NAN);
                println!("  m/n {p}  {:<14} {db:>7.2} dB", m.name());
            }
        }
    }
    Ok(())
}
