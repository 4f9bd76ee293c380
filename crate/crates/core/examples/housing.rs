//! Median house-price prediction on the bundled 506-row housing table.
//!
//! ```text
//! cargo run --release --example housing -- [rho] [trials]
//! ```

use std::path::Path;

use sdrvm::experiments::{load_housing, run_housing, Method};

fn main() -> sdrvm::Result<()> {
    let mut args = std::env::args().skip(1);
    let rho: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let trials: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let data = load_housing(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/boston.csv"))?;
    let methods = [Method::Rvm, Method::RbRvm, Method::SdRvm, Method::SdRvmSparseDense];
    let table = run_housing(&data, rho, trials, 7, &methods)?;
    let p = format!("{rho:.2}");
    println!("{} rows, training fraction {rho}, {trials} splits", data.len());
    for m in methods {
        let err = table.get(&p, m.name(), "mean_abs_error").unwrap_or(f64::NAN);
        let secs = table.get(&p, m.name(), "mean_seconds").unwrap_or(f64::NAN);
        println!("  {:<9} error {err:>6.3}  ({:.1} ms per fit)", m.name(), secs * 1e3);
    }
    Ok(())
}
