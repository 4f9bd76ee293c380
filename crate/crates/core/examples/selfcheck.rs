//! Numerical checks of the identities behind the update rules, first as
//! shipped and then with a deliberately broken posterior mean.
//!
//! ```text
//! cargo run --release --example selfcheck -- [instances]
//! ```

use sdrvm::selfcheck::{run_selfcheck, Identity};

fn main() -> sdrvm::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    for perturb in [None, Some(Identity::PosteriorMean)] {
        match perturb {
            None => println!("unmodified:"),
            Some(id) => println!("\nwith {id} perturbed:"),
        }
        for o in run_selfcheck(trials, 11, perturb)? {
            let status = if o.passed() { "ok" } else { "FAILED" };
            println!("  {:<22} {:.2e} <= {:.0e}  {status}", o.identity.name(), o.max_error, o.tolerance);
        }
    }
    Ok(())
}
