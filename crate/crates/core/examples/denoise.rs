//! Salt-and-pepper removal on the bundled 64×64 crop: median filter against
//! the patch-regression solvers.
//!
//! ```text
//! cargo run --release --example denoise -- [rho] [realizations]
//! ```

use std::path::Path;

use sdrvm::experiments::{read_pgm, run_denoise, Denoiser, Method, PatchModel};

fn main() -> sdrvm::Result<()> {
    let mut args = std::env::args().skip(1);
    let rho: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let reps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let clean = read_pgm(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/camera64.pgm"))?;
    let denoisers = [
        Denoiser::Median,
        Denoiser::Patch(Method::Rvm),
        Denoiser::Patch(Method::RbRvm),
        Denoiser::Patch(Method::SdRvm),
        Denoiser::Patch(Method::SdRvmSparseDense),
    ];
    let t = std::time::Instant::now();
    let table = run_denoise(&clean, &[rho], reps, 7, &denoisers, &PatchModel::default())?;
    for row in &table.rows {
        println!("rho={} {:<10} PSNR {:.2} dB", row.sweep_param, row.method, row.value);
    }
    eprintln!("{:.1} s", t.elapsed().as_secs_f64());
    Ok(())
}
