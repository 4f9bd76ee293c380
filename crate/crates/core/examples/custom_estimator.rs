//! Scoring an outside estimator next to the built-in solvers: ridge
//! regression plugged into the compressed-sensing sweep.
//!
//! ```text
//! cargo run --release --example custom_estimator
//! ```

use std::time::Instant;

use nalgebra::DMatrix;
use sdrvm::experiments::{run_cs_sweep_with, CsConfig, Estimate, Estimator, Layouts, Method, Solver};
use sdrvm::{spd_solve, LinearSystem};

struct Ridge {
    lambda: f64,
}

impl Estimator for Ridge {
    fn name(&self) -> String {
        format!("ridge-{}", self.lambda)
    }

    fn estimate(&self, system: &LinearSystem, _: &Layouts) -> sdrvm::Result<Estimate> {
        let t = Instant::now();
        let a = system.a();
        let gram = a.transpose() * a + DMatrix::identity(system.n(), system.n()) * self.lambda;
        let rhs = a.transpose() * system.y();
        let x = spd_solve(&gram, &DMatrix::from_column_slice(system.n(), 1, rhs.as_slice()))?.x;
        let seconds = t.elapsed().as_secs_f64();
        Ok(Estimate {
            x_hat: x.column(0).into_owned(),
            iterations: 1,
            seconds,
            iteration_seconds: vec![seconds],
        })
    }
}

fn main() -> sdrvm::Result<()> {
    let cfg = CsConfig {
        trials_matrices: 3,
        trials_signals: 3,
        ..Default::default()
    };
    let estimators: Vec<Box<dyn Estimator>> = vec![
        Box::new(Ridge { lambda: 0.1 }),
        Box::new(Ridge { lambda: 1.0 }),
        Box::new(Solver::new(Method::SdRvm)),
    ];
    let table = run_cs_sweep_with(&cfg, &[0.6], 0.05, &estimators)?;
    for e in &estimators {
        let db = table.get("0.60", &e.name(), "nmse_db").unwrap_or(f64::NAN);
        println!("{:<10} {db:>7.2} dB", e.name());
    }
    Ok(())
}
