//! Dense symmetric positive definite factorization.
//!
//! Every solver in the crate funnels its posterior covariance through
//! [`SpdFactor`], so the log-determinant used by the evidence comes out of the
//! same Cholesky factor as the posterior mean.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated by [`spd_solve`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Lower Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    l: DMatrix<f64>,
}

impl SpdFactor {
    /// Factor `m`, reading only its lower triangle.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        assert!(m.is_square(), "cholesky of a non-square matrix");
        let k = m.nrows();
        let mut a = m.clone();
        {
            let data = a.as_mut_slice();
            // right-looking, column-major
            for j in 0..k {
                let pivot = data[j * k + j];
                if !(pivot > 0.0) || !pivot.is_finite() {
                    return Err(Error::NotPositiveDefinite { pivot: j });
                }
                let d = pivot.sqrt();
                data[j * k + j] = d;
                let inv = 1.0 / d;
                for v in &mut data[j * k + j + 1..(j + 1) * k] {
                    *v *= inv;
                }
                for c in j + 1..k {
                    let lcj = data[j * k + c];
                    if lcj == 0.0 {
                        continue;
                    }
                    let (head, tail) = data.split_at_mut(c * k);
                    let src = &head[j * k + c..(j + 1) * k];
                    let dst = &mut tail[c..k];
                    for (t, s) in dst.iter_mut().zip(src) {
                        *t -= lcj * s;
                    }
                }
            }
        }
        a.fill_upper_triangle(0.0, 1);
        Ok(Self { l: a })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// `log det M = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `L Z = R`.
    pub fn forward(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        self.l
            .solve_lower_triangular(r)
            .expect("cholesky factor has a positive diagonal")
    }

    pub fn solve(&self, r: &DMatrix<f64>) -> DMatrix<f64> {
        let z = self.forward(r);
        self.l
            .tr_solve_lower_triangular(&z)
            .expect("cholesky factor has a positive diagonal")
    }

    pub fn solve_vec(&self, r: &DVector<f64>) -> DVector<f64> {
        let z = self
            .l
            .solve_lower_triangular(r)
            .expect("cholesky factor has a positive diagonal");
        self.l
            .tr_solve_lower_triangular(&z)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `L⁻¹`.
    pub fn l_inverse(&self) -> DMatrix<f64> {
        let k = self.dim();
        let l = self.l.as_slice();
        let mut x = DMatrix::zeros(k, k);
        let data = x.as_mut_slice();
        // column j of L⁻¹ vanishes above the diagonal, so each column is a
        // forward substitution over rows j.. only
        for j in 0..k {
            let col = &mut data[j * k..(j + 1) * k];
            col[j] = 1.0;
            for p in j..k {
                let v = col[p] / l[p * k + p];
                col[p] = v;
                if v != 0.0 {
                    for (t, s) in col[p + 1..].iter_mut().zip(&l[p * k + p + 1..(p + 1) * k]) {
                        *t -= v * s;
                    }
                }
            }
        }
        x
    }

    /// `M⁻¹ = L⁻ᵀ L⁻¹`, symmetrized.
    pub fn inverse(&self) -> DMatrix<f64> {
        let linv = self.l_inverse();
        let mut inv = linv.transpose() * &linv;
        let k = inv.nrows();
        for j in 0..k {
            for i in j + 1..k {
                let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = v;
                inv[(j, i)] = v;
            }
        }
        inv
    }
}

/// Result of [`spd_solve`]: the solution and `log det M`.
#[derive(Debug, Clone)]
pub struct SpdSolution {
    pub x: DMatrix<f64>,
    pub log_det: f64,
}

/// Solves `M X = R` for symmetric positive definite `M`.
pub fn spd_solve(m: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<SpdSolution> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "spd_solve needs a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if r.nrows() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, matrix has {}",
            r.nrows(),
            m.nrows()
        )));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let k = m.nrows();
    for j in 0..k {
        for i in j + 1..k {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let f = SpdFactor::new(m)?;
    Ok(SpdSolution {
        x: f.solve(r),
        log_det: f.log_det(),
    })
}
