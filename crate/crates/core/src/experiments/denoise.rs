//! Kernel-weighted local quadratic regression for impulse-noise removal.
//!
//! Every pixel is re-estimated from the patch around it: the patch values
//! are regressed on `[1, d, vech(d dᵀ)]` where `d` is the offset from the
//! centre, rows weighted by `√K`, and the intercept becomes the new pixel.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::image::{median_filter_3x3, mse, psnr_from_mse, salt_pepper, GrayImage};
use super::methods::{Estimator, Layouts, Method, Solver};
use super::rng::RNG_ALGORITHM;
use super::table::{param, ResultTable};
use crate::error::{Error, Result};
use crate::types::LinearSystem;

/// Asymmetry tolerated by [`vech`].
const VECH_SYMMETRY_TOL: f64 = 1e-12;

/// Half-vectorization of a symmetric 2×2 matrix: `[[a, b], [b, c]] ↦ (a, b, c)`.
pub fn vech(m: &Matrix2<f64>) -> Result<Vector3<f64>> {
    if (m[(0, 1)] - m[(1, 0)]).abs() > VECH_SYMMETRY_TOL {
        return Err(Error::NotSymmetric);
    }
    Ok(Vector3::new(m[(0, 0)], m[(0, 1)], m[(1, 1)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchModel {
    /// Odd patch side length.
    pub side: usize,
    /// Gaussian kernel radius `r`.
    pub radius: f64,
    /// Polynomial kernel degree `p`.
    pub degree: i32,
}

impl Default for PatchModel {
    fn default() -> Self {
        Self {
            side: 5,
            radius: 2.1,
            degree: 1,
        }
    }
}

/// Regressors per patch row: intercept, two linear, three quadratic terms.
pub const PATCH_REGRESSORS: usize = 6;

impl PatchModel {
    pub fn check(&self) -> Result<()> {
        if self.side % 2 == 0 {
            return Err(Error::InvalidConfig(format!("patch side {} must be odd", self.side)));
        }
        if !(self.radius > 0.0) {
            return Err(Error::InvalidConfig("kernel radius must be positive".into()));
        }
        Ok(())
    }

    fn half(&self) -> isize {
        (self.side / 2) as isize
    }

    /// Patch offsets in row-major order, centre included.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let h = self.half();
        (-h..=h).flat_map(|dr| (-h..=h).map(move |dc| (dr, dc))).collect()
    }

    /// `K(x, x_i) = exp(−‖x − x_i‖²/r²)(1 + xᵀx_i)^p` in patch coordinates,
    /// where the centre sits at the origin.
    pub fn kernel(&self, x: [f64; 2], xi: [f64; 2]) -> f64 {
        let d2 = (x[0] - xi[0]).powi(2) + (x[1] - xi[1]).powi(2);
        (-d2 / (self.radius * self.radius)).exp() * (1.0 + x[0] * xi[0] + x[1] * xi[1]).powi(self.degree)
    }

    /// Design rows `[1, dᵀ, vech(d dᵀ)ᵀ]` with `d = x − x_i`, already scaled
    /// by `√K`, and the matching weights.
    pub fn design(&self) -> (DMatrix<f64>, DVector<f64>) {
        let offs = self.offsets();
        let mut a = DMatrix::zeros(offs.len(), PATCH_REGRESSORS);
        let mut w = DVector::zeros(offs.len());
        for (i, &(dr, dc)) in offs.iter().enumerate() {
            let xi = [dr as f64, dc as f64];
            let d = [-xi[0], -xi[1]];
            let outer = Matrix2::new(d[0] * d[0], d[0] * d[1], d[1] * d[0], d[1] * d[1]);
            let q = vech(&outer).expect("outer product is symmetric");
            let s = self.kernel([0.0, 0.0], xi).sqrt();
            w[i] = s;
            let row = [1.0, d[0], d[1], q[0], q[1], q[2]];
            for (j, v) in row.iter().enumerate() {
                a[(i, j)] = s * v;
            }
        }
        (a, w)
    }
}

/// Replaces every pixel by the intercept of its patch regression, clamped
/// to `[0, 1]`.
pub fn denoise_image(img: &GrayImage, method: Method, model: &PatchModel) -> Result<GrayImage> {
    denoise_with(img, &Solver::new(method), model)
}

/// [`denoise_image`] with any estimator.
pub fn denoise_with(img: &GrayImage, est: &dyn Estimator, model: &PatchModel) -> Result<GrayImage> {
    model.check()?;
    let (a, w) = model.design();
    let offs = model.offsets();
    let (p, q) = (img.rows(), img.cols());
    let layouts = Layouts::default();
    let values: Vec<f64> = (0..p * q)
        .into_par_iter()
        .map(|k| {
            let (r, c) = ((k / q) as isize, (k % q) as isize);
            let y = DVector::from_iterator(
                offs.len(),
                offs.iter()
                    .zip(w.iter())
                    .map(|(&(dr, dc), s)| s * img.clamped(r + dr, c + dc)),
            );
            let system = LinearSystem::new(a.clone(), y)?;
            let fit = est.estimate(&system, &layouts)?;
            Ok(fit.x_hat[0].clamp(0.0, 1.0))
        })
        .collect::<Result<_>>()?;
    GrayImage::new(DMatrix::from_row_slice(p, q, &values))
}

/// A denoiser: the 3×3 median filter or a patch regression solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Denoiser {
    Median,
    Patch(Method),
}

impl fmt::Display for Denoiser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Denoiser::Median => f.write_str("median"),
            Denoiser::Patch(m) => m.fmt(f),
        }
    }
}

impl FromStr for Denoiser {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Denoiser::Median),
            other => other.parse().map(Denoiser::Patch),
        }
    }
}

impl Denoiser {
    pub fn apply(self, img: &GrayImage, model: &PatchModel) -> Result<GrayImage> {
        match self {
            Denoiser::Median => Ok(median_filter_3x3(img)),
            Denoiser::Patch(m) => denoise_image(img, m, model),
        }
    }
}

/// PSNR per noise level and denoiser, `realizations` noise draws each.
///
/// The squared error is averaged over realizations before taking the log,
/// and the `noisy` rows score the corrupted input itself.
pub fn run_denoise(
    clean: &GrayImage,
    rhos: &[f64],
    realizations: usize,
    seed: u64,
    denoisers: &[Denoiser],
    model: &PatchModel,
) -> Result<ResultTable> {
    if realizations == 0 {
        return Err(Error::InvalidConfig("need at least one noise realization".into()));
    }
    let mut table = ResultTable::default();
    table.meta.insert("rng".into(), RNG_ALGORITHM.into());
    table.meta.insert("experiment".into(), "denoise".into());
    for (pi, &rho) in rhos.iter().enumerate() {
        let mut noisy_mse = 0.0;
        let mut sums = vec![0.0; denoisers.len()];
        for t in 0..realizations {
            let noisy = salt_pepper(clean, rho, seed.wrapping_add(((pi as u64) << 32) | t as u64))?;
            noisy_mse += mse(clean, &noisy)?;
            for (k, d) in denoisers.iter().enumerate() {
                sums[k] += mse(clean, &d.apply(&noisy, model)?)?;
            }
        }
        let r = realizations as f64;
        let p = param(rho);
        table.push(p.clone(), "noisy", "psnr_db", psnr_from_mse(noisy_mse / r), realizations, seed);
        for (k, d) in denoisers.iter().enumerate() {
            table.push(p.clone(), d.to_string(), "psnr_db", psnr_from_mse(sums[k] / r), realizations, seed);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vech_cases() {
        assert_eq!(vech(&Matrix2::new(1.0, 2.0, 2.0, 3.0)).unwrap(), Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(vech(&Matrix2::identity()).unwrap(), Vector3::new(1.0, 0.0, 1.0));
        assert_eq!(vech(&Matrix2::zeros()).unwrap(), Vector3::zeros());
        assert_eq!(vech(&Matrix2::new(1.0, 2.0, 2.1, 3.0)), Err(Error::NotSymmetric));
    }

    #[test]
    fn design_shape_and_centre_row() {
        let (a, w) = PatchModel::default().design();
        assert_eq!(a.shape(), (25, 6));
        // centre pixel is row 12, zero offset, unit kernel
        assert_relative_eq!(w[12], 1.0);
        assert_eq!(a.row(12).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        // corner (−2, −2): d = (2, 2), K = exp(−8 / 2.1²)
        let s = (-8.0 / 4.41f64).exp().sqrt();
        assert_relative_eq!(a[(0, 0)], s, epsilon = 1e-15);
        assert_relative_eq!(a[(0, 4)], 4.0 * s, epsilon = 1e-15);
    }

    #[test]
    fn even_side_rejected() {
        let m = PatchModel {
            side: 4,
            ..Default::default()
        };
        assert!(matches!(m.check(), Err(Error::InvalidConfig(_))));
    }
}
