//! Reference computations shared by the integration tests. Nothing here
//! calls into the solvers' own linear algebra: covariances come from
//! nalgebra's LU inverse and quadratic minimizers from plain iteration.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sdrvm::{LinearSystem, PrecisionState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| gauss(rng))
}

pub fn unit_columns(mut a: DMatrix<f64>) -> DMatrix<f64> {
    for mut c in a.column_iter_mut() {
        let norm = c.norm();
        c /= norm;
    }
    a
}

pub fn random_vector(rng: &mut ChaCha8Rng, k: usize) -> DVector<f64> {
    DVector::from_fn(k, |_, _| gauss(rng))
}

/// Log-uniform on `[0.1, 10]`.
pub fn random_precisions(rng: &mut ChaCha8Rng, k: usize) -> DVector<f64> {
    DVector::from_fn(k, |_, _| 10f64.powf(rng.random_range(-1.0..1.0)))
}

pub fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (LinearSystem, PrecisionState) {
    let sys = LinearSystem::new(random_matrix(rng, m, n), random_vector(rng, m)).unwrap();
    let st = PrecisionState::componentwise(random_precisions(rng, n), random_precisions(rng, m));
    (sys, st)
}

pub fn diag(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}

/// `Σ = (Γ + AᵀBA)⁻¹` by LU.
pub fn sigma(a: &DMatrix<f64>, gamma: &DVector<f64>, beta: &DVector<f64>) -> DMatrix<f64> {
    (diag(gamma) + a.transpose() * diag(beta) * a).try_inverse().unwrap()
}

/// `x̂ = ΣAᵀBy`.
pub fn mean(a: &DMatrix<f64>, y: &DVector<f64>, gamma: &DVector<f64>, beta: &DVector<f64>) -> DVector<f64> {
    sigma(a, gamma, beta) * a.transpose() * diag(beta) * y
}

/// `C = B⁻¹ + AΓ⁻¹Aᵀ`.
pub fn marginal(a: &DMatrix<f64>, gamma: &DVector<f64>, beta: &DVector<f64>) -> DMatrix<f64> {
    diag(&beta.map(|b| 1.0 / b)) + a * diag(&gamma.map(|g| 1.0 / g)) * a.transpose()
}

pub fn quad_form(a: &DMatrix<f64>, y: &DVector<f64>, gamma: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let c = marginal(a, gamma, beta);
    y.dot(&(c.try_inverse().unwrap() * y))
}

/// `−(m/2) log 2π − ½ log det C − ½ yᵀC⁻¹y` plus the Gamma hyper-prior terms.
pub fn log_evidence(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    gamma: &DVector<f64>,
    beta: &DVector<f64>,
    priors: [f64; 4],
) -> f64 {
    let m = y.len() as f64;
    let c = marginal(a, gamma, beta);
    let log_det = c.clone().lu().determinant().ln();
    let quad = y.dot(&(c.try_inverse().unwrap() * y));
    let [pa, pb, pc, pd] = priors;
    let hyper: f64 = gamma.iter().map(|g| pa * g.ln() - pb * g).sum::<f64>()
        + beta.iter().map(|b| pc * b.ln() - pd * b).sum::<f64>();
    -0.5 * m * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad + hyper
}

/// Minimizer of `(y − Ax)ᵀB(y − Ax) + xᵀΓx` by steepest descent with exact
/// line search.
pub fn descent_minimizer(a: &DMatrix<f64>, y: &DVector<f64>, gamma: &DVector<f64>, beta: &DVector<f64>) -> DVector<f64> {
    let h = diag(gamma) + a.transpose() * diag(beta) * a;
    let g0 = a.transpose() * diag(beta) * y;
    let mut x = DVector::zeros(a.ncols());
    for _ in 0..200_000 {
        let r = &g0 - &h * &x;
        let rr = r.norm_squared();
        if rr < 1e-30 {
            break;
        }
        let step = rr / r.dot(&(&h * &r));
        x += step * r;
    }
    x
}

/// Central difference of `f` at `v` along coordinate `i`, relative step `1e-5`.
pub fn central_difference(v: &DVector<f64>, i: usize, f: impl Fn(&DVector<f64>) -> f64) -> f64 {
    let h = 1e-5 * v[i];
    let mut up = v.clone();
    let mut down = v.clone();
    up[i] += h;
    down[i] -= h;
    (f(&up) - f(&down)) / (2.0 * h)
}

pub fn rel_err(reference: &DVector<f64>, value: &DVector<f64>) -> f64 {
    (reference - value).amax() / reference.amax().max(1.0)
}

pub fn rel_scalar(reference: f64, value: f64) -> f64 {
    (reference - value).abs() / reference.abs().max(1.0)
}

/// Largest relative gap between two precision vectors, counting matching
/// `+∞` entries as equal.
pub fn precision_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| {
            if x.is_infinite() || y.is_infinite() {
                if x == y {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (x - y).abs() / x.abs().max(y.abs())
            }
        })
        .fold(0.0, f64::max)
}
