//! Seeded random systems, matrices and interpolation data.
//!
//! Everything takes an explicit RNG so results are reproducible from a
//! single seed.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::numerics::{c64, complexify, CMatrix, CVector};
use crate::system::SecondOrderSystem;

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[−1, 1]`.
pub fn real_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

/// Real and imaginary parts uniform in `[−1, 1]`.
pub fn complex_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
}

pub fn complex_vector<R: Rng>(rng: &mut R, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| c64(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
}

/// `XXᵀ + shift·I`, symmetric positive definite.
pub fn spd_matrix<R: Rng>(rng: &mut R, n: usize, shift: f64) -> DMatrix<f64> {
    let x = real_matrix(rng, n, n);
    &x * x.transpose() + DMatrix::identity(n, n) * shift
}

/// Options for [`random_system`].
#[derive(Debug, Clone, Copy)]
pub struct SystemShape {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// Include a velocity output `C₁ ≠ 0`.
    pub velocity_output: bool,
}

/// Real system with symmetric positive definite `M`, `D`, `K` (so all
/// poles lie in the open left half-plane) and dense random `B`, `C₀`, `C₁`.
pub fn random_system<R: Rng>(rng: &mut R, shape: SystemShape) -> Result<SecondOrderSystem> {
    let SystemShape { n, p, q, velocity_output } = shape;
    let m = spd_matrix(rng, n, 1.0);
    let d = spd_matrix(rng, n, 0.1) * 0.5;
    let k = spd_matrix(rng, n, 0.5);
    let b = real_matrix(rng, n, p);
    let c0 = real_matrix(rng, q, n);
    let c1 = if velocity_output { real_matrix(rng, q, n) } else { DMatrix::zeros(q, n) };
    SecondOrderSystem::from_real(&m, &d, &k, &b, &c0, &c1)
}

/// `count` distinct points with real part in `[0.1, 1.5]` and imaginary
/// part in `[−2, 2]`, at least `min_gap` apart. Right-half-plane points
/// stay clear of the poles of the systems above.
pub fn right_half_plane_points<R: Rng>(rng: &mut R, count: usize, min_gap: f64) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = Vec::with_capacity(count);
    while pts.len() < count {
        let z = c64(rng.gen_range(0.1..=1.5), rng.gen_range(-2.0..=2.0));
        if pts.iter().all(|w| (w - z).norm() >= min_gap) {
            pts.push(z);
        }
    }
    pts
}

/// Real diagonalizable shift `T⁻¹ΛT` with `Λ` negative, entries of `Λ`
/// spaced at least `0.2` apart in `[−3, −0.1]`.
pub fn negative_real_shift<R: Rng>(rng: &mut R, nu: usize, diagonal: bool) -> CMatrix {
    let mut lambda: Vec<f64> = Vec::with_capacity(nu);
    while lambda.len() < nu {
        let x = rng.gen_range(-3.0..=-0.1);
        if lambda.iter().all(|y: &f64| (y - x).abs() >= 0.2) {
            lambda.push(x);
        }
    }
    let l = complexify(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda)));
    if diagonal {
        return l;
    }
    let t = complexify(&(DMatrix::identity(nu, nu) + real_matrix(rng, nu, nu) * 0.3));
    let t_inv = crate::numerics::inverse(&t).expect("near-identity similarity is invertible");
    t_inv * l * t
}
