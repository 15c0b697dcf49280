#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use somor::moments::InterpolationSet;
use somor::numerics::{c64, CMatrix, CVector};
use somor::random::{self, Rng64, SystemShape};
use somor::SecondOrderSystem;

pub fn system(rng: &mut Rng64, n: usize, p: usize, q: usize, velocity: bool) -> SecondOrderSystem {
    random::random_system(rng, SystemShape { n, p, q, velocity_output: velocity }).unwrap()
}

pub fn input_set(rng: &mut Rng64, nu: usize, p: usize) -> (Vec<Complex64>, InterpolationSet) {
    let pts = random::right_half_plane_points(rng, nu, 0.2);
    let dirs: Vec<CVector> = (0..nu).map(|_| random::complex_vector(rng, p)).collect();
    let set = InterpolationSet::input_diagonal(&pts, &dirs).unwrap();
    (pts, set)
}

pub fn output_set(rng: &mut Rng64, nu: usize, q: usize) -> (Vec<Complex64>, InterpolationSet) {
    let pts = random::right_half_plane_points(rng, nu, 0.2);
    let dirs: Vec<CVector> = (0..nu).map(|_| random::complex_vector(rng, q)).collect();
    let set = InterpolationSet::output_diagonal(&pts, &dirs).unwrap();
    (pts, set)
}

pub fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    somor::numerics::relative_error(a, b)
}

/// Probe points in the right half-plane, away from every pole.
pub fn probes(rng: &mut Rng64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|_| c64(rng.gen_range(0.05..1.0), rng.gen_range(-3.0..3.0)))
        .collect()
}
