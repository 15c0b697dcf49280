//! Frequency-response sweeps along the imaginary axis.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::numerics::c64;
use crate::par::{self, Execution};
use crate::system::SecondOrderSystem;

/// `count` points log-spaced over `[lo, hi]`, endpoints included.
pub fn log_grid(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            let step = (b - a) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        10f64.powf(a + step * i as f64)
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BodePoint {
    pub omega: f64,
    pub value: [f64; 2],
    pub mag_db: f64,
    pub phase_deg: f64,
}

/// `W(iω)` entry `(output, input)` over `omegas`, with the phase unwrapped
/// along the grid.
pub fn frequency_response(
    sys: &SecondOrderSystem,
    omegas: &[f64],
    output: usize,
    input: usize,
    exec: Execution,
) -> Result<Vec<BodePoint>> {
    let values: Vec<Complex64> = par::try_map(exec, omegas, |&w| {
        sys.eval_transfer(c64(0.0, w)).map(|m| m[(output, input)])
    })?;
    let phases = unwrap(&values.iter().map(|z| z.arg()).collect::<Vec<_>>());
    Ok(omegas
        .iter()
        .zip(&values)
        .zip(phases)
        .map(|((&omega, z), ph)| BodePoint {
            omega,
            value: [z.re, z.im],
            mag_db: 20.0 * z.norm().log10(),
            phase_deg: ph.to_degrees(),
        })
        .collect())
}

/// Removes `2π` jumps between consecutive phase samples.
pub fn unwrap(phases: &[f64]) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let delta = p - phases[i - 1];
            if delta > PI {
                offset -= TAU;
            } else if delta < -PI {
                offset += TAU;
            }
        }
        out.push(p + offset);
    }
    out
}

/// `max_ω | |Ŵ(iω)| − |W(iω)| | / |W(iω)|` over two responses on the same grid.
pub fn max_relative_magnitude_error(reference: &[BodePoint], other: &[BodePoint]) -> f64 {
    reference
        .iter()
        .zip(other)
        .map(|(r, o)| {
            let mr = r.value[0].hypot(r.value[1]);
            let mo = o.value[0].hypot(o.value[1]);
            (mo - mr).abs() / mr
        })
        .fold(0.0, f64::max)
}
