//! Moments of a second-order system from second-order Sylvester equations.
//!
//! Input side: `M Π S² + D Π S + K Π = B L`, moments `C₀Π + C₁ΠS`.
//! Output side: `Q² Υ M + Q Υ D + Υ K = R C₀ + Q R C₁`, moments `Υ B`.
//!
//! Both are solved through the companion embedding, where they become
//! standard Sylvester equations in `[Π; ΠS]` and `[·, ΥM]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    self, c64, ensure_finite, ensure_square, CMatrix, CVector, SylvesterMethod,
};
use crate::system::SecondOrderSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Input,
    Output,
}

/// Interpolation data: `(S, L)` on the input side, `(Q, R)` on the output side.
///
/// The direction matrix is `p×ν` for the input side and `ν×q` for the
/// output side. Construction checks observability of `(L, S)` or
/// controllability of `(Q, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationSet {
    shift: CMatrix,
    direction: CMatrix,
    side: Side,
}

impl InterpolationSet {
    /// `(L, S)` with `S` of size `ν×ν` and `L` of size `p×ν`.
    pub fn input(s: CMatrix, l: CMatrix) -> Result<Self> {
        ensure_finite(&s, "S")?;
        ensure_finite(&l, "L")?;
        ensure_square(&s, "S")?;
        let nu = s.nrows();
        if nu == 0 || l.ncols() != nu || l.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "L must be px{nu} with p >= 1 and S nonempty, got {}x{}",
                l.nrows(),
                l.ncols()
            )));
        }
        let rank = numerics::observability_rank(&l, &s);
        if rank < nu {
            return Err(Error::ObservabilityFailure { rank, expected: nu });
        }
        Ok(Self {
            shift: s,
            direction: l,
            side: Side::Input,
        })
    }

    /// `(Q, R)` with `Q` of size `ν×ν` and `R` of size `ν×q`.
    pub fn output(q: CMatrix, r: CMatrix) -> Result<Self> {
        ensure_finite(&q, "Q")?;
        ensure_finite(&r, "R")?;
        ensure_square(&q, "Q")?;
        let nu = q.nrows();
        if nu == 0 || r.nrows() != nu || r.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "R must be {nu}xq with q >= 1 and Q nonempty, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        let rank = numerics::controllability_rank(&q, &r);
        if rank < nu {
            return Err(Error::ControllabilityFailure { rank, expected: nu });
        }
        Ok(Self {
            shift: q,
            direction: r,
            side: Side::Output,
        })
    }

    /// Diagonal input set: `S = diag(points)`, column `i` of `L` is `dirs[i]`.
    pub fn input_diagonal(points: &[Complex64], dirs: &[CVector]) -> Result<Self> {
        check_count(points, dirs)?;
        let p = dirs.first().map_or(0, |d| d.len());
        let mut l = CMatrix::zeros(p, points.len());
        for (i, d) in dirs.iter().enumerate() {
            if d.len() != p {
                return Err(Error::DimensionMismatch("directions differ in length".into()));
            }
            l.set_column(i, d);
        }
        Self::input(numerics::diag(points), l)
    }

    /// Diagonal output set: `Q = diag(points)`, row `j` of `R` is `dirs[j]ᵀ`.
    pub fn output_diagonal(points: &[Complex64], dirs: &[CVector]) -> Result<Self> {
        check_count(points, dirs)?;
        let q = dirs.first().map_or(0, |d| d.len());
        let mut r = CMatrix::zeros(points.len(), q);
        for (j, d) in dirs.iter().enumerate() {
            if d.len() != q {
                return Err(Error::DimensionMismatch("directions differ in length".into()));
            }
            r.set_row(j, &d.transpose());
        }
        Self::output(numerics::diag(points), r)
    }

    /// `S` or `Q`.
    pub fn shift(&self) -> &CMatrix {
        &self.shift
    }

    /// `L` or `R`.
    pub fn direction(&self) -> &CMatrix {
        &self.direction
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// `ν`.
    pub fn order(&self) -> usize {
        self.shift.nrows()
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        numerics::eigenvalues(&self.shift)
    }

    /// Diagonal of the shift when it is a diagonal matrix.
    pub fn diagonal_points(&self) -> Option<Vec<Complex64>> {
        numerics::is_diagonal(&self.shift).then(|| self.shift.diagonal().iter().copied().collect())
    }

    fn check_system(&self, sys: &SecondOrderSystem) -> Result<()> {
        match self.side {
            Side::Input if self.direction.nrows() != sys.p() => Err(Error::DimensionMismatch(
                format!("L has {} rows but the system has {} inputs", self.direction.nrows(), sys.p()),
            )),
            Side::Output if self.direction.ncols() != sys.q() => Err(Error::DimensionMismatch(
                format!(
                    "R has {} columns but the system has {} outputs",
                    self.direction.ncols(),
                    sys.q()
                ),
            )),
            _ => Ok(()),
        }
    }
}

fn check_count(points: &[Complex64], dirs: &[CVector]) -> Result<()> {
    if points.len() != dirs.len() || points.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} points but {} directions",
            points.len(),
            dirs.len()
        )));
    }
    Ok(())
}

/// Jordan-block input set at a single point: `S̄ = s⋆I + N` (ones on the
/// superdiagonal) of size `size`, and `L̄ = [l₀, 0, …, 0]`.
///
/// With this set, column `k` of `Π` is `(1/k!) dᵏ(Ms² + Ds + K)⁻¹/dsᵏ · B l₀`.
pub fn jordan_set(s_star: Complex64, size: usize, l0: &CVector) -> Result<InterpolationSet> {
    if l0.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::ZeroDirection);
    }
    if size == 0 {
        return Err(Error::InvalidParameter("Jordan set needs at least one moment".into()));
    }
    let mut s = CMatrix::identity(size, size) * s_star;
    for k in 1..size {
        s[(k - 1, k)] = c64(1.0, 0.0);
    }
    let mut l = CMatrix::zeros(l0.len(), size);
    l.set_column(0, l0);
    InterpolationSet::input(s, l)
}

/// Output-side Jordan set: `Q̄ = z⋆I + Nᵀ` (ones on the subdiagonal) and
/// `R̄ = [r₀ᵀ; 0; …; 0]`.
pub fn jordan_set_output(z_star: Complex64, size: usize, r0: &CVector) -> Result<InterpolationSet> {
    let input = jordan_set(z_star, size, r0)?;
    InterpolationSet::output(input.shift.transpose(), input.direction.transpose())
}

/// `Φ = diag(1, −1, 1, …)` of size `size`.
pub fn sign_matrix(size: usize) -> CMatrix {
    let signs: Vec<Complex64> = (0..size)
        .map(|k| c64(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0))
        .collect();
    numerics::diag(&signs)
}

/// `Π` (input side, `n×ν`) or `Υ` (output side, `ν×n`) with its moments.
#[derive(Debug, Clone)]
pub struct MomentSolution {
    pub basis: CMatrix,
    /// `C₀Π + C₁ΠS` (`q×ν`) or `ΥB` (`ν×p`), unsigned.
    pub moment_matrix: CMatrix,
    pub side: Side,
    /// Relative residual of the defining second-order Sylvester equation.
    pub residual: f64,
}

impl MomentSolution {
    /// `Φ` matching the order of this solution.
    pub fn sign_matrix(&self) -> CMatrix {
        let nu = match self.side {
            Side::Input => self.basis.ncols(),
            Side::Output => self.basis.nrows(),
        };
        sign_matrix(nu)
    }
}

fn solve_embedded_pi(
    sys: &SecondOrderSystem,
    set: &InterpolationSet,
    method: SylvesterMethod,
) -> Result<CMatrix> {
    let fo = sys.to_first_order()?;
    let rhs = -(&fo.b * &set.direction);
    let tilde = numerics::solve_sylvester_known_spectrum(&fo.a, sys.poles()?, &set.shift, &rhs, method)?;
    Ok(tilde.rows(0, sys.n()).into_owned())
}

fn solve_embedded_upsilon(
    sys: &SecondOrderSystem,
    set: &InterpolationSet,
    method: SylvesterMethod,
) -> Result<CMatrix> {
    let n = sys.n();
    let fo = sys.to_first_order()?;
    // Q Υ̃ − Υ̃ A = R C̃ transposed: Aᵀ Y − Y Qᵀ = −(R C̃)ᵀ with Y = Υ̃ᵀ.
    let rhs = -(&set.direction * &fo.c).transpose();
    let y = numerics::solve_sylvester_known_spectrum(
        &fo.a.transpose(),
        sys.poles()?,
        &set.shift.transpose(),
        &rhs,
        method,
    )?;
    // Bottom block of Y is (ΥM)ᵀ = Mᵀ Υᵀ.
    let upsilon_t = numerics::solve(&sys.m().transpose(), &y.rows(n, n).into_owned())?;
    Ok(upsilon_t.transpose())
}

fn require_side(set: &InterpolationSet, side: Side) -> Result<()> {
    if set.side == side {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "expected an {side:?}-side interpolation set"
        )))
    }
}

/// Relative residual of `M Π S² + D Π S + K Π = B L`.
pub fn pi_residual(sys: &SecondOrderSystem, s: &CMatrix, l: &CMatrix, pi: &CMatrix) -> f64 {
    let ps = pi * s;
    let lhs = sys.m() * &ps * s + sys.d() * &ps + sys.k() * pi;
    let rhs = sys.b() * l;
    let sn = s.norm();
    let scale = rhs.norm() + (sys.m().norm() * sn * sn + sys.d().norm() * sn + sys.k().norm()) * pi.norm();
    relative(&(lhs - rhs), scale)
}

/// Relative residual of `Q² Υ M + Q Υ D + Υ K = R C₀ + Q R C₁`.
pub fn upsilon_residual(sys: &SecondOrderSystem, q: &CMatrix, r: &CMatrix, upsilon: &CMatrix) -> f64 {
    let qu = q * upsilon;
    let lhs = q * &qu * sys.m() + &qu * sys.d() + upsilon * sys.k();
    let rhs = r * sys.c0() + q * r * sys.c1();
    let qn = q.norm();
    let scale =
        rhs.norm() + (sys.m().norm() * qn * qn + sys.d().norm() * qn + sys.k().norm()) * upsilon.norm();
    relative(&(lhs - rhs), scale)
}

fn relative(diff: &CMatrix, scale: f64) -> f64 {
    if scale > 0.0 {
        diff.norm() / scale
    } else {
        diff.norm()
    }
}

/// Solves `M Π S² + D Π S + K Π = B L` for `Π` (`n×ν`).
pub fn solve_pi(sys: &SecondOrderSystem, set: &InterpolationSet) -> Result<CMatrix> {
    solve_pi_with(sys, set, SylvesterMethod::Auto)
}

pub fn solve_pi_with(
    sys: &SecondOrderSystem,
    set: &InterpolationSet,
    method: SylvesterMethod,
) -> Result<CMatrix> {
    require_side(set, Side::Input)?;
    set.check_system(sys)?;
    solve_embedded_pi(sys, set, method)
}

/// Solves `Q² Υ M + Q Υ D + Υ K = R C₀ + Q R C₁` for `Υ` (`ν×n`).
pub fn solve_upsilon(sys: &SecondOrderSystem, set: &InterpolationSet) -> Result<CMatrix> {
    solve_upsilon_with(sys, set, SylvesterMethod::Auto)
}

pub fn solve_upsilon_with(
    sys: &SecondOrderSystem,
    set: &InterpolationSet,
    method: SylvesterMethod,
) -> Result<CMatrix> {
    require_side(set, Side::Output)?;
    set.check_system(sys)?;
    solve_embedded_upsilon(sys, set, method)
}

/// `Π` together with `C₀Π + C₁ΠS` and the equation residual.
pub fn input_moment_solution(sys: &SecondOrderSystem, set: &InterpolationSet) -> Result<MomentSolution> {
    let pi = solve_pi(sys, set)?;
    let moment_matrix = sys.c0() * &pi + sys.c1() * &pi * &set.shift;
    let residual = pi_residual(sys, &set.shift, &set.direction, &pi);
    Ok(MomentSolution {
        basis: pi,
        moment_matrix,
        side: Side::Input,
        residual,
    })
}

/// `Υ` together with `ΥB` and the equation residual.
pub fn output_moment_solution(sys: &SecondOrderSystem, set: &InterpolationSet) -> Result<MomentSolution> {
    let upsilon = solve_upsilon(sys, set)?;
    let moment_matrix = &upsilon * sys.b();
    let residual = upsilon_residual(sys, &set.shift, &set.direction, &upsilon);
    Ok(MomentSolution {
        basis: upsilon,
        moment_matrix,
        side: Side::Output,
        residual,
    })
}

/// `C₀Π + C₁ΠS` (`q×ν`); for diagonal `S`, column `i` is `W(sᵢ) lᵢ`.
pub fn input_moments(sys: &SecondOrderSystem, set: &InterpolationSet) -> Result<CMatrix> {
    Ok(input_moment_solution(sys, set)?.moment_matrix)
}

/// `ΥB` (`ν×p`); for diagonal `Q`, row `j` is `Rⱼ W(qⱼ)`.
pub fn output_moments(sys: &SecondOrderSystem, set: &InterpolationSet) -> Result<CMatrix> {
    Ok(output_moment_solution(sys, set)?.moment_matrix)
}

/// `ηₖ(s⋆) = (−1)ᵏ/k! · W⁽ᵏ⁾(s⋆)` for `k = 0..=up_to`, from the
/// derivative recursion rather than any Sylvester equation.
pub fn moments_oracle(sys: &SecondOrderSystem, s_star: Complex64, up_to: usize) -> Result<Vec<CMatrix>> {
    let derivs = sys.transfer_derivatives(s_star, up_to)?;
    let mut factorial = 1.0;
    Ok(derivs
        .into_iter()
        .enumerate()
        .map(|(k, w)| {
            if k > 0 {
                factorial *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            w * c64(sign / factorial, 0.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::msd_benchmark;
    use nalgebra::DMatrix;

    fn unit_scalar() -> SecondOrderSystem {
        let one = DMatrix::from_element(1, 1, 1.0);
        SecondOrderSystem::from_real(&one, &one, &one, &one, &one, &DMatrix::zeros(1, 1)).unwrap()
    }

    fn one() -> CMatrix {
        CMatrix::from_element(1, 1, c64(1.0, 0.0))
    }

    #[test]
    fn scalar_pi_at_zero() {
        let set = InterpolationSet::input(CMatrix::zeros(1, 1), one()).unwrap();
        let pi = solve_pi(&unit_scalar(), &set).unwrap();
        assert!((pi[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn scalar_upsilon_at_zero() {
        let set = InterpolationSet::output(CMatrix::zeros(1, 1), one()).unwrap();
        let ups = solve_upsilon(&unit_scalar(), &set).unwrap();
        assert!((ups[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn scalar_moments_at_zero_are_dc_gain() {
        let sys = unit_scalar();
        let inp = InterpolationSet::input(CMatrix::zeros(1, 1), one()).unwrap();
        let out = InterpolationSet::output(CMatrix::zeros(1, 1), one()).unwrap();
        assert!((input_moments(&sys, &inp).unwrap()[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
        assert!((output_moments(&sys, &out).unwrap()[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn scalar_first_moment_oracle() {
        let eta = moments_oracle(&unit_scalar(), c64(0.0, 0.0), 1).unwrap();
        assert!((eta[0][(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!((eta[1][(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_outputs_give_zero_moments() {
        let sys = msd_benchmark(4, 1.0, 0.1, 1.5)
            .unwrap()
            .with_outputs(CMatrix::zeros(1, 4), CMatrix::zeros(1, 4))
            .unwrap();
        let set = InterpolationSet::input_diagonal(
            &[c64(0.2, 0.5), c64(0.3, -1.0)],
            &vec![CVector::from_element(1, c64(1.0, 0.0)); 2],
        )
        .unwrap();
        assert_eq!(input_moments(&sys, &set).unwrap().norm(), 0.0);
    }

    #[test]
    fn unobservable_pair_rejected() {
        let s = numerics::diag(&[c64(1.0, 0.0), c64(1.0, 0.0)]);
        let l = CMatrix::from_element(1, 2, c64(1.0, 0.0));
        assert_eq!(
            InterpolationSet::input(s, l).unwrap_err(),
            Error::ObservabilityFailure { rank: 1, expected: 2 }
        );
    }

    #[test]
    fn uncontrollable_pair_rejected() {
        let q = numerics::diag(&[c64(1.0, 0.0), c64(2.0, 0.0)]);
        let mut r = CMatrix::zeros(2, 1);
        r[(0, 0)] = c64(1.0, 0.0);
        assert_eq!(
            InterpolationSet::output(q, r).unwrap_err(),
            Error::ControllabilityFailure { rank: 1, expected: 2 }
        );
    }

    #[test]
    fn jordan_structure() {
        let l0 = CVector::from_element(1, c64(2.0, 0.0));
        let set = jordan_set(c64(0.5, 1.0), 1, &l0).unwrap();
        assert_eq!(set.shift()[(0, 0)], c64(0.5, 1.0));
        assert_eq!(set.direction()[(0, 0)], c64(2.0, 0.0));
        let set = jordan_set(c64(0.5, 1.0), 3, &l0).unwrap();
        let s = set.shift();
        assert_eq!(s[(0, 1)], c64(1.0, 0.0));
        assert_eq!(s[(1, 2)], c64(1.0, 0.0));
        assert_eq!(s[(0, 2)], c64(0.0, 0.0));
        assert_eq!(s[(1, 0)], c64(0.0, 0.0));
        assert_eq!(set.direction()[(0, 1)], c64(0.0, 0.0));
        assert_eq!(
            jordan_set(c64(0.0, 0.0), 2, &CVector::zeros(1)).unwrap_err(),
            Error::ZeroDirection
        );
    }

    #[test]
    fn sign_matrix_alternates() {
        let phi = sign_matrix(3);
        assert_eq!(phi[(0, 0)], c64(1.0, 0.0));
        assert_eq!(phi[(1, 1)], c64(-1.0, 0.0));
        assert_eq!(phi[(2, 2)], c64(1.0, 0.0));
    }

    #[test]
    fn spectral_overlap_with_poles() {
        let sys = unit_scalar();
        let pole = sys.poles().unwrap()[0];
        let set = InterpolationSet::input(CMatrix::from_element(1, 1, pole), one()).unwrap();
        assert_eq!(solve_pi(&sys, &set).unwrap_err().name(), "SpectraOverlap");
    }

    #[test]
    fn side_mismatch_is_reported() {
        let set = InterpolationSet::output(CMatrix::zeros(1, 1), one()).unwrap();
        assert_eq!(solve_pi(&unit_scalar(), &set).unwrap_err().name(), "InvalidParameter");
    }
}
