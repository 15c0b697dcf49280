//! The second-order model `M ẍ + D ẋ + K x = B u`, `y = C₀ x + C₁ ẋ`.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    self, c64, complexify, ensure_finite, ensure_shape, ensure_square, CMatrix,
};

/// Largest derivative order [`SecondOrderSystem::eval_transfer_derivative`] accepts.
pub const MAX_DERIVATIVE_ORDER: usize = 8;

/// Relative distance to a pole below which evaluation is refused.
pub const NEAR_POLE_TOL: f64 = 1e-10;

/// Immutable second-order system with complex coefficients.
///
/// Full-order models are real in practice, but reduced models built from
/// complex interpolation data are complex and share this type. The leading
/// coefficient may be singular (some interpolant families produce that);
/// only a regular pencil is required, and the few operations that need
/// `M⁻¹` report [`Error::SingularMass`].
#[derive(Debug, Clone)]
pub struct SecondOrderSystem {
    m: CMatrix,
    d: CMatrix,
    k: CMatrix,
    b: CMatrix,
    c0: CMatrix,
    c1: CMatrix,
    poles: OnceLock<Result<Vec<Complex64>>>,
}

/// `W(s)` at one complex frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySample {
    pub s: Complex64,
    pub value: CMatrix,
}

/// `A = [[0, I], [−M⁻¹K, −M⁻¹D]]`, `B̃ = [0; M⁻¹B]`, `C̃ = [C₀, C₁]`.
#[derive(Debug, Clone)]
pub struct FirstOrderRealization {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
}

impl FirstOrderRealization {
    /// `C̃ (sI − A)⁻¹ B̃`.
    pub fn eval_transfer(&self, s: Complex64) -> Result<CMatrix> {
        let n = self.a.nrows();
        let shifted = CMatrix::identity(n, n) * s - &self.a;
        let x = shifted
            .lu()
            .solve(&self.b)
            .ok_or(Error::NearPole { re: s.re, im: s.im })?;
        Ok(&self.c * x)
    }
}

impl SecondOrderSystem {
    /// Validates shapes, finiteness and pencil regularity.
    pub fn new(
        m: CMatrix,
        d: CMatrix,
        k: CMatrix,
        b: CMatrix,
        c0: CMatrix,
        c1: CMatrix,
    ) -> Result<Self> {
        for (x, name) in [
            (&m, "M"),
            (&d, "D"),
            (&k, "K"),
            (&b, "B"),
            (&c0, "C0"),
            (&c1, "C1"),
        ] {
            ensure_finite(x, name)?;
        }
        ensure_square(&m, "M")?;
        let n = m.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch("system order must be at least 1".into()));
        }
        ensure_shape(&d, n, n, "D")?;
        ensure_shape(&k, n, n, "K")?;
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "B must be {n}xp with p >= 1, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        if c0.ncols() != n || c0.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "C0 must be qx{n} with q >= 1, got {}x{}",
                c0.nrows(),
                c0.ncols()
            )));
        }
        ensure_shape(&c1, c0.nrows(), n, "C1")?;
        if !numerics::pencil_is_regular(&m, &d, &k) {
            return Err(Error::PencilDegenerate(
                "det(M s² + D s + K) vanishes identically".into(),
            ));
        }
        Ok(Self {
            m,
            d,
            k,
            b,
            c0,
            c1,
            poles: OnceLock::new(),
        })
    }

    pub fn from_real(
        m: &DMatrix<f64>,
        d: &DMatrix<f64>,
        k: &DMatrix<f64>,
        b: &DMatrix<f64>,
        c0: &DMatrix<f64>,
        c1: &DMatrix<f64>,
    ) -> Result<Self> {
        Self::new(
            complexify(m),
            complexify(d),
            complexify(k),
            complexify(b),
            complexify(c0),
            complexify(c1),
        )
    }

    /// Same dynamics with a different output map.
    pub fn with_outputs(&self, c0: CMatrix, c1: CMatrix) -> Result<Self> {
        Self::new(
            self.m.clone(),
            self.d.clone(),
            self.k.clone(),
            self.b.clone(),
            c0,
            c1,
        )
    }

    /// Same dynamics with a different input map.
    pub fn with_input(&self, b: CMatrix) -> Result<Self> {
        Self::new(
            self.m.clone(),
            self.d.clone(),
            self.k.clone(),
            b,
            self.c0.clone(),
            self.c1.clone(),
        )
    }

    pub fn m(&self) -> &CMatrix {
        &self.m
    }
    pub fn d(&self) -> &CMatrix {
        &self.d
    }
    pub fn k(&self) -> &CMatrix {
        &self.k
    }
    pub fn b(&self) -> &CMatrix {
        &self.b
    }
    pub fn c0(&self) -> &CMatrix {
        &self.c0
    }
    pub fn c1(&self) -> &CMatrix {
        &self.c1
    }
    /// State dimension.
    pub fn n(&self) -> usize {
        self.m.nrows()
    }
    /// Number of inputs.
    pub fn p(&self) -> usize {
        self.b.ncols()
    }
    /// Number of outputs.
    pub fn q(&self) -> usize {
        self.c0.nrows()
    }

    /// True when every coefficient has zero imaginary part.
    pub fn is_real(&self) -> bool {
        [&self.m, &self.d, &self.k, &self.b, &self.c0, &self.c1]
            .iter()
            .all(|x| x.iter().all(|z| z.im == 0.0))
    }

    /// Finite roots of `det(M s² + D s + K)`, computed once and cached.
    pub fn poles(&self) -> Result<&[Complex64]> {
        self.poles
            .get_or_init(|| numerics::pencil_eigenvalues(&self.m, &self.d, &self.k))
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    /// Largest real part over the finite poles (`−∞` if there are none).
    pub fn max_pole_real_part(&self) -> Result<f64> {
        Ok(self
            .poles()?
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// `M s² + D s + K`.
    pub fn pencil_at(&self, s: Complex64) -> CMatrix {
        numerics::eval_pencil(&self.m, &self.d, &self.k, s)
    }

    fn ensure_off_poles(&self, s: Complex64) -> Result<()> {
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::NonFinite("s"));
        }
        let gap = numerics::min_pairwise_distance(self.poles()?, &[s]);
        if gap < NEAR_POLE_TOL * (1.0 + s.norm()) {
            Err(Error::NearPole { re: s.re, im: s.im })
        } else {
            Ok(())
        }
    }

    /// `(Ms² + Ds + K)⁻¹ rhs` after the near-pole check.
    pub(crate) fn resolvent_solve(&self, s: Complex64, rhs: &CMatrix) -> Result<CMatrix> {
        self.ensure_off_poles(s)?;
        self.pencil_at(s)
            .lu()
            .solve(rhs)
            .ok_or(Error::NearPole { re: s.re, im: s.im })
    }

    /// `(C₁s + C₀)(Ms² + Ds + K)⁻¹B`.
    pub fn eval_transfer(&self, s: Complex64) -> Result<CMatrix> {
        let x = self.resolvent_solve(s, &self.b)?;
        Ok((&self.c0 + &self.c1 * s) * x)
    }

    pub fn sample(&self, s: Complex64) -> Result<FrequencySample> {
        Ok(FrequencySample {
            s,
            value: self.eval_transfer(s)?,
        })
    }

    /// `dᵏW/dsᵏ` at `s`; `k = 0` gives `W(s)`.
    ///
    /// With `F = (Ms² + Ds + K)⁻¹` and `X_j = (dʲF/dsʲ) B`, differentiating
    /// `F⁻¹F = I` gives `X_j = −F[j(2Ms + D)X_{j−1} + j(j−1) M X_{j−2}]`, so
    /// a single LU factorization serves every order.
    pub fn eval_transfer_derivative(&self, s: Complex64, k: usize) -> Result<CMatrix> {
        Ok(self
            .transfer_derivatives(s, k)?
            .pop()
            .expect("at least one order"))
    }

    /// `[W(s), W′(s), …, W⁽ᵏ⁾(s)]`.
    pub fn transfer_derivatives(&self, s: Complex64, k: usize) -> Result<Vec<CMatrix>> {
        if k > MAX_DERIVATIVE_ORDER {
            return Err(Error::OrderTooHigh(k));
        }
        self.ensure_off_poles(s)?;
        let lu = self.pencil_at(s).lu();
        let near = Error::NearPole { re: s.re, im: s.im };
        let dp = &self.m * (s * 2.0) + &self.d;
        let mut xs: Vec<CMatrix> = Vec::with_capacity(k + 1);
        xs.push(lu.solve(&self.b).ok_or_else(|| near.clone())?);
        for j in 1..=k {
            let jf = j as f64;
            let mut rhs = &dp * &xs[j - 1] * c64(-jf, 0.0);
            if j >= 2 {
                rhs -= &self.m * &xs[j - 2] * c64(jf * (jf - 1.0), 0.0);
            }
            xs.push(lu.solve(&rhs).ok_or_else(|| near.clone())?);
        }
        let out_map = &self.c0 + &self.c1 * s;
        Ok((0..=k)
            .map(|j| {
                let mut w = &out_map * &xs[j];
                if j >= 1 {
                    w += &self.c1 * &xs[j - 1] * c64(j as f64, 0.0);
                }
                w
            })
            .collect())
    }

    /// Companion-form first-order realization.
    pub fn to_first_order(&self) -> Result<FirstOrderRealization> {
        let n = self.n();
        let rcond = numerics::reciprocal_condition(&self.m);
        if rcond < numerics::SINGULAR_RCOND {
            return Err(Error::SingularMass { rcond });
        }
        let lu = self.m.clone().lu();
        let solve = |x: &CMatrix| lu.solve(x).ok_or(Error::SingularMass { rcond });
        let mk = solve(&self.k)?;
        let md = solve(&self.d)?;
        let mb = solve(&self.b)?;
        let mut a = CMatrix::zeros(2 * n, 2 * n);
        a.view_mut((0, n), (n, n)).fill_with_identity();
        a.view_mut((n, 0), (n, n)).copy_from(&(-mk));
        a.view_mut((n, n), (n, n)).copy_from(&(-md));
        let mut b = CMatrix::zeros(2 * n, self.p());
        b.view_mut((n, 0), (n, self.p())).copy_from(&mb);
        let mut c = CMatrix::zeros(self.q(), 2 * n);
        c.view_mut((0, 0), (self.q(), n)).copy_from(&self.c0);
        c.view_mut((0, n), (self.q(), n)).copy_from(&self.c1);
        Ok(FirstOrderRealization { a, b, c })
    }
}

/// Chain of `n` masses `m` joined by dampers `c` and springs `k`; the
/// last mass is grounded and the first is driven and observed.
///
/// `M = mI`; `D`, `K` are tridiagonal with `c` (`k`) on the first diagonal
/// entry, `2c` (`2k`) on the rest, and `−c` (`−k`) off the diagonal.
pub fn msd_benchmark(n: usize, m: f64, c: f64, k: f64) -> Result<SecondOrderSystem> {
    if n == 0 {
        return Err(Error::InvalidParameter("number of masses must be at least 1".into()));
    }
    for (v, name) in [(m, "m"), (c, "c"), (k, "k")] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be finite and positive, got {v}"
            )));
        }
    }
    let chain = |w: f64| {
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                if i == 0 {
                    w
                } else {
                    2.0 * w
                }
            } else if i.abs_diff(j) == 1 {
                -w
            } else {
                0.0
            }
        })
    };
    let mut b = DMatrix::zeros(n, 1);
    b[(0, 0)] = 1.0;
    let c0 = b.transpose();
    SecondOrderSystem::from_real(
        &(DMatrix::identity(n, n) * m),
        &chain(c),
        &chain(k),
        &b,
        &c0,
        &DMatrix::zeros(1, n),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar(m: f64, d: f64, k: f64) -> SecondOrderSystem {
        let one = |x: f64| DMatrix::from_element(1, 1, x);
        SecondOrderSystem::from_real(&one(m), &one(d), &one(k), &one(1.0), &one(1.0), &one(0.0))
            .unwrap()
    }

    #[test]
    fn dc_gain_of_scalar_system() {
        let w = scalar(1.0, 0.1, 1.5).eval_transfer(c64(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(w[(0, 0)].re, 1.0 / 1.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_input_gives_zero_response() {
        let sys = msd_benchmark(3, 1.0, 0.1, 1.5).unwrap();
        let sys = sys.with_input(CMatrix::zeros(3, 1)).unwrap();
        assert_eq!(sys.eval_transfer(c64(0.2, 0.7)).unwrap().norm(), 0.0);
        for k in 0..4 {
            assert_eq!(sys.eval_transfer_derivative(c64(0.2, 0.7), k).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn scalar_first_derivative() {
        // d/ds 1/(s²+s+1) at 0 is −1.
        let w1 = scalar(1.0, 1.0, 1.0)
            .eval_transfer_derivative(c64(0.0, 0.0), 1)
            .unwrap();
        assert_abs_diff_eq!(w1[(0, 0)].re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w1[(0, 0)].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn scalar_second_derivative_closed_form() {
        // f = 1/g, g = s²+s+1: f'' = (2g'² − g g'')/g³; at s = 0.5: g = 1.75, g' = 2, g'' = 2.
        let w2 = scalar(1.0, 1.0, 1.0)
            .eval_transfer_derivative(c64(0.5, 0.0), 2)
            .unwrap();
        let g = 1.75f64;
        assert_abs_diff_eq!(w2[(0, 0)].re, (8.0 - 2.0 * g) / g.powi(3), epsilon = 1e-14);
    }

    #[test]
    fn order_limit() {
        let sys = scalar(1.0, 1.0, 1.0);
        assert_eq!(
            sys.eval_transfer_derivative(c64(0.0, 0.0), 9).unwrap_err(),
            Error::OrderTooHigh(9)
        );
    }

    #[test]
    fn near_pole_rejected() {
        let sys = scalar(1.0, 0.0, 1.0);
        let err = sys.eval_transfer(c64(0.0, 1.0)).unwrap_err();
        assert_eq!(err.name(), "NearPole");
    }

    #[test]
    fn companion_of_undamped_oscillator() {
        let fo = scalar(1.0, 0.0, 1.0).to_first_order().unwrap();
        assert_eq!(fo.a[(0, 1)], c64(1.0, 0.0));
        assert_eq!(fo.a[(1, 0)], c64(-1.0, 0.0));
        assert_eq!(fo.a[(0, 0)], c64(0.0, 0.0));
        assert_eq!(fo.a[(1, 1)], c64(0.0, 0.0));
    }

    #[test]
    fn msd_single_mass() {
        let sys = msd_benchmark(1, 2.0, 0.3, 4.0).unwrap();
        assert_eq!(sys.m()[(0, 0)], c64(2.0, 0.0));
        assert_eq!(sys.d()[(0, 0)], c64(0.3, 0.0));
        assert_eq!(sys.k()[(0, 0)], c64(4.0, 0.0));
        assert_eq!(sys.b()[(0, 0)], c64(1.0, 0.0));
        assert_eq!(sys.c0()[(0, 0)], c64(1.0, 0.0));
    }

    #[test]
    fn msd_rejects_bad_parameters() {
        assert_eq!(msd_benchmark(0, 1.0, 0.1, 1.5).unwrap_err().name(), "InvalidParameter");
        assert_eq!(msd_benchmark(3, 1.0, -0.1, 1.5).unwrap_err().name(), "InvalidParameter");
    }

    #[test]
    fn singular_mass_has_no_companion_form() {
        let one = |x: f64| DMatrix::from_element(1, 1, x);
        let sys = SecondOrderSystem::from_real(
            &one(0.0),
            &one(1.0),
            &one(2.0),
            &one(1.0),
            &one(1.0),
            &one(0.0),
        )
        .unwrap();
        assert_eq!(sys.to_first_order().unwrap_err().name(), "SingularMass");
        let poles = sys.poles().unwrap();
        assert_eq!(poles.len(), 1);
        assert_abs_diff_eq!(poles[0].re, -2.0, epsilon = 1e-10);
    }

    #[test]
    fn shape_errors() {
        let err = SecondOrderSystem::new(
            CMatrix::identity(2, 2),
            CMatrix::identity(2, 2),
            CMatrix::identity(3, 3),
            CMatrix::zeros(2, 1),
            CMatrix::zeros(1, 2),
            CMatrix::zeros(1, 2),
        )
        .unwrap_err();
        assert_eq!(err.name(), "DimensionMismatch");
    }
}
