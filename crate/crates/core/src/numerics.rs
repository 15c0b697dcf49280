//! Dense complex linear-algebra kernels.
//!
//! Everything here works in complex double precision, even when the inputs
//! are real, because interpolation points are generically complex. The
//! routines are thin, validated wrappers over `nalgebra` factorizations
//! (LU, SVD, complex Schur, Hermitian eigen) plus the two Sylvester solvers
//! and the quadratic-pencil eigenvalue routines the rest of the crate needs.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative gap below which two spectra are treated as overlapping.
pub const SPECTRAL_GAP_TOL: f64 = 1e-8;

/// Largest number of unknowns (rows × cols of X) solved by Kronecker
/// vectorization; larger problems go through the Schur route.
pub const KRONECKER_MAX_UNKNOWNS: usize = 600;

/// Reciprocal condition below which a matrix is treated as singular.
pub const SINGULAR_RCOND: f64 = 1e-13;

const REGULARITY_PROBES: usize = 8;
const REGULARITY_SEED: u64 = 0x005e_ed0f_7e57;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Lifts a real matrix into complex storage.
pub fn complexify(a: &DMatrix<f64>) -> CMatrix {
    a.map(|x| c64(x, 0.0))
}

pub fn diag(values: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

pub fn ensure_finite(a: &CMatrix, name: &'static str) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}

pub(crate) fn ensure_square(a: &CMatrix, name: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{name} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )))
    }
}

pub(crate) fn ensure_shape(a: &CMatrix, rows: usize, cols: usize, name: &str) -> Result<()> {
    if a.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{name} must be {rows}x{cols}, got {}x{}",
            a.nrows(),
            a.ncols()
        )))
    }
}

pub fn is_diagonal(a: &CMatrix) -> bool {
    let scale = a.norm().max(f64::MIN_POSITIVE);
    a.is_square()
        && a.iter()
            .enumerate()
            .all(|(idx, z)| idx % a.nrows() == idx / a.nrows() || z.norm() <= 1e-14 * scale)
}

/// Relative Frobenius distance `‖a − b‖ / max(‖b‖, 1e-300)`.
pub fn relative_error(a: &CMatrix, b: &CMatrix) -> f64 {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom > 0.0 {
        diff / denom
    } else {
        diff
    }
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// `σ_min / σ_max`; zero for the zero matrix.
pub fn reciprocal_condition(a: &CMatrix) -> f64 {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

/// Reciprocal condition after alternating row/column max-norm scaling.
///
/// Loewner-built pencils mix entries across many orders of magnitude; the
/// raw condition number then says more about the scaling than about
/// singularity.
pub fn scaled_reciprocal_condition(a: &CMatrix) -> f64 {
    let mut x = a.clone();
    for _ in 0..4 {
        for i in 0..x.nrows() {
            let s = x.row(i).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if s > 0.0 {
                x.row_mut(i).scale_mut(1.0 / s);
            }
        }
        for j in 0..x.ncols() {
            let s = x.column(j).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if s > 0.0 {
                x.column_mut(j).scale_mut(1.0 / s);
            }
        }
    }
    reciprocal_condition(&x)
}

/// Rank with singular values above `rel_tol · σ_max`.
pub fn numerical_rank(a: &CMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let Some(&hi) = sv.first() else { return 0 };
    if hi == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * hi).count()
}

/// Solves `a x = b` by LU, rejecting numerically singular `a`.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    ensure_square(a, "coefficient matrix")?;
    let lu = a.clone().lu();
    let x = lu
        .solve(b)
        .ok_or_else(|| Error::SpectraOverlap("linear system is singular".into()))?;
    ensure_finite(&x, "solution")?;
    Ok(x)
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &CMatrix::identity(a.nrows(), a.ncols()))
}

fn schur(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    Schur::try_new(a.clone(), f64::EPSILON, 200 * n.max(10))
        .map(|s| s.unpack())
        .ok_or(Error::EigenSolverFailed)
}

/// Eigenvalues of a general complex square matrix (diagonal of its complex
/// Schur form).
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    ensure_square(a, "matrix")?;
    ensure_finite(a, "matrix")?;
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = schur(a)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Eigenvalues and unit right eigenvectors (columns of the returned matrix)
/// of a diagonalizable matrix with distinct eigenvalues.
pub fn eigen_decomposition(a: &CMatrix) -> Result<(Vec<Complex64>, CMatrix)> {
    ensure_square(a, "matrix")?;
    ensure_finite(a, "matrix")?;
    let n = a.nrows();
    let (q, t) = schur(a)?;
    let lambda: Vec<Complex64> = t.diagonal().iter().copied().collect();
    let scale = 1.0 + t.norm();
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = c64(1.0, 0.0);
        for j in (0..k).rev() {
            let mut acc = c64(0.0, 0.0);
            for m in (j + 1)..=k {
                acc += t[(j, m)] * y[(m, k)];
            }
            let gap = t[(j, j)] - lambda[k];
            if gap.norm() <= 1e-12 * scale {
                return Err(Error::NonNegativeEigenvalue(
                    "repeated eigenvalue; matrix is not diagonalizable with distinct eigenvalues"
                        .into(),
                ));
            }
            y[(j, k)] = -acc / gap;
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let nrm = col.norm();
        col /= c64(nrm, 0.0);
    }
    if reciprocal_condition(&v) < 1e-12 {
        return Err(Error::NonNegativeEigenvalue(
            "eigenvector matrix is numerically singular".into(),
        ));
    }
    Ok((lambda, v))
}

/// Smallest pairwise distance between two point sets (`+∞` if either is empty).
pub fn min_pairwise_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| (x - y).norm()))
        .fold(f64::INFINITY, f64::min)
}

/// Rejects the pair when `min |λ_a − λ_b| < 1e-8 · (1 + max |λ|)`.
pub fn ensure_disjoint(a: &[Complex64], b: &[Complex64], what: &str) -> Result<()> {
    // Each pair is judged on its own magnitude, so one far-away eigenvalue
    // does not loosen the test for the rest.
    let mut worst = f64::INFINITY;
    let mut gap = f64::INFINITY;
    for x in a {
        for y in b {
            let d = (x - y).norm();
            let r = d / (1.0 + x.norm().max(y.norm()));
            if r < worst {
                worst = r;
                gap = d;
            }
        }
    }
    if worst < SPECTRAL_GAP_TOL {
        Err(Error::SpectraOverlap(format!(
            "{what}: minimum eigenvalue distance {gap:e}"
        )))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SylvesterMethod {
    /// Kronecker up to [`KRONECKER_MAX_UNKNOWNS`], Schur above.
    #[default]
    Auto,
    Kronecker,
    Schur,
}

/// Solves `A X − X S = C` for `X`.
///
/// Fails with `SpectraOverlap` when `σ(A)` and `σ(S)` are closer than the
/// relative gap tolerance.
pub fn solve_standard_sylvester(a: &CMatrix, s: &CMatrix, c: &CMatrix) -> Result<CMatrix> {
    solve_standard_sylvester_with(a, s, c, SylvesterMethod::Auto)
}

pub fn solve_standard_sylvester_with(
    a: &CMatrix,
    s: &CMatrix,
    c: &CMatrix,
    method: SylvesterMethod,
) -> Result<CMatrix> {
    check_sylvester_inputs(a, s, c)?;
    let spec_a = eigenvalues(a)?;
    solve_sylvester_known_spectrum(a, &spec_a, s, c, method)
}

fn check_sylvester_inputs(a: &CMatrix, s: &CMatrix, c: &CMatrix) -> Result<()> {
    ensure_finite(a, "A")?;
    ensure_finite(s, "S")?;
    ensure_finite(c, "C")?;
    ensure_square(a, "A")?;
    ensure_square(s, "S")?;
    ensure_shape(c, a.nrows(), s.nrows(), "C")
}

/// As [`solve_standard_sylvester_with`] when `σ(A)` is already known.
pub(crate) fn solve_sylvester_known_spectrum(
    a: &CMatrix,
    spec_a: &[Complex64],
    s: &CMatrix,
    c: &CMatrix,
    method: SylvesterMethod,
) -> Result<CMatrix> {
    check_sylvester_inputs(a, s, c)?;
    let spec_s = eigenvalues(s)?;
    ensure_disjoint(spec_a, &spec_s, "σ(A) ∩ σ(S)")?;
    let use_kron = match method {
        SylvesterMethod::Kronecker => true,
        SylvesterMethod::Schur => false,
        SylvesterMethod::Auto => a.nrows() * s.nrows() <= KRONECKER_MAX_UNKNOWNS,
    };
    let x = if use_kron {
        sylvester_kronecker(a, s, c)?
    } else {
        sylvester_schur(a, s, c)?
    };
    ensure_finite(&x, "X")?;
    Ok(x)
}

/// `(I ⊗ A − Sᵀ ⊗ I) vec(X) = vec(C)` with column-major `vec`.
fn sylvester_kronecker(a: &CMatrix, s: &CMatrix, c: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let nu = s.nrows();
    let dim = n * nu;
    let mut big = CMatrix::zeros(dim, dim);
    for j in 0..nu {
        for l in 0..nu {
            let sl = s[(l, j)];
            for i in 0..n {
                if sl != c64(0.0, 0.0) {
                    big[(j * n + i, l * n + i)] -= sl;
                }
                if j == l {
                    for m in 0..n {
                        big[(j * n + i, j * n + m)] += a[(i, m)];
                    }
                }
            }
        }
    }
    let rhs = CMatrix::from_column_slice(dim, 1, c.as_slice());
    let x = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SpectraOverlap("vectorized Sylvester operator is singular".into()))?;
    Ok(CMatrix::from_column_slice(n, nu, x.as_slice()))
}

/// Bartels–Stewart on the small side: `S = U T U*` with `T` upper
/// triangular, then one shifted solve with `A` per column of `Y = X U`.
fn sylvester_schur(a: &CMatrix, s: &CMatrix, c: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let nu = s.nrows();
    let (u, t) = schur(s)?;
    let f = c * &u;
    let mut y = CMatrix::zeros(n, nu);
    for k in 0..nu {
        let mut rhs = f.column(k).into_owned();
        for j in 0..k {
            let tjk = t[(j, k)];
            if tjk != c64(0.0, 0.0) {
                rhs += y.column(j) * tjk;
            }
        }
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= t[(k, k)];
        }
        let yk = shifted
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::SpectraOverlap("shifted system A − t_kk I is singular".into()))?;
        y.set_column(k, &yk);
    }
    Ok(y * u.adjoint())
}

/// `‖AX − XS − C‖_F / (‖C‖_F + ‖A‖_F ‖X‖_F)`.
pub fn sylvester_residual(a: &CMatrix, s: &CMatrix, c: &CMatrix, x: &CMatrix) -> f64 {
    let r = a * x - x * s - c;
    let denom = c.norm() + a.norm() * x.norm();
    if denom > 0.0 {
        r.norm() / denom
    } else {
        r.norm()
    }
}

/// Eigenvalues of a quadratic pencil, paired with the number found.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub count: usize,
}

impl SpectrumReport {
    fn new(eigenvalues: Vec<Complex64>) -> Self {
        let count = eigenvalues.len();
        Self { eigenvalues, count }
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn companion(lead: &CMatrix, mid: &CMatrix, tail: &CMatrix) -> Result<CMatrix> {
    let n = lead.nrows();
    let lu = lead.clone().lu();
    let tail_part = lu
        .solve(tail)
        .ok_or(Error::SingularMass { rcond: 0.0 })?;
    let mid_part = lu.solve(mid).ok_or(Error::SingularMass { rcond: 0.0 })?;
    let mut a = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, n + i)] = c64(1.0, 0.0);
    }
    a.view_mut((n, 0), (n, n)).copy_from(&(-tail_part));
    a.view_mut((n, n), (n, n)).copy_from(&(-mid_part));
    Ok(a)
}

/// The `2n` roots of `det(M s² + D s + K) = 0`, from the companion matrix
/// `[[0, I], [−M⁻¹K, −M⁻¹D]]`.
pub fn quadratic_eigenvalues(m: &CMatrix, d: &CMatrix, k: &CMatrix) -> Result<SpectrumReport> {
    for (x, name) in [(m, "M"), (d, "D"), (k, "K")] {
        ensure_finite(x, name)?;
        ensure_square(x, name)?;
    }
    let n = m.nrows();
    ensure_shape(d, n, n, "D")?;
    ensure_shape(k, n, n, "K")?;
    let rcond = reciprocal_condition(m);
    if rcond < SINGULAR_RCOND {
        return Err(Error::SingularMass { rcond });
    }
    let a = companion(m, d, k)?;
    Ok(SpectrumReport::new(eigenvalues(&a)?))
}

/// Probe points used by the regularity test and by the Möbius shift in
/// [`pencil_eigenvalues`]: deterministic pseudo-random points in the disk of
/// radius `radius`.
fn probe_points(radius: f64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(REGULARITY_SEED);
    (0..REGULARITY_PROBES)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.gen::<f64>();
            Complex64::from_polar(r, theta)
        })
        .collect()
}

fn coefficient_scale(f2: &CMatrix, f1: &CMatrix, f0: &CMatrix) -> f64 {
    f2.norm().max(f1.norm()).max(f0.norm())
}

pub(crate) fn eval_pencil(f2: &CMatrix, f1: &CMatrix, f0: &CMatrix, s: Complex64) -> CMatrix {
    f2 * (s * s) + f1 * s + f0
}

/// Finite eigenvalues of the quadratic pencil `F₂λ² + F₁λ + F₀`.
///
/// A well-conditioned `F₂` goes straight through the companion matrix.
/// Otherwise the pencil is shifted to a probe point `μ` where `P(μ)` is
/// nonsingular and the reversed pencil `τ²P(μ) + τP′(μ) + F₂` is solved;
/// its zero eigenvalues are the infinite eigenvalues of the original and
/// the rest map back through `λ = μ + 1/τ`. Coefficients are balanced
/// first, which leaves the eigenvalues unchanged.
pub fn pencil_eigenvalues(f2: &CMatrix, f1: &CMatrix, f0: &CMatrix) -> Result<Vec<Complex64>> {
    for (x, name) in [(f2, "F2"), (f1, "F1"), (f0, "F0")] {
        ensure_finite(x, name)?;
        ensure_square(x, name)?;
    }
    let n = f2.nrows();
    ensure_shape(f1, n, n, "F1")?;
    ensure_shape(f0, n, n, "F0")?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let (gamma, f2, f1, f0) = balance_pencil(f2, f1, f0);
    if reciprocal_condition(&f2) > 1e-8 {
        let eigs = eigenvalues(&companion(&f2, &f1, &f0)?)?;
        return Ok(eigs.into_iter().map(|z| z * gamma).collect());
    }
    let scale = coefficient_scale(&f2, &f1, &f0);
    let radius = 1.0 + scale;
    let (mu, p_mu) = probe_points(radius)
        .into_iter()
        .map(|mu| (mu, eval_pencil(&f2, &f1, &f0, mu)))
        .map(|(mu, p)| (scaled_reciprocal_condition(&p), mu, p))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .filter(|(rc, _, _)| *rc > SINGULAR_RCOND)
        .map(|(_, mu, p)| (mu, p))
        .ok_or_else(|| Error::PencilDegenerate("pencil is singular at every probe point".into()))?;
    let dp = &f2 * (mu * 2.0) + &f1;
    let comp = companion(&p_mu, &dp, &f2)?;
    let taus = eigenvalues(&comp)?;
    let cut = 1e-7 * comp.norm();
    Ok(taus
        .into_iter()
        .filter(|tau| tau.norm() > cut)
        .map(|tau| (mu + tau.inv()) * gamma)
        .collect())
}

/// Eigenvalue-preserving rescaling `λ = γλ'`, `Fᵢ ↦ γⁱ·R·Fᵢ·C` with diagonal
/// `R`, `C` that bring every row and column of `|F₂|+|F₁|+|F₀|` to unit
/// max-norm. Returns `γ` and the scaled coefficients.
fn balance_pencil(f2: &CMatrix, f1: &CMatrix, f0: &CMatrix) -> (f64, CMatrix, CMatrix, CMatrix) {
    let (n2, n0) = (f2.norm(), f0.norm());
    let gamma = if n2 > 0.0 && n0 > 0.0 { (n0 / n2).sqrt() } else { 1.0 };
    let mut f = [f2 * c64(gamma * gamma, 0.0), f1 * c64(gamma, 0.0), f0.clone()];
    let n = f2.nrows();
    let size = |f: &[CMatrix; 3], i: usize, j: usize| f.iter().map(|x| x[(i, j)].norm()).sum::<f64>();
    for _ in 0..4 {
        for i in 0..n {
            let s = (0..n).map(|j| size(&f, i, j)).fold(0.0, f64::max);
            if s > 0.0 {
                f.iter_mut().for_each(|x| x.row_mut(i).scale_mut(1.0 / s));
            }
        }
        for j in 0..n {
            let s = (0..n).map(|i| size(&f, i, j)).fold(0.0, f64::max);
            if s > 0.0 {
                f.iter_mut().for_each(|x| x.column_mut(j).scale_mut(1.0 / s));
            }
        }
    }
    let [a, b, c] = f;
    (gamma, a, b, c)
}

/// Smallest eigenvalue of the Hermitian part `(A + A*)/2`.
pub fn min_hermitian_eigenvalue(a: &CMatrix) -> Result<f64> {
    ensure_finite(a, "A")?;
    ensure_square(a, "A")?;
    let h = (a + a.adjoint()) * c64(0.5, 0.0);
    Ok(h
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// True iff the Hermitian part of `a` has smallest eigenvalue `> tol`.
pub fn is_positive_definite(a: &CMatrix, tol: f64) -> Result<bool> {
    Ok(min_hermitian_eigenvalue(a)? > tol)
}

/// Orthonormal rows `z` with `z·A ≈ 0`; `n − rank(A)` of them.
///
/// Rank counts singular values above `tol · σ_max`.
pub fn left_null_space(a: &CMatrix, tol: f64) -> CMatrix {
    let n = a.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    // Pad to at least n columns so the SVD returns a full n×n U.
    let padded = if a.ncols() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (n, a.ncols())).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(true, false);
    let u = svd.u.expect("requested U");
    let sv = &svd.singular_values;
    let hi = sv.iter().copied().fold(0.0, f64::max);
    let mut null_cols: Vec<usize> = (0..u.ncols())
        .filter(|&i| i >= sv.len() || hi == 0.0 || sv[i] <= tol * hi)
        .collect();
    null_cols.truncate(n);
    let mut z = CMatrix::zeros(null_cols.len(), n);
    for (row, &col) in null_cols.iter().enumerate() {
        z.set_row(row, &u.column(col).adjoint());
    }
    z
}

/// Regularity (some probe point has a clearly nonzero determinant) plus
/// disjointness of the finite eigenvalues from `forbidden`.
pub fn pencil_is_regular_and_disjoint(
    f2: &CMatrix,
    f1: &CMatrix,
    f0: &CMatrix,
    forbidden: &[Complex64],
    tol: f64,
) -> bool {
    if !pencil_is_regular(f2, f1, f0) {
        return false;
    }
    match pencil_eigenvalues(f2, f1, f0) {
        Ok(eigs) => min_pairwise_distance(&eigs, forbidden) > tol,
        Err(_) => false,
    }
}

/// `det(F₂λ² + F₁λ + F₀) ≢ 0`, tested at the probe points: regular if the
/// pencil is numerically nonsingular (reciprocal condition above
/// roundoff) at any of them.
///
/// A raw determinant threshold scaled by `‖F‖^ν` misreads large,
/// perfectly conditioned pencils as singular, so the test is on the
/// scaled `σ_min/σ_max`.
pub fn pencil_is_regular(f2: &CMatrix, f1: &CMatrix, f0: &CMatrix) -> bool {
    let n = f2.nrows();
    if n == 0 {
        return true;
    }
    if !(f2.is_square() && f1.shape() == f2.shape() && f0.shape() == f2.shape()) {
        return false;
    }
    if coefficient_scale(f2, f1, f0) == 0.0 {
        return false;
    }
    let radius = 1.0 + coefficient_scale(f2, f1, f0);
    probe_points(radius)
        .into_iter()
        .any(|mu| scaled_reciprocal_condition(&eval_pencil(f2, f1, f0, mu)) > SINGULAR_RCOND)
}

/// Rank of `[L; LS; …; LS^{ν−1}]`, tolerance `1e-10 · σ_max`.
pub fn observability_rank(l: &CMatrix, s: &CMatrix) -> usize {
    let nu = s.nrows();
    let p = l.nrows();
    let mut stacked = CMatrix::zeros(p * nu, nu);
    let mut block = l.clone();
    for k in 0..nu {
        stacked.view_mut((k * p, 0), (p, nu)).copy_from(&block);
        block = &block * s;
    }
    numerical_rank(&stacked, 1e-10)
}

/// Rank of `[R, QR, …, Q^{ν−1}R]`, tolerance `1e-10 · σ_max`.
pub fn controllability_rank(q: &CMatrix, r: &CMatrix) -> usize {
    observability_rank(&r.transpose(), &q.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
        complexify(&DMatrix::from_row_slice(rows, cols, data))
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.im.total_cmp(&b.im).then(a.re.total_cmp(&b.re)));
        v
    }

    #[test]
    fn scalar_sylvester() {
        let x = solve_standard_sylvester(&real(1, 1, &[2.0]), &real(1, 1, &[1.0]), &real(1, 1, &[3.0]))
            .unwrap();
        assert_abs_diff_eq!(x[(0, 0)].re, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[(0, 0)].im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_shift_reduces_to_linear_solve() {
        let a = CMatrix::identity(3, 3) * c64(2.0, 0.0);
        let s = CMatrix::zeros(2, 2);
        let c = real(3, 2, &[1.0, -2.0, 0.5, 4.0, 3.0, 7.0]);
        for method in [SylvesterMethod::Kronecker, SylvesterMethod::Schur] {
            let x = solve_standard_sylvester_with(&a, &s, &c, method).unwrap();
            assert!(relative_error(&x, &(&c * c64(0.5, 0.0))) < 1e-14);
        }
    }

    #[test]
    fn overlapping_spectra_rejected() {
        let a = real(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let s = real(1, 1, &[2.0]);
        let c = real(2, 1, &[1.0, 1.0]);
        let err = solve_standard_sylvester(&a, &s, &c).unwrap_err();
        assert_eq!(err.name(), "SpectraOverlap");
    }

    #[test]
    fn nonfinite_rejected() {
        let a = real(1, 1, &[f64::NAN]);
        let err = solve_standard_sylvester(&a, &real(1, 1, &[1.0]), &real(1, 1, &[1.0])).unwrap_err();
        assert_eq!(err, Error::NonFinite("A"));
    }

    #[test]
    fn undamped_oscillator_poles() {
        let one = real(1, 1, &[1.0]);
        let rep = quadratic_eigenvalues(&one, &real(1, 1, &[0.0]), &one).unwrap();
        assert_eq!(rep.count, 2);
        let e = sorted(rep.eigenvalues);
        assert_abs_diff_eq!(e[0].im, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].im, 1.0, epsilon = 1e-12);
        assert!(e.iter().all(|z| z.re.abs() < 1e-12));
    }

    #[test]
    fn decoupled_oscillator_poles() {
        let m = CMatrix::identity(2, 2);
        let k = real(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let e = sorted(quadratic_eigenvalues(&m, &CMatrix::zeros(2, 2), &k).unwrap().eigenvalues);
        let expect = [-2.0, -1.0, 1.0, 2.0];
        for (z, want) in e.iter().zip(expect) {
            assert_abs_diff_eq!(z.im, want, epsilon = 1e-12);
            assert_abs_diff_eq!(z.re, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn damped_scalar_poles_match_quadratic_formula() {
        // s² + 0.1 s + 1.5: s = −0.05 ± i·sqrt(1.5 − 0.0025)
        let rep = quadratic_eigenvalues(
            &real(1, 1, &[1.0]),
            &real(1, 1, &[0.1]),
            &real(1, 1, &[1.5]),
        )
        .unwrap();
        let im = (1.5f64 - 0.0025).sqrt();
        let e = sorted(rep.eigenvalues);
        assert_abs_diff_eq!(e[0].re, -0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(e[0].im, -im, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1].im, im, epsilon = 1e-12);
    }

    #[test]
    fn singular_mass_rejected() {
        let err = quadratic_eigenvalues(
            &CMatrix::zeros(1, 1),
            &real(1, 1, &[1.0]),
            &real(1, 1, &[1.0]),
        )
        .unwrap_err();
        assert_eq!(err.name(), "SingularMass");
    }

    #[test]
    fn pencil_with_singular_leading_coefficient() {
        // F2 = 0, F1 = 1, F0 = 2 → single finite eigenvalue −2.
        let e = pencil_eigenvalues(
            &real(1, 1, &[0.0]),
            &real(1, 1, &[1.0]),
            &real(1, 1, &[2.0]),
        )
        .unwrap();
        assert_eq!(e.len(), 1);
        assert_abs_diff_eq!(e[0].re, -2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(e[0].im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn pencil_mixed_finite_and_infinite() {
        // diag(1, 0) λ² + diag(0, 1) λ + diag(1, 3): ±i and −3.
        let f2 = real(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let f1 = real(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let f0 = real(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let e = sorted(pencil_eigenvalues(&f2, &f1, &f0).unwrap());
        assert_eq!(e.len(), 3);
        assert!(min_pairwise_distance(&e, &[c64(0.0, 1.0)]) < 1e-9);
        assert!(min_pairwise_distance(&e, &[c64(0.0, -1.0)]) < 1e-9);
        assert!(min_pairwise_distance(&e, &[c64(-3.0, 0.0)]) < 1e-9);
    }

    #[test]
    fn positive_definite_cases() {
        assert!(is_positive_definite(&CMatrix::identity(3, 3), 1e-12).unwrap());
        assert!(!is_positive_definite(&(-CMatrix::identity(3, 3)), 1e-12).unwrap());
        // Hermitian part [[1,1],[1,1]] has eigenvalues 0 and 2.
        let a = real(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert_abs_diff_eq!(min_hermitian_eigenvalue(&a).unwrap(), 0.0, epsilon = 1e-14);
        assert!(!is_positive_definite(&a, 1e-12).unwrap());
    }

    #[test]
    fn null_space_of_unit_column() {
        let z = left_null_space(&real(2, 1, &[1.0, 0.0]), 1e-12);
        assert_eq!(z.shape(), (1, 2));
        assert_abs_diff_eq!(z[(0, 0)].norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(z[(0, 1)].norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn null_space_of_full_rank_square_is_empty() {
        let a = real(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(left_null_space(&a, 1e-12).nrows(), 0);
    }

    #[test]
    fn regularity_examples() {
        let one = real(1, 1, &[1.0]);
        let zero = real(1, 1, &[0.0]);
        assert!(pencil_is_regular_and_disjoint(&one, &zero, &one, &[c64(0.0, 0.0)], 1e-8));
        assert!(!pencil_is_regular_and_disjoint(&zero, &zero, &zero, &[], 1e-8));
        assert!(!pencil_is_regular_and_disjoint(&one, &zero, &one, &[c64(0.0, 1.0)], 1e-8));
    }

    #[test]
    fn singular_but_nonzero_pencil_is_not_regular() {
        // Both rows identical for every λ.
        let f = real(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(!pencil_is_regular(&f, &f, &f));
    }

    #[test]
    fn eigen_decomposition_recovers_similarity() {
        let a = real(3, 3, &[-1.0, 2.0, 0.5, 0.0, -2.0, 1.0, 0.0, 0.0, -4.0]);
        let (lambda, v) = eigen_decomposition(&a).unwrap();
        let recon = &v * diag(&lambda) * inverse(&v).unwrap();
        assert!(relative_error(&recon, &a) < 1e-12);
    }

    #[test]
    fn jordan_block_is_not_diagonalizable() {
        let a = real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert_eq!(eigen_decomposition(&a).unwrap_err().name(), "NonNegativeEigenvalue");
    }

    #[test]
    fn rank_tests() {
        let s = diag(&[c64(1.0, 0.0), c64(2.0, 0.0)]);
        assert_eq!(observability_rank(&real(1, 2, &[1.0, 1.0]), &s), 2);
        assert_eq!(observability_rank(&real(1, 2, &[1.0, 0.0]), &s), 1);
        assert_eq!(controllability_rank(&s, &real(2, 1, &[1.0, 1.0])), 2);
    }
}
