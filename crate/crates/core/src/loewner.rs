//! Second-order interpolants from frequency-response data.
//!
//! Right data `(αᵢ, rᵢ, wᵢ = W(αᵢ)rᵢ)` and left data `(βⱼ, lⱼ, vⱼᵀ = lⱼᵀW(βⱼ))`
//! define the Loewner matrix `𝕃`, the shifted `𝕃ₛ` and the double-shifted
//! `𝕃ₛₛ`. Two one-parameter families of second-order models interpolate
//! all data: one free in the leading coefficient `M̂`, one in `K̂`.

use num_complex::Complex64;
use serde_json::json;

use crate::error::{Error, Result};
use crate::numerics::{self, c64, CMatrix, CVector};
use crate::par::{self, Execution};
use crate::reduction::{Provenance, ReducedModel};
use crate::system::SecondOrderSystem;

/// `(α, r, w)` with `w = W(α) r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RightSample {
    pub alpha: Complex64,
    pub r: CVector,
    pub w: CVector,
}

/// `(β, l, v)` with `vᵀ = lᵀ W(β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeftSample {
    pub beta: Complex64,
    pub l: CVector,
    pub v: CVector,
}

/// Tangential frequency-response data with `ν` samples on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentialData {
    pub right: Vec<RightSample>,
    pub left: Vec<LeftSample>,
}

impl TangentialData {
    /// Checks sizes, finiteness, distinct frequencies and nonzero directions.
    pub fn new(right: Vec<RightSample>, left: Vec<LeftSample>) -> Result<Self> {
        let data = Self { right, left };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        let nu = self.right.len();
        if nu == 0 || self.left.len() != nu {
            return Err(Error::DimensionMismatch(format!(
                "need the same nonzero number of right and left samples, got {} and {}",
                nu,
                self.left.len()
            )));
        }
        let (p, q) = (self.right[0].r.len(), self.right[0].w.len());
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        for r in &self.right {
            if r.r.len() != p || r.w.len() != q {
                return Err(Error::DimensionMismatch("right samples differ in shape".into()));
            }
            if !(finite(&r.alpha) && r.r.iter().all(finite) && r.w.iter().all(finite)) {
                return Err(Error::NonFinite("right data"));
            }
            if r.r.norm() == 0.0 {
                return Err(Error::ZeroDirection);
            }
        }
        for l in &self.left {
            if l.l.len() != q || l.v.len() != p {
                return Err(Error::DimensionMismatch("left samples differ in shape".into()));
            }
            if !(finite(&l.beta) && l.l.iter().all(finite) && l.v.iter().all(finite)) {
                return Err(Error::NonFinite("left data"));
            }
            if l.l.norm() == 0.0 {
                return Err(Error::ZeroDirection);
            }
        }
        let freqs: Vec<Complex64> = self
            .alphas()
            .into_iter()
            .chain(self.betas())
            .collect();
        for (i, a) in freqs.iter().enumerate() {
            if freqs[..i].contains(a) {
                return Err(Error::DuplicateFrequency { re: a.re, im: a.im });
            }
        }
        Ok(())
    }

    /// `ν`.
    pub fn order(&self) -> usize {
        self.right.len()
    }
    pub fn inputs(&self) -> usize {
        self.right[0].r.len()
    }
    pub fn outputs(&self) -> usize {
        self.right[0].w.len()
    }

    pub fn alphas(&self) -> Vec<Complex64> {
        self.right.iter().map(|r| r.alpha).collect()
    }
    pub fn betas(&self) -> Vec<Complex64> {
        self.left.iter().map(|l| l.beta).collect()
    }

    /// `Λ_α = diag(αᵢ)`.
    pub fn lambda_alpha(&self) -> CMatrix {
        numerics::diag(&self.alphas())
    }
    /// `Λ_β = diag(βⱼ)`.
    pub fn lambda_beta(&self) -> CMatrix {
        numerics::diag(&self.betas())
    }
    /// `ℛ = [r₁ … r_ν]` (`p×ν`).
    pub fn r_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.right.iter().map(|r| r.r.clone()).collect::<Vec<_>>())
    }
    /// `𝒲 = [w₁ … w_ν]` (`q×ν`).
    pub fn w_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.right.iter().map(|r| r.w.clone()).collect::<Vec<_>>())
    }
    /// `ℒ` with rows `lⱼᵀ` (`ν×q`).
    pub fn l_matrix(&self) -> CMatrix {
        CMatrix::from_rows(&self.left.iter().map(|l| l.l.transpose()).collect::<Vec<_>>())
    }
    /// `𝒱` with rows `vⱼᵀ` (`ν×p`).
    pub fn v_matrix(&self) -> CMatrix {
        CMatrix::from_rows(&self.left.iter().map(|l| l.v.transpose()).collect::<Vec<_>>())
    }
}

/// Samples `sys` at right frequencies `alphas` (directions = columns of
/// `r_dirs`, `p×ν`) and left frequencies `betas` (directions = columns of
/// `l_dirs`, `q×ν`).
pub fn sample_tangential(
    sys: &SecondOrderSystem,
    alphas: &[Complex64],
    betas: &[Complex64],
    r_dirs: &CMatrix,
    l_dirs: &CMatrix,
    exec: Execution,
) -> Result<TangentialData> {
    numerics::ensure_shape(r_dirs, sys.p(), alphas.len(), "right directions")?;
    numerics::ensure_shape(l_dirs, sys.q(), betas.len(), "left directions")?;
    let right = par::try_map(exec, &(0..alphas.len()).collect::<Vec<_>>(), |&i| {
        let r = r_dirs.column(i).into_owned();
        let w = sys.eval_transfer(alphas[i])? * &r;
        Ok::<_, Error>(RightSample { alpha: alphas[i], r, w })
    })?;
    let left = par::try_map(exec, &(0..betas.len()).collect::<Vec<_>>(), |&j| {
        let l = l_dirs.column(j).into_owned();
        let v = sys.eval_transfer(betas[j])?.transpose() * &l;
        Ok::<_, Error>(LeftSample { beta: betas[j], l, v })
    })?;
    TangentialData::new(right, left)
}

/// SISO sampling with unit directions.
pub fn sample_siso(
    sys: &SecondOrderSystem,
    alphas: &[Complex64],
    betas: &[Complex64],
    exec: Execution,
) -> Result<TangentialData> {
    let ones = |k: usize| CMatrix::from_element(1, k, c64(1.0, 0.0));
    sample_tangential(sys, alphas, betas, &ones(alphas.len()), &ones(betas.len()), exec)
}

/// `2ν` points `iω` log-spaced over `[lo, hi]`, split alternately into
/// right (even index) and left (odd index) frequencies.
pub fn alternating_points(nu: usize, lo: f64, hi: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let omegas = crate::bode::log_grid(2 * nu, lo, hi);
    let pts: Vec<Complex64> = omegas.iter().map(|&w| c64(0.0, w)).collect();
    let right = pts.iter().step_by(2).copied().collect();
    let left = pts.iter().skip(1).step_by(2).copied().collect();
    (right, left)
}

/// `𝕃`, `𝕃ₛ`, `𝕃ₛₛ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerTriple {
    pub l: CMatrix,
    pub ls: CMatrix,
    pub lss: CMatrix,
}

/// Entrywise divided differences
/// `𝕃ⱼᵢ = (vⱼᵀrᵢ − lⱼᵀwᵢ)/(βⱼ − αᵢ)`, `𝕃ₛ` with numerator
/// `βⱼvⱼᵀrᵢ − αᵢlⱼᵀwᵢ`, `𝕃ₛₛ` with `βⱼ²vⱼᵀrᵢ − αᵢ²lⱼᵀwᵢ`.
///
/// Rows are assembled independently, so the parallel and sequential
/// paths give bitwise-identical matrices.
pub fn build_loewner(data: &TangentialData, exec: Execution) -> Result<LoewnerTriple> {
    data.validate()?;
    let nu = data.order();
    let scale = 1.0
        + data
            .alphas()
            .iter()
            .chain(data.betas().iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max);
    let guard = 1e-12 * scale;
    let gap = numerics::min_pairwise_distance(&data.alphas(), &data.betas());
    if gap < guard {
        return Err(Error::DividedDifferenceBlowup { gap });
    }
    let rows = par::map(exec, &data.left, |left| {
        let mut out = [CVector::zeros(nu), CVector::zeros(nu), CVector::zeros(nu)];
        for (i, right) in data.right.iter().enumerate() {
            let vr = left.v.dot(&right.r);
            let lw = left.l.dot(&right.w);
            let (a, b) = (right.alpha, left.beta);
            let den = b - a;
            out[0][i] = (vr - lw) / den;
            out[1][i] = (b * vr - a * lw) / den;
            out[2][i] = (b * b * vr - a * a * lw) / den;
        }
        out
    });
    let mut triple = LoewnerTriple {
        l: CMatrix::zeros(nu, nu),
        ls: CMatrix::zeros(nu, nu),
        lss: CMatrix::zeros(nu, nu),
    };
    for (j, [l, ls, lss]) in rows.into_iter().enumerate() {
        triple.l.set_row(j, &l.transpose());
        triple.ls.set_row(j, &ls.transpose());
        triple.lss.set_row(j, &lss.transpose());
    }
    Ok(triple)
}

/// Relative residuals of every identity tying the Loewner matrices to
/// the data, by name.
pub fn identity_residuals(data: &TangentialData, t: &LoewnerTriple) -> Vec<(&'static str, f64)> {
    let la = data.lambda_alpha();
    let lb = data.lambda_beta();
    let vr = data.v_matrix() * data.r_matrix();
    let lw = data.l_matrix() * data.w_matrix();
    let rel = |lhs: CMatrix, rhs: CMatrix| {
        let scale = lhs.norm().max(rhs.norm());
        let diff = (lhs - rhs).norm();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    };
    vec![
        ("sylvester_l", rel(&lb * &t.l - &t.l * &la, &vr - &lw)),
        ("sylvester_ls", rel(&lb * &t.ls - &t.ls * &la, &lb * &vr - &lw * &la)),
        (
            "sylvester_lss",
            rel(&lb * &t.lss - &t.lss * &la, &lb * &lb * &vr - &lw * &la * &la),
        ),
        ("ls_minus_l_lambda_alpha", rel(&t.ls - &t.l * &la, vr.clone())),
        ("ls_minus_lambda_beta_l", rel(&t.ls - &lb * &t.l, lw.clone())),
        (
            "lss_minus_l_lambda_alpha_sq",
            rel(&t.lss - &t.l * &la * &la, &lb * &vr + &vr * &la),
        ),
        ("lss_minus_ls_lambda_alpha", rel(&t.lss - &t.ls * &la, &lb * &vr)),
        (
            "lss_minus_lambda_beta_sq_l",
            rel(&t.lss - &lb * &lb * &t.l, &lw * &la + &lb * &lw),
        ),
        ("lss_minus_lambda_beta_ls", rel(&t.lss - &lb * &t.ls, &lw * &la)),
        (
            "coupling",
            rel(t.lss.clone(), -(&lb * &t.l * &la) + &lb * &t.ls + &t.ls * &la),
        ),
    ]
}

fn ensure_interpolant(model: &SecondOrderSystem, data: &TangentialData) -> Result<()> {
    let forbidden: Vec<Complex64> = data.alphas().into_iter().chain(data.betas()).collect();
    numerics::ensure_disjoint(model.poles()?, &forbidden, "interpolant poles vs data")
        .map_err(|_| Error::PencilDegenerate("interpolant has a pole at a data frequency".into()))
}

fn build_model(
    f2: CMatrix,
    f1: CMatrix,
    f0: CMatrix,
    b: CMatrix,
    c0: CMatrix,
    data: &TangentialData,
    provenance: Provenance,
) -> Result<ReducedModel> {
    let nu = data.order();
    let c1 = CMatrix::zeros(c0.nrows(), nu);
    let system = SecondOrderSystem::new(f2, f1, f0, b, c0, c1)?;
    ensure_interpolant(&system, data)?;
    Ok(ReducedModel { system, provenance })
}

/// `M̂ξ̈ + (−𝕃 − Λ_βM̂ − M̂Λ_α)ξ̇ + (𝕃ₛ + Λ_βM̂Λ_α)ξ = 𝒱u`, `ψ = 𝒲ξ`.
pub fn interpolant_family_m(data: &TangentialData, triple: &LoewnerTriple, mhat: &CMatrix) -> Result<ReducedModel> {
    let nu = data.order();
    numerics::ensure_shape(mhat, nu, nu, "Mhat")?;
    numerics::ensure_finite(mhat, "Mhat")?;
    let la = data.lambda_alpha();
    let lb = data.lambda_beta();
    let f1 = -&triple.l - &lb * mhat - mhat * &la;
    let f0 = &triple.ls + &lb * mhat * &la;
    build_model(
        mhat.clone(),
        f1,
        f0,
        data.v_matrix(),
        data.w_matrix(),
        data,
        Provenance::new("loewner_m", json!({ "order": nu })),
    )
}

/// `(−𝕃ₛ + K̂)ξ̈ + (𝕃ₛₛ − Λ_βK̂ − K̂Λ_α)ξ̇ + Λ_βK̂Λ_αξ = Λ_β𝒱u`, `ψ = 𝒲Λ_αξ`.
pub fn interpolant_family_k(data: &TangentialData, triple: &LoewnerTriple, khat: &CMatrix) -> Result<ReducedModel> {
    let nu = data.order();
    numerics::ensure_shape(khat, nu, nu, "Khat")?;
    numerics::ensure_finite(khat, "Khat")?;
    if data.alphas().iter().chain(data.betas().iter()).any(|z| z.norm() == 0.0) {
        return Err(Error::SingularFrequency);
    }
    let la = data.lambda_alpha();
    let lb = data.lambda_beta();
    let f2 = -&triple.ls + khat;
    let f1 = &triple.lss - &lb * khat - khat * &la;
    let f0 = &lb * khat * &la;
    build_model(
        f2,
        f1,
        f0,
        &lb * data.v_matrix(),
        data.w_matrix() * &la,
        data,
        Provenance::new("loewner_k", json!({ "order": nu })),
    )
}

/// Solves `Xⱼᵢ(βⱼ + αᵢ + a + bβⱼαᵢ) = rhsⱼᵢ` entrywise.
fn rayleigh_solve(data: &TangentialData, a: f64, b: f64, rhs: &CMatrix) -> Result<CMatrix> {
    if !(a.is_finite() && b.is_finite() && a >= 0.0 && b >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Rayleigh coefficients must be finite and nonnegative, got {a}, {b}"
        )));
    }
    let alphas = data.alphas();
    let betas = data.betas();
    let scale = 1.0 + alphas.iter().chain(&betas).map(|z| z.norm()).fold(0.0, f64::max);
    let nu = data.order();
    let mut x = CMatrix::zeros(nu, nu);
    for j in 0..nu {
        for i in 0..nu {
            let den = betas[j] + alphas[i] + a + betas[j] * alphas[i] * b;
            if den.norm() < 1e-12 * scale * (1.0 + b * scale) {
                return Err(Error::SpectraOverlap(format!(
                    "Rayleigh constraint is singular at right sample {i}, left sample {j}"
                )));
            }
            x[(j, i)] = rhs[(j, i)] / den;
        }
    }
    Ok(x)
}

/// The `M̂` for which the family-M interpolant has `D̂ = aM̂ + bK̂`.
///
/// Substituting the family coefficients into the Rayleigh relation gives
/// the diagonal Sylvester equation
/// `(Λ_β + aI)M̂ + M̂Λ_α + bΛ_βM̂Λ_α = −𝕃 − b𝕃ₛ`.
pub fn rayleigh_mhat(data: &TangentialData, triple: &LoewnerTriple, a: f64, b: f64) -> Result<CMatrix> {
    rayleigh_solve(data, a, b, &(-&triple.l - &triple.ls * c64(b, 0.0)))
}

/// The `K̂` for which the family-K interpolant has `D̂ = aM̂ + bK̂`:
/// `(Λ_β + aI)K̂ + K̂Λ_α + bΛ_βK̂Λ_α = 𝕃ₛₛ + a𝕃ₛ`.
pub fn rayleigh_khat(data: &TangentialData, triple: &LoewnerTriple, a: f64, b: f64) -> Result<CMatrix> {
    rayleigh_solve(data, a, b, &(&triple.lss + &triple.ls * c64(a, 0.0)))
}

/// `‖D̂ − aM̂ − bK̂‖` relative to the largest coefficient norm of the model.
pub fn rayleigh_residual(model: &SecondOrderSystem, a: f64, b: f64) -> f64 {
    let diff = model.d() - model.m() * c64(a, 0.0) - model.k() * c64(b, 0.0);
    let scale = model.m().norm().max(model.d().norm()).max(model.k().norm());
    if scale > 0.0 {
        diff.norm() / scale
    } else {
        diff.norm()
    }
}

/// Largest relative right residual `‖Ŵ(αᵢ)rᵢ − wᵢ‖/‖wᵢ‖` and left residual
/// `‖lⱼᵀŴ(βⱼ) − vⱼᵀ‖/‖vⱼ‖`.
pub fn verify_tangential(model: &SecondOrderSystem, data: &TangentialData) -> Result<(f64, f64)> {
    let rel = |diff: f64, scale: f64| if scale > 0.0 { diff / scale } else { diff };
    let mut right = 0.0f64;
    for r in &data.right {
        let got = model.eval_transfer(r.alpha)? * &r.r;
        right = right.max(rel((got - &r.w).norm(), r.w.norm()));
    }
    let mut left = 0.0f64;
    for l in &data.left {
        let got = model.eval_transfer(l.beta)?.transpose() * &l.l;
        left = left.max(rel((got - &l.v).norm(), l.v.norm()));
    }
    Ok((right, left))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: Complex64) -> CVector {
        CVector::from_element(1, x)
    }

    fn scalar_data() -> TangentialData {
        TangentialData::new(
            vec![RightSample { alpha: c64(0.0, 1.0), r: v(c64(1.0, 0.0)), w: v(c64(0.5, -0.2)) }],
            vec![LeftSample { beta: c64(0.0, 2.0), l: v(c64(1.0, 0.0)), v: v(c64(0.1, 0.3)) }],
        )
        .unwrap()
    }

    #[test]
    fn single_entry_by_hand() {
        let data = scalar_data();
        let t = build_loewner(&data, Execution::Sequential).unwrap();
        let (a, b) = (c64(0.0, 1.0), c64(0.0, 2.0));
        let (w, vv) = (c64(0.5, -0.2), c64(0.1, 0.3));
        assert!((t.l[(0, 0)] - (vv - w) / (b - a)).norm() < 1e-15);
        assert!((t.ls[(0, 0)] - (b * vv - a * w) / (b - a)).norm() < 1e-15);
        assert!((t.lss[(0, 0)] - (b * b * vv - a * a * w) / (b - a)).norm() < 1e-15);
    }

    #[test]
    fn duplicate_frequency_rejected() {
        let err = TangentialData::new(
            vec![RightSample { alpha: c64(0.0, 1.0), r: v(c64(1.0, 0.0)), w: v(c64(1.0, 0.0)) }],
            vec![LeftSample { beta: c64(0.0, 1.0), l: v(c64(1.0, 0.0)), v: v(c64(1.0, 0.0)) }],
        )
        .unwrap_err();
        assert_eq!(err.name(), "DuplicateFrequency");
    }

    #[test]
    fn zero_direction_rejected() {
        let err = TangentialData::new(
            vec![RightSample { alpha: c64(0.0, 1.0), r: v(c64(0.0, 0.0)), w: v(c64(1.0, 0.0)) }],
            vec![LeftSample { beta: c64(0.0, 2.0), l: v(c64(1.0, 0.0)), v: v(c64(1.0, 0.0)) }],
        )
        .unwrap_err();
        assert_eq!(err, Error::ZeroDirection);
    }

    #[test]
    fn near_coincident_frequencies_blow_up() {
        let data = TangentialData::new(
            vec![RightSample { alpha: c64(0.0, 1.0), r: v(c64(1.0, 0.0)), w: v(c64(1.0, 0.0)) }],
            vec![LeftSample { beta: c64(0.0, 1.0 + 1e-14), l: v(c64(1.0, 0.0)), v: v(c64(1.0, 0.0)) }],
        )
        .unwrap();
        assert_eq!(build_loewner(&data, Execution::Auto).unwrap_err().name(), "DividedDifferenceBlowup");
    }

    #[test]
    fn scalar_rayleigh_closed_form() {
        let data = scalar_data();
        let t = build_loewner(&data, Execution::Auto).unwrap();
        let (a, b) = (0.2, 0.05);
        let (al, be) = (c64(0.0, 1.0), c64(0.0, 2.0));
        let m = rayleigh_mhat(&data, &t, a, b).unwrap();
        let expect = (-t.l[(0, 0)] - t.ls[(0, 0)] * b) / (be + al + a + be * al * b);
        assert!((m[(0, 0)] - expect).norm() < 1e-15);
    }

    #[test]
    fn zero_frequency_rejected_by_k_family() {
        let data = TangentialData::new(
            vec![RightSample { alpha: c64(0.0, 0.0), r: v(c64(1.0, 0.0)), w: v(c64(1.0, 0.0)) }],
            vec![LeftSample { beta: c64(0.0, 2.0), l: v(c64(1.0, 0.0)), v: v(c64(0.3, 0.0)) }],
        )
        .unwrap();
        let t = build_loewner(&data, Execution::Auto).unwrap();
        let err = interpolant_family_k(&data, &t, &CMatrix::zeros(1, 1)).unwrap_err();
        assert_eq!(err, Error::SingularFrequency);
    }

    #[test]
    fn alternating_split() {
        let (r, l) = alternating_points(3, 1e-2, 1e2);
        assert_eq!(r.len(), 3);
        assert_eq!(l.len(), 3);
        assert!((r[0].im - 1e-2).abs() < 1e-15);
        assert!((l[2].im - 1e2).abs() < 1e-12);
        assert!(r[1].im < l[1].im);
    }
}
