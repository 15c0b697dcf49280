//! Reduced second-order models that match moments of a full system.
//!
//! A reduced model `F₂ξ̈ + F₁ξ̇ + F₀ξ = Gu`, `ψ = H₀ξ + H₁ξ̇` matches the
//! input-side moments at `σ(S)` exactly when
//! `F₀ = GL − F₂S² − F₁S` and `H₀ = C₀Π + C₁ΠS − H₁S`, leaving
//! `(F₂, F₁, G, H₁)` free. The output-side family fixes `F₀` and `G` and
//! leaves `(F₂, F₁, H₀, H₁)` free. The remaining constructions here pick
//! members of those families with extra properties.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::moments::{self, InterpolationSet, Side};
use crate::numerics::{self, c64, ensure_shape, CMatrix, CVector};
use crate::system::SecondOrderSystem;

/// Condition-number ceiling for `ΥΠ` and similar small inversions.
pub const MAX_PRODUCT_CONDITION: f64 = 1e12;

/// Default position of `F₂` inside its admissible open interval.
pub const DEFAULT_THETA: f64 = 0.5;

/// How a reduced model was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    #[serde(default)]
    pub details: serde_json::Value,
}

impl Provenance {
    pub fn new(method: &str, details: serde_json::Value) -> Self {
        Self {
            method: method.to_string(),
            details,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub system: SecondOrderSystem,
    pub provenance: Provenance,
}

/// Free parameters of the input-side family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyGParams {
    pub f2: CMatrix,
    pub f1: CMatrix,
    pub g: CMatrix,
    pub h1: CMatrix,
}

/// Free parameters of the output-side family.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyHParams {
    pub f2: CMatrix,
    pub f1: CMatrix,
    pub h0: CMatrix,
    pub h1: CMatrix,
}

/// A point where two transfer functions should agree tangentially.
#[derive(Debug, Clone, PartialEq)]
pub enum MatchPoint {
    /// `W(s) l` for a `p`-vector `l`.
    Right { s: Complex64, direction: CVector },
    /// `rᵀ W(s)` for a `q`-vector `r`.
    Left { s: Complex64, direction: CVector },
}

impl MatchPoint {
    pub fn s(&self) -> Complex64 {
        match self {
            MatchPoint::Right { s, .. } | MatchPoint::Left { s, .. } => *s,
        }
    }

    fn project(&self, w: &CMatrix) -> CMatrix {
        match self {
            MatchPoint::Right { direction, .. } => CMatrix::from_column_slice(w.nrows(), 1, (w * direction).as_slice()),
            MatchPoint::Left { direction, .. } => {
                let row = direction.transpose() * w;
                CMatrix::from_row_slice(1, w.ncols(), row.as_slice())
            }
        }
    }

    /// Points equivalent to an interpolation set.
    ///
    /// A non-diagonal shift is diagonalized first (`S = VΛV⁻¹` moves the
    /// directions to `LV`; `Q = ZΛZ⁻¹` moves them to `Z⁻¹R`).
    pub fn from_set(set: &InterpolationSet) -> Result<Vec<MatchPoint>> {
        let (points, dirs) = match set.diagonal_points() {
            Some(points) => (points, set.direction().clone()),
            None => {
                let (lambda, v) = numerics::eigen_decomposition(set.shift())?;
                let dirs = match set.side() {
                    Side::Input => set.direction() * &v,
                    Side::Output => numerics::solve(&v, set.direction())?,
                };
                (lambda, dirs)
            }
        };
        Ok(points
            .into_iter()
            .enumerate()
            .map(|(i, s)| match set.side() {
                Side::Input => MatchPoint::Right {
                    s,
                    direction: dirs.column(i).into_owned(),
                },
                Side::Output => MatchPoint::Left {
                    s,
                    direction: dirs.row(i).transpose(),
                },
            })
            .collect())
    }
}

/// Relative tangential error at one point:
/// `‖W(s)l − Ŵ(s)l‖ / ‖W(s)l‖` (absolute when `W(s)l = 0`).
pub fn match_error(full: &SecondOrderSystem, reduced: &SecondOrderSystem, point: &MatchPoint) -> Result<f64> {
    let w = point.project(&full.eval_transfer(point.s())?);
    let w_hat = point.project(&reduced.eval_transfer(point.s())?);
    let diff = (&w - &w_hat).norm();
    let scale = w.norm();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Per-point tangential errors.
pub fn match_errors(full: &SecondOrderSystem, reduced: &SecondOrderSystem, points: &[MatchPoint]) -> Result<Vec<f64>> {
    points.iter().map(|pt| match_error(full, reduced, pt)).collect()
}

/// Largest relative tangential error over `points`; `≤ 1e-8` certifies matching.
pub fn verify_match(full: &SecondOrderSystem, reduced: &ReducedModel, points: &[MatchPoint]) -> Result<f64> {
    Ok(match_errors(full, &reduced.system, points)?
        .into_iter()
        .fold(0.0, f64::max))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    f2: CMatrix,
    f1: CMatrix,
    f0: CMatrix,
    g: CMatrix,
    h0: CMatrix,
    h1: CMatrix,
    forbidden: &[Complex64],
    provenance: Provenance,
) -> Result<ReducedModel> {
    let system = SecondOrderSystem::new(f2, f1, f0, g, h0, h1)?;
    numerics::ensure_disjoint(system.poles()?, forbidden, "reduced poles vs interpolation points")?;
    Ok(ReducedModel { system, provenance })
}

fn check_square_params(nu: usize, f2: &CMatrix, f1: &CMatrix) -> Result<()> {
    ensure_shape(f2, nu, nu, "F2")?;
    ensure_shape(f1, nu, nu, "F1")
}

fn require_side(set: &InterpolationSet, side: Side) -> Result<()> {
    if set.side() == side {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("expected an {side:?}-side interpolation set")))
    }
}

/// Input-side family member for given `(F₂, F₁, G, H₁)`.
pub fn family_g(sys: &SecondOrderSystem, set: &InterpolationSet, params: &FamilyGParams) -> Result<ReducedModel> {
    require_side(set, Side::Input)?;
    let pi = moments::solve_pi(sys, set)?;
    family_g_with_pi(sys, set, &pi, params, Provenance::new("family_g", json!({})))
}

fn family_g_with_pi(
    sys: &SecondOrderSystem,
    set: &InterpolationSet,
    pi: &CMatrix,
    params: &FamilyGParams,
    provenance: Provenance,
) -> Result<ReducedModel> {
    let nu = set.order();
    let (s, l) = (set.shift(), set.direction());
    check_square_params(nu, &params.f2, &params.f1)?;
    ensure_shape(&params.g, nu, sys.p(), "G")?;
    ensure_shape(&params.h1, sys.q(), nu, "H1")?;
    let f0 = &params.g * l - &params.f2 * s * s - &params.f1 * s;
    let h0 = sys.c0() * pi + sys.c1() * pi * s - &params.h1 * s;
    assemble(
        params.f2.clone(),
        params.f1.clone(),
        f0,
        params.g.clone(),
        h0,
        params.h1.clone(),
        &set.eigenvalues()?,
        provenance,
    )
}

/// Output-side family member for given `(F₂, F₁, H₀, H₁)`.
pub fn family_h(sys: &SecondOrderSystem, set: &InterpolationSet, params: &FamilyHParams) -> Result<ReducedModel> {
    require_side(set, Side::Output)?;
    let nu = set.order();
    let (q, r) = (set.shift(), set.direction());
    check_square_params(nu, &params.f2, &params.f1)?;
    ensure_shape(&params.h0, sys.q(), nu, "H0")?;
    ensure_shape(&params.h1, sys.q(), nu, "H1")?;
    let upsilon = moments::solve_upsilon(sys, set)?;
    let f0 = r * &params.h0 + q * r * &params.h1 - q * q * &params.f2 - q * &params.f1;
    let g = &upsilon * sys.b();
    assemble(
        params.f2.clone(),
        params.f1.clone(),
        f0,
        g,
        params.h0.clone(),
        params.h1.clone(),
        &set.eigenvalues()?,
        Provenance::new("family_h", json!({})),
    )
}

/// Outcome of a stability-condition check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// `F₂`, `F₁` and the implied `F₀` all have positive definite Hermitian parts.
    pub definite: bool,
    pub f2_definite: bool,
    pub f1_definite: bool,
    pub f0_definite: bool,
    /// Every finite pencil eigenvalue has negative real part.
    pub spectrally_stable: bool,
    pub max_real_part: f64,
}

fn definiteness_report(f2: &CMatrix, f1: &CMatrix, f0: &CMatrix) -> Result<StabilityReport> {
    let pd = |x: &CMatrix| numerics::is_positive_definite(x, 0.0);
    let (f2_definite, f1_definite, f0_definite) = (pd(f2)?, pd(f1)?, pd(f0)?);
    let (spectrally_stable, max_real_part) = match numerics::pencil_eigenvalues(f2, f1, f0) {
        Ok(eigs) => {
            let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
            (max_re < 0.0, max_re)
        }
        Err(_) => (false, f64::NAN),
    };
    Ok(StabilityReport {
        definite: f2_definite && f1_definite && f0_definite,
        f2_definite,
        f1_definite,
        f0_definite,
        spectrally_stable,
        max_real_part,
    })
}

/// Checks `F₂ > 0`, `F₁ > 0`, `GL − F₂S² − F₁S > 0` on Hermitian parts.
pub fn check_stability_condition_g(
    s: &CMatrix,
    l: &CMatrix,
    f2: &CMatrix,
    f1: &CMatrix,
    g: &CMatrix,
) -> Result<StabilityReport> {
    let f0 = g * l - f2 * s * s - f1 * s;
    definiteness_report(f2, f1, &f0)
}

/// Checks `F₂ > 0`, `F₁ > 0`, `RH₀ + QRH₁ − Q²F₂ − QF₁ > 0` on Hermitian parts.
pub fn check_stability_condition_h(
    q: &CMatrix,
    r: &CMatrix,
    f2: &CMatrix,
    f1: &CMatrix,
    h0: &CMatrix,
    h1: &CMatrix,
) -> Result<StabilityReport> {
    let f0 = r * h0 + q * r * h1 - q * q * f2 - q * f1;
    definiteness_report(f2, f1, &f0)
}

/// Eigen-decomposition of a shift with real negative spectrum.
fn negative_real_decomposition(shift: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (lambda, v) = numerics::eigen_decomposition(shift)?;
    let mut real = Vec::with_capacity(lambda.len());
    for z in lambda {
        if z.im.abs() > 1e-10 * (1.0 + z.norm()) || z.re >= 0.0 {
            return Err(Error::NonNegativeEigenvalue(format!(
                "eigenvalue {} {:+}i is not real and negative",
                z.re, z.im
            )));
        }
        real.push(z.re);
    }
    Ok((real, v))
}

fn check_free_damping(dfree: &[f64], nu: usize, theta: f64) -> Result<()> {
    if dfree.len() != nu {
        return Err(Error::DimensionMismatch(format!(
            "free damping needs {nu} entries, got {}",
            dfree.len()
        )));
    }
    if dfree.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
        return Err(Error::InvalidParameter("free damping entries must be positive".into()));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0, 1), got {theta}")));
    }
    Ok(())
}

fn real_diag(values: &[f64]) -> CMatrix {
    let z: Vec<Complex64> = values.iter().map(|&x| c64(x, 0.0)).collect();
    numerics::diag(&z)
}

/// `F₁ = T*DT`, `F₂ = θ(−T*DΛ⁻¹T)`, `G = L*` for `S = T⁻¹ΛT`.
///
/// Then `F₀ = L*L + (1 − θ)T*D(−Λ)T` is positive definite as well.
pub fn stable_choice_g(s: &CMatrix, l: &CMatrix, dfree: &[f64], theta: f64) -> Result<(CMatrix, CMatrix, CMatrix)> {
    numerics::ensure_square(s, "S")?;
    ensure_shape(l, l.nrows(), s.nrows(), "L")?;
    check_free_damping(dfree, s.nrows(), theta)?;
    let (lambda, v) = negative_real_decomposition(s)?;
    let t = numerics::inverse(&v)?;
    let d = real_diag(dfree);
    let d_over_lambda: Vec<f64> = dfree.iter().zip(&lambda).map(|(d, l)| -d / l).collect();
    let f1 = t.adjoint() * &d * &t;
    let f2 = t.adjoint() * real_diag(&d_over_lambda) * &t * c64(theta, 0.0);
    Ok((f2, f1, l.adjoint()))
}

/// `F₁ = ZDZ*`, `F₂ = θ(−ZDΛ⁻¹Z*)`, `H₀ = R*`, `H₁ = R*Q*` for `Q = ZΛZ⁻¹`.
///
/// Then `F₀ = RR* + QRR*Q* + (1 − θ)Z(−ΛD)Z*` is Hermitian positive
/// definite. `H₁ = R*Q` gives the same model when `Q` is Hermitian but can
/// leave `F₀` indefinite for non-normal `Q`.
pub fn stable_choice_h(
    q: &CMatrix,
    r: &CMatrix,
    dfree: &[f64],
    theta: f64,
) -> Result<(CMatrix, CMatrix, CMatrix, CMatrix)> {
    numerics::ensure_square(q, "Q")?;
    ensure_shape(r, q.nrows(), r.ncols(), "R")?;
    check_free_damping(dfree, q.nrows(), theta)?;
    let (lambda, z) = negative_real_decomposition(q)?;
    let d = real_diag(dfree);
    let d_over_lambda: Vec<f64> = dfree.iter().zip(&lambda).map(|(d, l)| -d / l).collect();
    let f1 = &z * &d * z.adjoint();
    let f2 = &z * real_diag(&d_over_lambda) * z.adjoint() * c64(theta, 0.0);
    let h0 = r.adjoint();
    let h1 = r.adjoint() * q.adjoint();
    Ok((f2, f1, h0, h1))
}

/// Input-side family member from [`stable_choice_g`].
pub fn stable_model_g(
    sys: &SecondOrderSystem,
    set: &InterpolationSet,
    dfree: &[f64],
    theta: f64,
    h1: CMatrix,
) -> Result<ReducedModel> {
    let (f2, f1, g) = stable_choice_g(set.shift(), set.direction(), dfree, theta)?;
    let mut model = family_g(sys, set, &FamilyGParams { f2, f1, g, h1 })?;
    model.provenance = Provenance::new("stable_g", json!({ "theta": theta, "dfree": dfree }));
    Ok(model)
}

/// Output-side family member from [`stable_choice_h`].
pub fn stable_model_h(sys: &SecondOrderSystem, set: &InterpolationSet, dfree: &[f64], theta: f64) -> Result<ReducedModel> {
    let (f2, f1, h0, h1) = stable_choice_h(set.shift(), set.direction(), dfree, theta)?;
    ensure_shape(&h0, sys.q(), set.order(), "R*")?;
    let mut model = family_h(sys, set, &FamilyHParams { f2, f1, h0, h1 })?;
    model.provenance = Provenance::new("stable_h", json!({ "theta": theta, "dfree": dfree }));
    Ok(model)
}

fn hermitian_pd(x: &CMatrix, name: &str) -> Result<()> {
    let skew = (x - x.adjoint()).norm();
    if skew > 1e-12 * x.norm() {
        return Err(Error::PassivityPreconditionViolated(format!("{name} is not symmetric")));
    }
    if !numerics::is_positive_definite(x, 0.0)? {
        return Err(Error::PassivityPreconditionViolated(format!("{name} is not positive definite")));
    }
    Ok(())
}

fn check_passivity_structure(sys: &SecondOrderSystem) -> Result<()> {
    hermitian_pd(sys.m(), "M")?;
    hermitian_pd(sys.d(), "D")?;
    hermitian_pd(sys.k(), "K")?;
    if sys.p() != sys.q() {
        return Err(Error::PassivityPreconditionViolated(format!(
            "needs as many outputs as inputs, got p = {}, q = {}",
            sys.p(),
            sys.q()
        )));
    }
    if sys.c0().norm() != 0.0 {
        return Err(Error::PassivityPreconditionViolated("C0 must vanish".into()));
    }
    if (sys.c1() - sys.b().adjoint()).norm() > 1e-14 * sys.b().norm() {
        return Err(Error::PassivityPreconditionViolated("C1 must equal B*".into()));
    }
    Ok(())
}

fn full_rank(x: &CMatrix, expected: usize) -> Result<()> {
    let rank = numerics::numerical_rank(x, 1e-10);
    if rank < expected {
        Err(Error::RankDeficientPi { rank, expected })
    } else {
        Ok(())
    }
}

fn passive_details(sys: &SecondOrderSystem, model: &SecondOrderSystem, set: &InterpolationSet) -> serde_json::Value {
    let residual = MatchPoint::from_set(set)
        .and_then(|pts| match_errors(sys, model, &pts))
        .map(|e| e.into_iter().fold(0.0, f64::max))
        .ok();
    json!({ "match_residual": residual })
}

/// Galerkin projection with `Π`: `Fᵢ = Π*XΠ`, `G = Π*B`, `H₁ = B*Π`, `H₀ = 0`.
///
/// Requires symmetric positive definite `M, D, K`, `C₀ = 0` and `C₁ = B*`.
/// Moment matching is not implied; the achieved residual is recorded in
/// the provenance as `match_residual`.
pub fn passive_galerkin_g(sys: &SecondOrderSystem, set: &InterpolationSet) -> Result<ReducedModel> {
    require_side(set, Side::Input)?;
    check_passivity_structure(sys)?;
    let pi = moments::solve_pi(sys, set)?;
    full_rank(&pi, set.order())?;
    let pa = pi.adjoint();
    let system = SecondOrderSystem::new(
        &pa * sys.m() * &pi,
        &pa * sys.d() * &pi,
        &pa * sys.k() * &pi,
        &pa * sys.b(),
        CMatrix::zeros(sys.q(), set.order()),
        sys.b().adjoint() * &pi,
    )?;
    let details = passive_details(sys, &system, set);
    Ok(ReducedModel {
        system,
        provenance: Provenance::new("passive_g", details),
    })
}

/// Galerkin projection with `Υ*`: `Fᵢ = ΥXΥ*`, `G = ΥB`, `H₁ = B*Υ*`, `H₀ = 0`.
pub fn passive_galerkin_h(sys: &SecondOrderSystem, set: &InterpolationSet) -> Result<ReducedModel> {
    require_side(set, Side::Output)?;
    check_passivity_structure(sys)?;
    let ups = moments::solve_upsilon(sys, set)?;
    full_rank(&ups, set.order())?;
    let ua = ups.adjoint();
    let system = SecondOrderSystem::new(
        &ups * sys.m() * &ua,
        &ups * sys.d() * &ua,
        &ups * sys.k() * &ua,
        &ups * sys.b(),
        CMatrix::zeros(sys.q(), set.order()),
        sys.b().adjoint() * &ua,
    )?;
    let details = passive_details(sys, &system, set);
    Ok(ReducedModel {
        system,
        provenance: Provenance::new("passive_h", details),
    })
}

/// `(ΥΠ)⁻¹` with the condition guard.
fn product_inverse(upsilon: &CMatrix, pi: &CMatrix) -> Result<CMatrix> {
    let prod = upsilon * pi;
    let rcond = numerics::reciprocal_condition(&prod);
    if rcond * MAX_PRODUCT_CONDITION < 1.0 {
        return Err(Error::SingularProduct {
            cond: if rcond > 0.0 { 1.0 / rcond } else { f64::INFINITY },
        });
    }
    numerics::inverse(&prod)
}

fn petrov_galerkin_g(
    sys: &SecondOrderSystem,
    pi: &CMatrix,
    upsilon: &CMatrix,
    forbidden: &[Complex64],
    provenance: Provenance,
) -> Result<ReducedModel> {
    let pi_dag = product_inverse(upsilon, pi)? * upsilon;
    assemble(
        &pi_dag * sys.m() * pi,
        &pi_dag * sys.d() * pi,
        &pi_dag * sys.k() * pi,
        &pi_dag * sys.b(),
        sys.c0() * pi,
        sys.c1() * pi,
        forbidden,
        provenance,
    )
}

fn two_sided_bases(
    sys: &SecondOrderSystem,
    input: &InterpolationSet,
    output: &InterpolationSet,
) -> Result<(CMatrix, CMatrix, Vec<Complex64>)> {
    require_side(input, Side::Input)?;
    require_side(output, Side::Output)?;
    if input.order() != output.order() {
        return Err(Error::DimensionMismatch(format!(
            "input and output sets have orders {} and {}",
            input.order(),
            output.order()
        )));
    }
    let pi = moments::solve_pi(sys, input)?;
    let upsilon = moments::solve_upsilon(sys, output)?;
    let mut forbidden = input.eigenvalues()?;
    forbidden.extend(output.eigenvalues()?);
    Ok((pi, upsilon, forbidden))
}

/// The unique model matching moments at `σ(S)` and `σ(Q)` at once,
/// `Fᵢ = Π†XΠ`, `G = Π†B`, `H = CΠ` with `Π† = (ΥΠ)⁻¹Υ`.
pub fn two_sided(sys: &SecondOrderSystem, input: &InterpolationSet, output: &InterpolationSet) -> Result<ReducedModel> {
    let (pi, upsilon, forbidden) = two_sided_bases(sys, input, output)?;
    petrov_galerkin_g(sys, &pi, &upsilon, &forbidden, Provenance::new("two_sided", json!({ "form": "G" })))
}

/// Same model in the coordinates of `Υ`: `Fᵢ = ΥXΥ†`, `G = ΥB`,
/// `H = CΥ†` with `Υ† = Π(ΥΠ)⁻¹`.
pub fn two_sided_h(sys: &SecondOrderSystem, input: &InterpolationSet, output: &InterpolationSet) -> Result<ReducedModel> {
    let (pi, upsilon, forbidden) = two_sided_bases(sys, input, output)?;
    let ups_dag = &pi * product_inverse(&upsilon, &pi)?;
    assemble(
        &upsilon * sys.m() * &ups_dag,
        &upsilon * sys.d() * &ups_dag,
        &upsilon * sys.k() * &ups_dag,
        &upsilon * sys.b(),
        sys.c0() * &ups_dag,
        sys.c1() * &ups_dag,
        &forbidden,
        Provenance::new("two_sided", json!({ "form": "H" })),
    )
}

/// Minimum-distance solution of `A X = rhs` from `center`:
/// `X = X_c + A*(AA*)⁻¹(rhs − A X_c)`.
fn nearest_solution(a: &CMatrix, rhs: &CMatrix, center: &CMatrix, aat_inv: &CMatrix) -> CMatrix {
    center + a.adjoint() * aat_inv * (rhs - a * center)
}

/// Input-side family member whose poles include `targets`.
///
/// The output maps `C_p0`, `C_p1` come from the left null space of `Π`,
/// `Υ_p` solves the output-side equation at `diag(targets)` with
/// directions `rp`, and `(F₂, F₁, G)` are the solutions of
/// `Υ_pΠ X = Υ_p{M, D, B}Π` closest to the one-sided Galerkin values
/// `Π⁺{M, D, B}Π`.
pub fn pole_placement(
    sys: &SecondOrderSystem,
    set: &InterpolationSet,
    targets: &[Complex64],
    rp: &CMatrix,
) -> Result<ReducedModel> {
    require_side(set, Side::Input)?;
    let nu = set.order();
    let kappa = targets.len();
    if kappa > nu {
        return Err(Error::InvalidParameter(format!(
            "cannot place {kappa} poles in a model of order {nu}"
        )));
    }
    ensure_shape(rp, kappa, sys.q(), "Rp")?;
    let sigma_s = set.eigenvalues()?;
    numerics::ensure_disjoint(targets, &sigma_s, "targets vs σ(S)")?;
    numerics::ensure_disjoint(targets, sys.poles()?, "targets vs system poles")?;

    let pi = moments::solve_pi(sys, set)?;
    let pa = pi.adjoint();
    let pinv = numerics::solve(&(&pa * &pi), &pa)
        .map_err(|_| Error::RankDeficientPi { rank: numerics::numerical_rank(&pi, 1e-10), expected: nu })?;
    let mut f2 = &pinv * sys.m() * &pi;
    let mut f1 = &pinv * sys.d() * &pi;
    let mut g = &pinv * sys.b();

    if kappa > 0 {
        let null = numerics::left_null_space(&pi, 1e-10);
        let m = null.nrows();
        if m == 0 {
            return Err(Error::NoNullSpace);
        }
        let q = sys.q();
        let mut cp0 = CMatrix::zeros(q, sys.n());
        let mut cp1 = CMatrix::zeros(q, sys.n());
        for i in 0..q {
            cp0.set_row(i, &null.row(i % m));
            cp1.set_row(i, &null.row((q + i) % m));
        }
        let aux = sys.with_outputs(cp0, cp1)?;
        let placement = InterpolationSet::output(numerics::diag(targets), rp.clone())?;
        let ups_p = moments::solve_upsilon(&aux, &placement)?;
        let a = &ups_p * &pi;
        let rank = numerics::numerical_rank(&a, 1e-10);
        if rank < kappa {
            return Err(Error::RankDeficient { rank, expected: kappa });
        }
        let aat_inv = numerics::inverse(&(&a * a.adjoint()))?;
        f2 = nearest_solution(&a, &(&ups_p * sys.m() * &pi), &f2, &aat_inv);
        f1 = nearest_solution(&a, &(&ups_p * sys.d() * &pi), &f1, &aat_inv);
        g = nearest_solution(&a, &(&ups_p * sys.b()), &g, &aat_inv);
    }

    let h1 = sys.c1() * &pi;
    let targets_json: Vec<[f64; 2]> = targets.iter().map(|z| [z.re, z.im]).collect();
    family_g_with_pi(
        sys,
        set,
        &pi,
        &FamilyGParams { f2, f1, g, h1 },
        Provenance::new("pole_place", json!({ "targets": targets_json })),
    )
}

/// Model matching `W` and `W′` at `σ(S)`; requires `C₁ = 0` and `p = q`.
///
/// `Υ` solves `S²ΥM + SΥD + ΥK = −L*C`, which places the output-side
/// interpolation points on top of the input-side ones.
pub fn derivative_matching(sys: &SecondOrderSystem, set: &InterpolationSet) -> Result<ReducedModel> {
    require_side(set, Side::Input)?;
    if sys.c1().norm() != 0.0 {
        return Err(Error::WrongOutputStructure);
    }
    if sys.p() != sys.q() {
        return Err(Error::DimensionMismatch(format!(
            "derivative matching needs p = q, got p = {}, q = {}",
            sys.p(),
            sys.q()
        )));
    }
    let pi = moments::solve_pi(sys, set)?;
    let dual = InterpolationSet::output(set.shift().clone(), -set.direction().adjoint())?;
    let upsilon = moments::solve_upsilon(sys, &dual)?;
    petrov_galerkin_g(
        sys,
        &pi,
        &upsilon,
        &set.eigenvalues()?,
        Provenance::new("derivative", json!({})),
    )
}
