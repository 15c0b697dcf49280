//! One function per subcommand. Each returns an exit code or a library error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{resolve_param, CommandKind, GridSpec, Method, Presets, RunConfig};
use crate::{EXIT_FAIL, EXIT_OK};
use somor::bode;
use somor::format;
use somor::loewner::{self, TangentialData};
use somor::moments::InterpolationSet;
use somor::numerics::{self, c64};
use somor::par::Execution;
use somor::reduction::{self, FamilyGParams, FamilyHParams, MatchPoint, ReducedModel};
use somor::system::msd_benchmark;
use somor::{CMatrix, CVector, Complex64, Error, Result, SecondOrderSystem};

pub const DEFAULT_BODE_GRID: GridSpec = GridSpec {
    count: 400,
    lo: 1e-2,
    hi: 1e2,
    axis: crate::config::Axis::Imag,
};

pub fn execute(cfg: &RunConfig) -> Result<i32> {
    match cfg.command {
        CommandKind::GenMsd => gen_msd(cfg),
        CommandKind::Reduce => reduce(cfg),
        CommandKind::Bode => bode_csv(cfg),
        CommandKind::Validate => validate(cfg),
    }
}

fn gen_msd(cfg: &RunConfig) -> Result<i32> {
    let spec = cfg.msd.expect("validated");
    let out = cfg.out.as_deref().expect("validated");
    let sys = msd_benchmark(spec.n, spec.m, spec.c, spec.k)?;
    format::save_system(out, &sys)?;
    println!(
        "n = {}, p = {}, q = {}, max Re pole = {:e}",
        sys.n(),
        sys.p(),
        sys.q(),
        sys.max_pole_real_part()?
    );
    Ok(EXIT_OK)
}

/// Which relation a stored point checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    /// `W(s)l`
    Right,
    /// `lᵀW(s)`
    Left,
    /// `rᵀW′(s)l`
    Derivative,
}

/// A matching condition as written into the model's provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredPoint {
    pub kind: PointKind,
    pub s: [f64; 2],
    pub direction: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual: Option<Vec<[f64; 2]>>,
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn vec_pairs(v: &CVector) -> Vec<[f64; 2]> {
    v.iter().map(|z| pair(*z)).collect()
}

fn pairs_vec(v: &[[f64; 2]]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&[re, im]| c64(re, im)))
}

impl StoredPoint {
    fn from_match(pt: &MatchPoint) -> Self {
        match pt {
            MatchPoint::Right { s, direction } => Self {
                kind: PointKind::Right,
                s: pair(*s),
                direction: vec_pairs(direction),
                dual: None,
            },
            MatchPoint::Left { s, direction } => Self {
                kind: PointKind::Left,
                s: pair(*s),
                direction: vec_pairs(direction),
                dual: None,
            },
        }
    }

    fn s(&self) -> Complex64 {
        c64(self.s[0], self.s[1])
    }

    /// Relative error of the reduced model against `reference`, where
    /// `reference` returns the full-order quantity for the point.
    fn residual(&self, reduced: &SecondOrderSystem, full: &SecondOrderSystem) -> Result<f64> {
        let expect = self.evaluate(full)?;
        let got = self.evaluate(reduced)?;
        Ok(relative(&(&got - &expect), &expect))
    }

    /// The compared quantity, flattened.
    fn evaluate(&self, sys: &SecondOrderSystem) -> Result<CVector> {
        let dir = pairs_vec(&self.direction);
        let check = |len: usize| {
            if dir.len() == len {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "stored direction has length {}, system needs {len}",
                    dir.len()
                )))
            }
        };
        let value: CMatrix = match self.kind {
            PointKind::Right => {
                check(sys.p())?;
                let w = sys.eval_transfer(self.s())? * dir;
                CMatrix::from_column_slice(w.len(), 1, w.as_slice())
            }
            PointKind::Left => {
                check(sys.q())?;
                let w = dir.transpose() * sys.eval_transfer(self.s())?;
                CMatrix::from_row_slice(1, w.len(), w.as_slice())
            }
            PointKind::Derivative => {
                check(sys.p())?;
                let dual = pairs_vec(self.dual.as_deref().unwrap_or_default());
                if dual.len() != sys.q() {
                    return Err(Error::DimensionMismatch("stored dual direction has the wrong length".into()));
                }
                let w = dual.transpose() * sys.eval_transfer_derivative(self.s(), 1)? * dir;
                CMatrix::from_element(1, 1, w[(0, 0)])
            }
        };
        Ok(CVector::from_iterator(value.len(), value.iter().copied()))
    }

    /// Error of a model against a data sample, for Loewner methods.
    fn data_residual(&self, model: &SecondOrderSystem, target: &CVector) -> Result<f64> {
        let got = self.evaluate(model)?;
        Ok(relative(&(&got - target), target))
    }
}

fn relative<R: nalgebra::Dim, C: nalgebra::Dim, S1, S2>(
    diff: &nalgebra::Matrix<Complex64, R, C, S1>,
    reference: &nalgebra::Matrix<Complex64, R, C, S2>,
) -> f64
where
    S1: nalgebra::Storage<Complex64, R, C>,
    S2: nalgebra::Storage<Complex64, R, C>,
{
    let scale = reference.norm();
    if scale > 0.0 {
        diff.norm() / scale
    } else {
        diff.norm()
    }
}

fn stored_points(model: &ReducedModel) -> Result<Vec<StoredPoint>> {
    match model.provenance.details.get("match_points") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::ParseError {
            line: 0,
            column: 0,
            message: format!("\"match_points\": {e}"),
        }),
        None => Err(Error::InvalidParameter(
            "the reduced model stores no match points; pass --points or --grid".into(),
        )),
    }
}

/// Everything `reduce` produces besides the model.
struct Outcome {
    model: ReducedModel,
    points: Vec<StoredPoint>,
    residuals: Vec<f64>,
    extra: BTreeMap<&'static str, Value>,
}

fn reduce(cfg: &RunConfig) -> Result<i32> {
    let method = cfg.method.expect("validated");
    let mut outcome = if method.is_loewner() {
        reduce_loewner(cfg, method)?
    } else {
        let path = cfg.input.as_deref().expect("validated");
        let sys = format::load_system(path)?;
        reduce_moments(cfg, method, &sys)?
    };

    let details = &mut outcome.model.provenance.details;
    if !details.is_object() {
        *details = json!({});
    }
    details["seed"] = json!(cfg.seed);
    details["match_points"] = serde_json::to_value(&outcome.points)?;
    format::save_model(cfg.out.as_deref().expect("validated"), &outcome.model)?;

    let max_residual = outcome.residuals.iter().copied().fold(0.0, f64::max);
    let pass = max_residual <= cfg.tol;
    let sys = &outcome.model.system;
    let mut poles: Vec<Complex64> = sys.poles()?.to_vec();
    poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let max_re = poles.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);

    let residuals: Vec<Value> = outcome
        .points
        .iter()
        .zip(&outcome.residuals)
        .map(|(p, r)| json!({ "kind": p.kind, "s": p.s, "residual": r }))
        .collect();
    let mut report = json!({
        "tool": "somor",
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(cfg)?,
        "method": outcome.model.provenance.method,
        "order": sys.n(),
        "residuals": residuals,
        "max_residual": max_residual,
        "tolerance": cfg.tol,
        "claims_matching": method.claims_matching(),
        "pass": pass,
        "poles": poles.iter().map(|z| pair(*z)).collect::<Vec<_>>(),
        "max_pole_real_part": if poles.is_empty() { Value::Null } else { json!(max_re) },
    });
    for (k, v) in outcome.extra {
        report[k] = v;
    }
    if let Some(path) = &cfg.report {
        format::write_json(path, &report)?;
    }

    println!(
        "{}: order {}, max residual {:e} (tol {:e}) {}",
        outcome.model.provenance.method,
        sys.n(),
        max_residual,
        cfg.tol,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass || !method.claims_matching() { EXIT_OK } else { EXIT_FAIL })
}

/// Builds a matrix parameter; `slot` decorrelates the `"random"` preset
/// between parameters sharing one seed.
fn param(
    cfg: &RunConfig,
    spec: Option<&Value>,
    default: &str,
    (rows, cols): (usize, usize),
    slot: u64,
    presets: &Presets<'_>,
    name: &str,
) -> Result<CMatrix> {
    let fallback = Value::String(default.to_string());
    let seed = cfg.seed.wrapping_mul(0x9E37_79B9).wrapping_add(slot);
    resolve_param(spec.unwrap_or(&fallback), rows, cols, seed, presets, name)
}

fn require_points(cfg: &RunConfig, output: bool) -> Result<Vec<Complex64>> {
    let (spec, flag) = if output {
        (&cfg.output_points, "output points")
    } else {
        (&cfg.points, "points")
    };
    spec.as_ref()
        .ok_or_else(|| Error::InvalidParameter(format!("this method needs {flag}")))?
        .resolve()
}

fn input_set(cfg: &RunConfig, sys: &SecondOrderSystem, pts: &[Complex64]) -> Result<InterpolationSet> {
    let none = Presets::default();
    let l = param(cfg, cfg.directions.as_ref(), "ones", (sys.p(), pts.len()), 100, &none, "directions")?;
    InterpolationSet::input(numerics::diag(pts), l)
}

fn output_set(cfg: &RunConfig, sys: &SecondOrderSystem, pts: &[Complex64], spec: Option<&Value>) -> Result<InterpolationSet> {
    let none = Presets::default();
    let r = param(cfg, spec, "ones", (sys.q(), pts.len()), 101, &none, "output directions")?;
    InterpolationSet::output(numerics::diag(pts), r.transpose())
}

fn definiteness(model: &SecondOrderSystem) -> Result<Value> {
    let pd = |x: &CMatrix| numerics::is_positive_definite(x, 0.0);
    let (m, d, k) = (pd(model.m())?, pd(model.d())?, pd(model.k())?);
    Ok(json!({ "m_definite": m, "d_definite": d, "k_definite": k, "all": m && d && k }))
}

fn reduce_moments(cfg: &RunConfig, method: Method, sys: &SecondOrderSystem) -> Result<Outcome> {
    let pts = require_points(cfg, false)?;
    let nu = pts.len();
    let none = Presets::default();
    let mut extra = BTreeMap::new();

    let (model, points) = match method {
        Method::FamilyG | Method::StableG | Method::PassiveG | Method::PolePlace | Method::Derivative => {
            let set = input_set(cfg, sys, &pts)?;
            let model = match method {
                Method::FamilyG => {
                    let p = &cfg.params;
                    let params = FamilyGParams {
                        f2: param(cfg, p.f2.as_ref(), "random", (nu, nu), 0, &none, "F2")?,
                        f1: param(cfg, p.f1.as_ref(), "random", (nu, nu), 1, &none, "F1")?,
                        g: param(cfg, p.g.as_ref(), "random", (nu, sys.p()), 2, &none, "G")?,
                        h1: param(cfg, p.h1.as_ref(), "zero", (sys.q(), nu), 4, &none, "H1")?,
                    };
                    reduction::family_g(sys, &set, &params)?
                }
                Method::StableG => {
                    let h1 = param(cfg, cfg.params.h1.as_ref(), "zero", (sys.q(), nu), 4, &none, "H1")?;
                    let dfree = cfg.dfree.clone().unwrap_or_else(|| vec![1.0; nu]);
                    let theta = cfg.theta.unwrap_or(reduction::DEFAULT_THETA);
                    reduction::stable_model_g(sys, &set, &dfree, theta, h1)?
                }
                Method::PassiveG => reduction::passive_galerkin_g(sys, &set)?,
                Method::PolePlace => {
                    let targets: Vec<Complex64> = cfg
                        .targets
                        .as_ref()
                        .ok_or_else(|| Error::InvalidParameter("pole placement needs targets".into()))?
                        .iter()
                        .map(|&[re, im]| c64(re, im))
                        .collect();
                    let rp = param(cfg, cfg.params.rp.as_ref(), "random", (targets.len(), sys.q()), 5, &none, "Rp")?;
                    reduction::pole_placement(sys, &set, &targets, &rp)?
                }
                Method::Derivative => reduction::derivative_matching(sys, &set)?,
                _ => unreachable!(),
            };
            let mut points: Vec<StoredPoint> = MatchPoint::from_set(&set)?.iter().map(StoredPoint::from_match).collect();
            if method == Method::Derivative {
                // The dual set places left directions −l̄ᵢ at the same points.
                let derivs: Vec<StoredPoint> = points
                    .iter()
                    .map(|p| StoredPoint {
                        kind: PointKind::Derivative,
                        s: p.s,
                        direction: p.direction.clone(),
                        dual: Some(p.direction.iter().map(|&[re, im]| [-re, im]).collect()),
                    })
                    .collect();
                points.extend(derivs);
            }
            (model, points)
        }
        Method::FamilyH | Method::StableH | Method::PassiveH => {
            let set = output_set(cfg, sys, &pts, cfg.directions.as_ref())?;
            let model = match method {
                Method::FamilyH => {
                    let p = &cfg.params;
                    let params = FamilyHParams {
                        f2: param(cfg, p.f2.as_ref(), "random", (nu, nu), 0, &none, "F2")?,
                        f1: param(cfg, p.f1.as_ref(), "random", (nu, nu), 1, &none, "F1")?,
                        h0: param(cfg, p.h0.as_ref(), "random", (sys.q(), nu), 3, &none, "H0")?,
                        h1: param(cfg, p.h1.as_ref(), "zero", (sys.q(), nu), 4, &none, "H1")?,
                    };
                    reduction::family_h(sys, &set, &params)?
                }
                Method::StableH => {
                    let dfree = cfg.dfree.clone().unwrap_or_else(|| vec![1.0; nu]);
                    let theta = cfg.theta.unwrap_or(reduction::DEFAULT_THETA);
                    reduction::stable_model_h(sys, &set, &dfree, theta)?
                }
                Method::PassiveH => reduction::passive_galerkin_h(sys, &set)?,
                _ => unreachable!(),
            };
            let points = MatchPoint::from_set(&set)?.iter().map(StoredPoint::from_match).collect();
            (model, points)
        }
        Method::TwoSided => {
            let input = input_set(cfg, sys, &pts)?;
            let out_pts = require_points(cfg, true)?;
            let output = output_set(cfg, sys, &out_pts, cfg.output_directions.as_ref())?;
            let model = reduction::two_sided(sys, &input, &output)?;
            let mut points: Vec<StoredPoint> = MatchPoint::from_set(&input)?.iter().map(StoredPoint::from_match).collect();
            points.extend(MatchPoint::from_set(&output)?.iter().map(StoredPoint::from_match));
            (model, points)
        }
        _ => unreachable!("Loewner methods are handled separately"),
    };

    if matches!(method, Method::StableG | Method::StableH | Method::PassiveG | Method::PassiveH) {
        extra.insert("definiteness", definiteness(&model.system)?);
    }
    let residuals = points
        .iter()
        .map(|p| p.residual(&model.system, sys))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome {
        model,
        points,
        residuals,
        extra,
    })
}

fn load_data(path: &Path) -> Result<TangentialData> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        format::tangential_from_csv(fs::File::open(path)?)
    } else {
        format::tangential_from_json(&format::read_json(path)?)
    }
}

fn sample_data(cfg: &RunConfig, sys: &SecondOrderSystem) -> Result<TangentialData> {
    let spec = cfg
        .points
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("Loewner methods need points, a grid or a data file".into()))?;
    let (alphas, betas) = match (spec, &cfg.output_points) {
        (crate::config::PointSpec::Grid(g), None) => {
            if g.count % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "a Loewner grid splits into right and left halves, so its count must be even, got {}",
                    g.count
                )));
            }
            let all = spec.resolve()?;
            let right = all.iter().step_by(2).copied().collect::<Vec<_>>();
            let left = all.iter().skip(1).step_by(2).copied().collect::<Vec<_>>();
            (right, left)
        }
        (_, Some(out)) => (spec.resolve()?, out.resolve()?),
        (_, None) => {
            return Err(Error::InvalidParameter(
                "explicit Loewner points need output points for the left side".into(),
            ))
        }
    };
    let none = Presets::default();
    let r = param(cfg, cfg.directions.as_ref(), "ones", (sys.p(), alphas.len()), 100, &none, "directions")?;
    let l = param(cfg, cfg.output_directions.as_ref(), "ones", (sys.q(), betas.len()), 101, &none, "output directions")?;
    loewner::sample_tangential(sys, &alphas, &betas, &r, &l, Execution::Auto)
}

fn reduce_loewner(cfg: &RunConfig, method: Method) -> Result<Outcome> {
    let data = match (&cfg.data, &cfg.input) {
        (Some(path), _) => load_data(path)?,
        (None, Some(path)) => sample_data(cfg, &format::load_system(path)?)?,
        (None, None) => unreachable!("validated"),
    };
    let triple = loewner::build_loewner(&data, Execution::Auto)?;
    let nu = data.order();
    let presets = Presets {
        named: vec![("L", &triple.l), ("Ls", &triple.ls), ("Lss", &triple.lss)],
    };
    let mut extra = BTreeMap::new();
    let rayleigh = || {
        cfg.rayleigh
            .ok_or_else(|| Error::InvalidParameter("Rayleigh methods need --rayleigh a,b".into()))
    };
    let model = match method {
        Method::LoewnerM => {
            let mhat = param(cfg, cfg.params.mhat.as_ref(), "L", (nu, nu), 6, &presets, "Mhat")?;
            loewner::interpolant_family_m(&data, &triple, &mhat)?
        }
        Method::LoewnerK => {
            let khat = param(cfg, cfg.params.khat.as_ref(), "Lss", (nu, nu), 7, &presets, "Khat")?;
            loewner::interpolant_family_k(&data, &triple, &khat)?
        }
        Method::RayleighM | Method::RayleighK => {
            let [a, b] = rayleigh()?;
            let mut model = if method == Method::RayleighM {
                let mhat = loewner::rayleigh_mhat(&data, &triple, a, b)?;
                loewner::interpolant_family_m(&data, &triple, &mhat)?
            } else {
                let khat = loewner::rayleigh_khat(&data, &triple, a, b)?;
                loewner::interpolant_family_k(&data, &triple, &khat)?
            };
            let name = if method == Method::RayleighM { "rayleigh_m" } else { "rayleigh_k" };
            model.provenance = reduction::Provenance::new(name, json!({ "order": nu, "a": a, "b": b }));
            extra.insert("rayleigh_residual", json!(loewner::rayleigh_residual(&model.system, a, b)));
            model
        }
        _ => unreachable!("moment methods are handled separately"),
    };

    let mut points = Vec::with_capacity(2 * nu);
    let mut residuals = Vec::with_capacity(2 * nu);
    for r in &data.right {
        let p = StoredPoint::from_match(&MatchPoint::Right { s: r.alpha, direction: r.r.clone() });
        residuals.push(p.data_residual(&model.system, &r.w)?);
        points.push(p);
    }
    for l in &data.left {
        let p = StoredPoint::from_match(&MatchPoint::Left { s: l.beta, direction: l.l.clone() });
        residuals.push(p.data_residual(&model.system, &l.v)?);
        points.push(p);
    }
    Ok(Outcome {
        model,
        points,
        residuals,
        extra,
    })
}

/// Unique display names from file stems, suffixing repeats with `#k`.
fn labels(paths: &[std::path::PathBuf]) -> Vec<String> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    paths
        .iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into());
            let count = seen.entry(stem.clone()).or_insert(0);
            *count += 1;
            if *count == 1 {
                stem
            } else {
                format!("{stem}#{count}")
            }
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn bode_csv(cfg: &RunConfig) -> Result<i32> {
    let grid = cfg.grid.unwrap_or(DEFAULT_BODE_GRID);
    grid.validate()?;
    let omegas = grid.omegas();
    let [out_idx, in_idx] = cfg.entry.unwrap_or([0, 0]);
    let names = labels(&cfg.models);

    let mut rows: Vec<(String, bode::BodePoint)> = Vec::new();
    for (path, name) in cfg.models.iter().zip(&names) {
        let sys = format::load_model(path)?.system;
        if out_idx >= sys.q() || in_idx >= sys.p() {
            return Err(Error::DimensionMismatch(format!(
                "entry ({out_idx}, {in_idx}) is outside the {}x{} transfer matrix of {}",
                sys.q(),
                sys.p(),
                path.display()
            )));
        }
        for pt in bode::frequency_response(&sys, &omegas, out_idx, in_idx, Execution::Auto)? {
            rows.push((name.clone(), pt));
        }
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.omega.total_cmp(&b.1.omega)));

    let mut text = String::from("omega,model,mag_db,phase_deg\n");
    for (name, pt) in &rows {
        writeln!(text, "{},{},{},{}", pt.omega, csv_field(name), pt.mag_db, pt.phase_deg).expect("string write");
    }
    fs::write(cfg.out.as_deref().expect("validated"), text)?;
    println!("{} rows for {} model(s)", rows.len(), names.len());
    Ok(EXIT_OK)
}

fn validate(cfg: &RunConfig) -> Result<i32> {
    let full = format::load_system(cfg.full.as_deref().expect("validated"))?;
    let reduced = format::load_model(cfg.reduced.as_deref().expect("validated"))?;
    if (full.p(), full.q()) != (reduced.system.p(), reduced.system.q()) {
        return Err(Error::DimensionMismatch(format!(
            "full system is {}x{} but the reduced model is {}x{}",
            full.q(),
            full.p(),
            reduced.system.q(),
            reduced.system.p()
        )));
    }

    let mut lines = Vec::new();
    match &cfg.points {
        Some(spec) => {
            for s in spec.resolve()? {
                let w = full.eval_transfer(s)?;
                let w_hat = reduced.system.eval_transfer(s)?;
                lines.push(("full", s, relative(&(&w_hat - &w), &w)));
            }
        }
        None => {
            for p in stored_points(&reduced)? {
                let label = match p.kind {
                    PointKind::Right => "right",
                    PointKind::Left => "left",
                    PointKind::Derivative => "derivative",
                };
                lines.push((label, p.s(), p.residual(&reduced.system, &full)?));
            }
        }
    }
    if lines.is_empty() {
        return Err(Error::InvalidParameter("no points to validate at".into()));
    }
    let mut max = 0.0f64;
    for (label, s, r) in &lines {
        println!("{label:<10} s = {:+e}{:+e}i  residual = {r:e}", s.re, s.im);
        max = max.max(*r);
    }
    let pass = max <= cfg.tol;
    println!(
        "max residual {max:e} (tol {:e}) {}",
        cfg.tol,
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}
