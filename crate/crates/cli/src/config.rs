//! The resolved run configuration, loadable from JSON or built from flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use somor::numerics::{c64, CMatrix};
use somor::{Complex64, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    GenMsd,
    Reduce,
    Bode,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Method {
    FamilyG,
    FamilyH,
    TwoSided,
    PolePlace,
    Derivative,
    LoewnerM,
    LoewnerK,
    RayleighM,
    RayleighK,
    StableG,
    StableH,
    PassiveG,
    PassiveH,
}

impl Method {
    pub fn is_loewner(self) -> bool {
        matches!(self, Method::LoewnerM | Method::LoewnerK | Method::RayleighM | Method::RayleighK)
    }

    /// Passive Galerkin models are not guaranteed to match.
    pub fn claims_matching(self) -> bool {
        !matches!(self, Method::PassiveG | Method::PassiveH)
    }

    /// The interpolation side the method reads from `points`.
    pub fn output_side(self) -> bool {
        matches!(self, Method::FamilyH | Method::StableH | Method::PassiveH)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// `iω`
    #[default]
    Imag,
    /// `σ > 0`
    Real,
    /// `−σ < 0`
    NegativeReal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub axis: Axis,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 || !(self.lo > 0.0 && self.hi >= self.lo && self.hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid needs count ≥ 1 and 0 < lo ≤ hi, got {}:{}:{}",
                self.count, self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn omegas(&self) -> Vec<f64> {
        somor::bode::log_grid(self.count, self.lo, self.hi)
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.omegas()
            .into_iter()
            .map(|w| match self.axis {
                Axis::Imag => c64(0.0, w),
                Axis::Real => c64(w, 0.0),
                Axis::NegativeReal => c64(-w, 0.0),
            })
            .collect()
    }
}

/// Explicit `[re, im]` points or a log-spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Points(Vec<[f64; 2]>),
    Grid(GridSpec),
}

impl PointSpec {
    pub fn resolve(&self) -> Result<Vec<Complex64>> {
        let pts = match self {
            PointSpec::Points(p) => p.iter().map(|&[re, im]| c64(re, im)).collect::<Vec<_>>(),
            PointSpec::Grid(g) => {
                g.validate()?;
                g.points()
            }
        };
        if pts.is_empty() || pts.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter("point list must be nonempty and finite".into()));
        }
        Ok(pts)
    }
}

/// A free matrix: a preset name (`"L"`, `"Lss"`, `"zero"`, `"ones"`,
/// `"identity"`, `"random"`, `"random:<seed>"`) or an inline row-major matrix.
pub type ParamSpec = Value;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f2: Option<ParamSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<ParamSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<ParamSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h0: Option<ParamSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<ParamSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mhat: Option<ParamSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub khat: Option<ParamSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rp: Option<ParamSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MsdSpec {
    pub n: usize,
    pub m: f64,
    pub c: f64,
    pub k: f64,
}

/// One invocation. Unused fields stay `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub msd: Option<MsdSpec>,
    #[serde(default)]
    pub method: Option<Method>,
    /// Full-order system file.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Tangential data file (`.json` or `.csv`) for the Loewner methods.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub report: Option<PathBuf>,
    /// Input-side points (output side for `family_h`, `stable_h`,
    /// `passive_h`); right frequencies for Loewner methods, or all `2ν`
    /// frequencies when given as a grid.
    #[serde(default)]
    pub points: Option<PointSpec>,
    /// Output-side points for `two_sided`; left frequencies for Loewner.
    #[serde(default)]
    pub output_points: Option<PointSpec>,
    /// Tangential directions for `points` (`p×ν` or `q×ν`, one column per
    /// point) and for `output_points`.
    #[serde(default)]
    pub directions: Option<ParamSpec>,
    #[serde(default)]
    pub output_directions: Option<ParamSpec>,
    #[serde(default)]
    pub params: FreeParams,
    #[serde(default)]
    pub targets: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub rayleigh: Option<[f64; 2]>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub dfree: Option<Vec<f64>>,
    /// Systems for `bode`.
    #[serde(default)]
    pub models: Vec<PathBuf>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Transfer-matrix entry `(output, input)` for `bode`.
    #[serde(default)]
    pub entry: Option<[usize; 2]>,
    #[serde(default)]
    pub full: Option<PathBuf>,
    #[serde(default)]
    pub reduced: Option<PathBuf>,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            seed: 0,
            tol: DEFAULT_TOL,
            msd: None,
            method: None,
            input: None,
            data: None,
            out: None,
            report: None,
            points: None,
            output_points: None,
            directions: None,
            output_directions: None,
            params: FreeParams::default(),
            targets: None,
            rayleigh: None,
            theta: None,
            dfree: None,
            models: Vec::new(),
            grid: None,
            entry: None,
            full: None,
            reduced: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{:?} needs {what}", self.command)))
            }
        };
        match self.command {
            CommandKind::GenMsd => {
                need(self.msd.is_some(), "msd parameters")?;
                need(self.out.is_some(), "an output path")
            }
            CommandKind::Reduce => {
                need(self.method.is_some(), "a method")?;
                need(self.out.is_some(), "an output path")?;
                need(self.input.is_some() || self.data.is_some(), "an input system or data file")?;
                if self.data.is_some() && !self.method.is_some_and(Method::is_loewner) {
                    return Err(Error::InvalidParameter("a data file only feeds the Loewner methods".into()));
                }
                Ok(())
            }
            CommandKind::Bode => {
                need(!self.models.is_empty(), "at least one model")?;
                need(self.out.is_some(), "an output path")?;
                if let Some(g) = &self.grid {
                    g.validate()?;
                }
                Ok(())
            }
            CommandKind::Validate => {
                need(self.full.is_some(), "a full system")?;
                need(self.reduced.is_some(), "a reduced model")
            }
        }
    }
}

/// Parses `"re,im;re,im;…"`; a bare number is real.
pub fn parse_points(text: &str) -> Result<Vec<[f64; 2]>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let parts: Vec<&str> = item.split(',').map(str::trim).collect();
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse point component {s:?}")))
            };
            match parts.as_slice() {
                [re] => Ok([num(re)?, 0.0]),
                [re, im] => Ok([num(re)?, num(im)?]),
                _ => Err(Error::InvalidParameter(format!("point {item:?} must be re or re,im"))),
            }
        })
        .collect()
}

/// Parses `"count:lo:hi[:axis]"`.
pub fn parse_grid(text: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || Error::InvalidParameter(format!("grid {text:?} must be count:lo:hi[:imag|real|negative_real]"));
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let axis = match parts.get(3).copied() {
        None | Some("imag") => Axis::Imag,
        Some("real") => Axis::Real,
        Some("negative_real") => Axis::NegativeReal,
        Some(_) => return Err(bad()),
    };
    let spec = GridSpec {
        count: parts[0].parse().map_err(|_| bad())?,
        lo: parts[1].parse().map_err(|_| bad())?,
        hi: parts[2].parse().map_err(|_| bad())?,
        axis,
    };
    spec.validate()?;
    Ok(spec)
}

/// A flag value: inline JSON when it starts with `[`, otherwise a preset name.
pub fn parse_param(text: &str) -> Result<ParamSpec> {
    if text.trim_start().starts_with('[') {
        Ok(serde_json::from_str(text)?)
    } else {
        Ok(Value::String(text.to_string()))
    }
}

/// `(a, b)` from `"a,b"`.
pub fn parse_pair(text: &str) -> Result<[f64; 2]> {
    let v: Vec<f64> = parse_list(text)?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::InvalidParameter(format!("expected two numbers, got {text:?}"))),
    }
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("cannot parse number {s:?}")))
        })
        .collect()
}

/// Named matrices available to presets, beyond the generic ones.
#[derive(Default)]
pub struct Presets<'a> {
    pub named: Vec<(&'a str, &'a CMatrix)>,
}

/// Resolves a [`ParamSpec`] to a `rows×cols` matrix.
pub fn resolve_param(
    spec: &ParamSpec,
    rows: usize,
    cols: usize,
    seed: u64,
    presets: &Presets<'_>,
    name: &str,
) -> Result<CMatrix> {
    let m = match spec {
        Value::String(s) => match s.as_str() {
            "zero" => CMatrix::zeros(rows, cols),
            "ones" => CMatrix::from_element(rows, cols, c64(1.0, 0.0)),
            "identity" => CMatrix::identity(rows, cols),
            "random" => random_matrix(seed, rows, cols),
            other => {
                if let Some(rest) = other.strip_prefix("random:") {
                    let s = rest
                        .parse::<u64>()
                        .map_err(|_| Error::InvalidParameter(format!("{name}: bad seed in {other:?}")))?;
                    random_matrix(s, rows, cols)
                } else if let Some((_, m)) = presets.named.iter().find(|(n, _)| *n == other) {
                    (*m).clone()
                } else {
                    return Err(Error::InvalidParameter(format!("{name}: unknown preset {other:?}")));
                }
            }
        },
        v => somor::format::matrix_from_json(v, name)?,
    };
    if m.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

fn random_matrix(seed: u64, rows: usize, cols: usize) -> CMatrix {
    let mut r = somor::random::rng(seed);
    somor::random::complex_matrix(&mut r, rows, cols)
}
