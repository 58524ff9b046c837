//! Numerical verification of the estimates: each check produces result rows that
//! compare a measured quantity with its bound or expected value.

mod checks;
pub mod fields;
pub mod fit;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Result, SpliceError};

pub use fit::{fit_xy, spaced, RateFit, RateModel};

/// Identifier of a verification check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckId {
    DetBounds,
    Roundtrip,
    PipelineAgreement,
    Jensen,
    TauNormBound,
    DOpnormDecay,
    HContinuity,
    EDecay,
    CrossTermDecay,
    DwOpnormLimit,
    DrRate,
    DthetaRate,
    FdDr,
    FdDtheta,
    FdDw,
    PolarAssembly,
    C1AtInfinity,
    DerivativeExtension,
}

/// Whether a check needs a natural-coordinate grid, only closed forms, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Grid,
    Analytic,
    Mixed,
}

impl CheckId {
    pub const ALL: [CheckId; 18] = [
        CheckId::DetBounds,
        CheckId::Roundtrip,
        CheckId::PipelineAgreement,
        CheckId::Jensen,
        CheckId::TauNormBound,
        CheckId::DOpnormDecay,
        CheckId::HContinuity,
        CheckId::EDecay,
        CheckId::CrossTermDecay,
        CheckId::DwOpnormLimit,
        CheckId::DrRate,
        CheckId::DthetaRate,
        CheckId::FdDr,
        CheckId::FdDtheta,
        CheckId::FdDw,
        CheckId::PolarAssembly,
        CheckId::C1AtInfinity,
        CheckId::DerivativeExtension,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::DetBounds => "det_bounds",
            CheckId::Roundtrip => "roundtrip",
            CheckId::PipelineAgreement => "pipeline_agreement",
            CheckId::Jensen => "jensen",
            CheckId::TauNormBound => "tau_norm_bound",
            CheckId::DOpnormDecay => "D_opnorm_decay",
            CheckId::HContinuity => "H_continuity",
            CheckId::EDecay => "E_decay",
            CheckId::CrossTermDecay => "cross_term_decay",
            CheckId::DwOpnormLimit => "dW_opnorm_limit",
            CheckId::DrRate => "dR_rate",
            CheckId::DthetaRate => "dtheta_rate",
            CheckId::FdDr => "fd_dR",
            CheckId::FdDtheta => "fd_dtheta",
            CheckId::FdDw => "fd_dW",
            CheckId::PolarAssembly => "polar_assembly",
            CheckId::C1AtInfinity => "c1_at_infinity",
            CheckId::DerivativeExtension => "derivative_extension",
        }
    }

    pub fn mode(self) -> CheckMode {
        match self {
            CheckId::DetBounds | CheckId::DrRate | CheckId::C1AtInfinity | CheckId::DerivativeExtension => {
                CheckMode::Analytic
            }
            CheckId::DwOpnormLimit | CheckId::PolarAssembly => CheckMode::Mixed,
            _ => CheckMode::Grid,
        }
    }

    /// The parameter a check sweeps on its own, if any; a sweep over it replaces the
    /// built-in sample points instead of repeating the whole check.
    pub fn native_param(self) -> Option<Param> {
        match self {
            CheckId::PipelineAgreement => Some(Param::Ht),
            CheckId::TauNormBound
            | CheckId::DOpnormDecay
            | CheckId::EDecay
            | CheckId::DwOpnormLimit
            | CheckId::DrRate => Some(Param::R),
            CheckId::CrossTermDecay => Some(Param::D),
            CheckId::PolarAssembly | CheckId::C1AtInfinity | CheckId::DerivativeExtension => Some(Param::SmallR),
            _ => None,
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = SpliceError;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SpliceError::InvalidParameter(format!("unknown check id '{s}'")))
    }
}

impl Serialize for CheckId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CheckId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A sweepable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Param {
    /// Gluing length.
    #[serde(rename = "R")]
    R,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "delta")]
    Delta,
    #[serde(rename = "k")]
    K,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "l")]
    L,
    #[serde(rename = "d")]
    D,
    /// Gluing radius of the profile `R(r)`.
    #[serde(rename = "r")]
    SmallR,
    /// Grid spacing in `t`.
    #[serde(rename = "h_t")]
    Ht,
}

impl Param {
    pub fn as_str(self) -> &'static str {
        match self {
            Param::R => "R",
            Param::Theta => "theta",
            Param::Delta => "delta",
            Param::K => "k",
            Param::P => "p",
            Param::L => "l",
            Param::D => "d",
            Param::SmallR => "r",
            Param::Ht => "h_t",
        }
    }
}

impl FromStr for Param {
    type Err = SpliceError;

    fn from_str(s: &str) -> Result<Self> {
        [
            Param::R,
            Param::Theta,
            Param::Delta,
            Param::K,
            Param::P,
            Param::L,
            Param::D,
            Param::SmallR,
            Param::Ht,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
        .ok_or_else(|| SpliceError::InvalidParameter(format!("unknown sweep parameter '{s}'")))
    }
}

/// Explicit values of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub param: Param,
    pub values: Vec<f64>,
}

/// How a row is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// `measured ≤ bound·(1 + tolerance)`
    Bound,
    /// `measured ≥ bound·(1 − tolerance)`
    AtLeast,
    /// `|measured − bound| ≤ tolerance`, the bound column holding the expected value
    Identity,
    /// `measured < bound` strictly, the bound column holding the previous value of a sequence
    Decrease,
}

/// JSON has no non-finite numbers: `inf`, `-inf` and `NaN` are written as strings.
mod float_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&x.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Parameter values a row was measured at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    /// `inf` at the `r = 0` end of the gluing profile.
    #[serde(rename = "R", with = "float_repr")]
    pub r: f64,
    pub theta: f64,
    pub delta: f64,
    pub k: usize,
    pub p: f64,
    #[serde(with = "float_repr")]
    pub l: f64,
    #[serde(with = "float_repr")]
    pub d: f64,
    pub seed: Option<u64>,
}

impl ParamPoint {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn at(mut self, r: f64, l: f64, d: f64) -> Self {
        self.r = r;
        self.l = l;
        self.d = d;
        self
    }
}

/// One measured row of a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: CheckId,
    pub point: ParamPoint,
    /// Short name of the measured quantity.
    pub quantity: String,
    #[serde(with = "float_repr")]
    pub measured: f64,
    #[serde(with = "float_repr")]
    pub bound: f64,
    pub kind: RowKind,
    pub tolerance: f64,
    pub pass: bool,
    /// The bound or expected value in words.
    pub formula: String,
    /// A constant fitted from the data, when the bound involves one.
    pub fitted: Option<f64>,
}

impl CheckResult {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        check_id: CheckId,
        point: ParamPoint,
        quantity: &str,
        kind: RowKind,
        measured: f64,
        bound: f64,
        tolerance: f64,
        formula: impl Into<String>,
    ) -> Self {
        let mut row = Self {
            check_id,
            point,
            quantity: quantity.to_string(),
            measured,
            bound,
            kind,
            tolerance,
            pass: false,
            formula: formula.into(),
            fitted: None,
        };
        row.judge();
        row
    }

    /// A row recording that the parameter point admits no measurement.
    pub fn infeasible(check_id: CheckId, point: ParamPoint, reason: &str) -> Self {
        Self {
            check_id,
            point,
            quantity: "infeasible".into(),
            measured: f64::NAN,
            bound: f64::NAN,
            kind: RowKind::Bound,
            tolerance: 0.0,
            pass: false,
            formula: format!("infeasible: {reason}"),
            fitted: None,
        }
    }

    /// A row recording that the check stopped with a numerical error.
    pub fn error(check_id: CheckId, point: ParamPoint, err: &SpliceError) -> Self {
        Self {
            quantity: "error".into(),
            formula: format!("error: {err}"),
            ..Self::infeasible(check_id, point, "")
        }
    }

    pub fn with_fitted(mut self, c: f64) -> Self {
        self.fitted = Some(c);
        self
    }

    /// Replace the tolerance and re-judge; `Decrease` rows have none.
    pub fn retolerance(&mut self, tolerance: f64) {
        if self.quantity != "infeasible" && self.quantity != "error" {
            self.tolerance = tolerance;
            self.judge();
        }
    }

    fn judge(&mut self) {
        let (m, b, tol) = (self.measured, self.bound, self.tolerance);
        self.pass = !m.is_nan()
            && !b.is_nan()
            && match self.kind {
                RowKind::Bound => m <= b * (1.0 + tol),
                RowKind::AtLeast => m >= b * (1.0 - tol),
                RowKind::Identity => (m - b).abs() <= tol,
                RowKind::Decrease => m < b,
            };
    }
}

/// What to run for one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub id: CheckId,
    /// Replaces the tolerance of every row.
    pub tolerance: Option<f64>,
    pub sweep: Option<Sweep>,
}

impl CheckSpec {
    pub fn new(id: CheckId) -> Self {
        Self {
            id,
            tolerance: None,
            sweep: None,
        }
    }
}

/// Run one check against a validated configuration.
///
/// A sweep over the check's native parameter replaces its built-in sample points; a sweep
/// over any other parameter repeats the check at each value. Parameter points that fail
/// validation yield an infeasible row rather than an error.
pub fn run_check(spec: &CheckSpec, cfg: &RunConfig) -> Result<Vec<CheckResult>> {
    let mut rows = match &spec.sweep {
        None => checks::run(spec.id, cfg, None)?,
        Some(sw) if Some(sw.param) == spec.id.native_param() => checks::run(spec.id, cfg, Some(&sw.values))?,
        Some(sw) if sw.param == Param::SmallR => {
            return Err(SpliceError::InvalidParameter(format!(
                "{} does not depend on the profile radius r",
                spec.id
            )))
        }
        Some(sw) => {
            let mut rows = Vec::new();
            for &v in &sw.values {
                let point_cfg = cfg.with_param(sw.param, v);
                match point_cfg.validate() {
                    Ok(()) => rows.extend(checks::run(spec.id, &point_cfg, None)?),
                    Err(e) => rows.push(CheckResult::infeasible(spec.id, point_cfg.point(), &e.to_string())),
                }
            }
            rows
        }
    };
    if let Some(tol) = spec.tolerance {
        for row in &mut rows {
            row.retolerance(tol);
        }
    }
    Ok(rows)
}

/// Fit `model` to the rows whose `quantity` matches, against `param`.
///
/// Rows record `R` rather than the profile radius, so `r` and `h_t` are not valid abscissae.
pub fn fit_rate(results: &[CheckResult], quantity: &str, param: Param, model: RateModel) -> Result<RateFit> {
    let mut points = Vec::new();
    for row in results.iter().filter(|r| r.quantity == quantity) {
        let p = &row.point;
        let x = match param {
            Param::R => p.r,
            Param::Theta => p.theta,
            Param::Delta => p.delta,
            Param::K => p.k as f64,
            Param::P => p.p,
            Param::L => p.l,
            Param::D => p.d,
            Param::SmallR | Param::Ht => {
                return Err(SpliceError::DegenerateFit(format!(
                    "result rows do not record '{}'",
                    param.as_str()
                )))
            }
        };
        points.push((x, row.measured));
    }
    fit_xy(&points, model)
}
