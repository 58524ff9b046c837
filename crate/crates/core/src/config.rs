//! Run configuration shared by the harness, the report writers and the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cutoff::{asymptotic_params, asymptotic_threshold, feasibility_check, BaseCutoff, CutoffParams, Regime};
use crate::error::{Result, SpliceError};
use crate::harness::fields::FieldSpec;
use crate::harness::{spaced, CheckId, CheckSpec, Param, ParamPoint, Sweep};
use crate::weighted::WeightSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub h_t: f64,
    pub n_s: usize,
    pub n_components: usize,
    /// Extra length added beyond the supports when sizing natural-coordinate grids.
    pub margin: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            h_t: 0.05,
            n_s: 16,
            n_components: 2,
            margin: 8.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffConfig {
    pub order: usize,
    pub l0: f64,
    pub d0: f64,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        Self {
            order: 7,
            l0: 1.5,
            d0: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpliceConfig {
    pub l: f64,
    pub d: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub theta: f64,
}

impl Default for SpliceConfig {
    fn default() -> Self {
        Self {
            l: 4.0,
            d: 12.0,
            r: 20.0,
            theta: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub r0: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { r0: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Fourier modes `0, ±1, …` used by the structured probes.
    pub modes: usize,
    /// Seeded random superpositions added to each probe family.
    pub random: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { modes: 1, random: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("reports") }
    }
}

/// Spacing of a configured sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub param: Param,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl SweepConfig {
    pub fn to_sweep(&self) -> Result<Sweep> {
        Ok(Sweep {
            param: self.param,
            values: spaced(self.from, self.to, self.steps, self.spacing == Spacing::Log)?,
        })
    }
}

/// Per-check overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub enabled: bool,
    pub tolerance: Option<f64>,
    pub sweep: Option<SweepConfig>,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            tolerance: None,
            sweep: None,
        }
    }
}

fn default_weight() -> WeightSpec {
    WeightSpec {
        delta: 0.5,
        k: 1,
        p: 3.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Seeds per seeded check.
    pub n_seeds: usize,
    pub grid: GridConfig,
    #[serde(default = "default_weight")]
    pub weight: WeightSpec,
    pub cutoff: CutoffConfig,
    pub splice: SpliceConfig,
    pub profile: ProfileConfig,
    pub regime: Regime,
    pub field: FieldSpec,
    pub probes: ProbeConfig,
    pub output: OutputConfig,
    /// Overrides keyed by check id.
    pub checks: BTreeMap<String, CheckConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_seeds: 10,
            grid: GridConfig::default(),
            weight: default_weight(),
            cutoff: CutoffConfig::default(),
            splice: SpliceConfig::default(),
            profile: ProfileConfig::default(),
            regime: Regime::Free,
            field: FieldSpec::default(),
            probes: ProbeConfig::default(),
            output: OutputConfig::default(),
            checks: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SpliceError::InvalidParameter(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SpliceError::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.weight.validate()?;
        BaseCutoff::new(self.cutoff.order)?;
        let g = &self.grid;
        if !(g.h_t > 0.0 && g.h_t.is_finite()) || g.n_s < 4 || g.n_components == 0 || !(g.margin >= 0.0) {
            return Err(SpliceError::InvalidGrid(format!(
                "need h_t > 0, n_s >= 4, n_components >= 1 and margin >= 0, got {g:?}"
            )));
        }
        if self.n_seeds == 0 {
            return Err(SpliceError::InvalidParameter("n_seeds must be at least 1".into()));
        }
        self.field.validate(self.weight.delta)?;
        if !(self.profile.r0 > 0.0 && self.profile.r0.is_finite()) {
            return Err(SpliceError::InvalidParameter(format!("profile r0 must be positive, got {}", self.profile.r0)));
        }
        if !self.splice.theta.is_finite() {
            return Err(SpliceError::InvalidParameter("theta must be finite".into()));
        }
        let params = self.cutoff_params()?;
        match self.regime {
            Regime::Free => {
                if !feasibility_check(&params, self.splice.r) {
                    return Err(SpliceError::Infeasible(format!(
                        "need d + l < R, got l = {}, d = {}, R = {}",
                        params.l, params.d, self.splice.r
                    )));
                }
            }
            Regime::Asymptotic => {
                let r_star = asymptotic_threshold();
                if !(self.splice.r > r_star) {
                    return Err(SpliceError::Infeasible(format!(
                        "the asymptotic binding needs R > {r_star:.6e}, got {}",
                        self.splice.r
                    )));
                }
            }
        }
        for (key, check) in &self.checks {
            key.parse::<CheckId>()?;
            if let Some(tol) = check.tolerance {
                if !(tol >= 0.0 && tol.is_finite()) {
                    return Err(SpliceError::InvalidParameter(format!(
                        "tolerance of {key} must be finite and >= 0"
                    )));
                }
            }
            if let Some(sw) = &check.sweep {
                sw.to_sweep()?;
            }
        }
        Ok(())
    }

    /// Cutoff parameters in force: the configured `(l, d)` or the asymptotic binding at `R`.
    pub fn cutoff_params(&self) -> Result<CutoffParams> {
        match self.regime {
            Regime::Free => CutoffParams::new(self.splice.l, self.splice.d, self.cutoff.l0, self.cutoff.d0),
            Regime::Asymptotic => asymptotic_params(self.splice.r, self.cutoff.l0, self.cutoff.d0),
        }
    }

    /// Parameter point of the configuration itself.
    pub fn point(&self) -> ParamPoint {
        let (l, d) = self
            .cutoff_params()
            .map(|p| (p.l, p.d))
            .unwrap_or((self.splice.l, self.splice.d));
        ParamPoint {
            r: self.splice.r,
            theta: self.splice.theta,
            delta: self.weight.delta,
            k: self.weight.k,
            p: self.weight.p,
            l,
            d,
            seed: None,
        }
    }

    /// A copy with one parameter replaced.
    pub fn with_param(&self, param: Param, value: f64) -> Self {
        let mut c = self.clone();
        match param {
            Param::R => c.splice.r = value,
            Param::Theta => c.splice.theta = value,
            Param::Delta => c.weight.delta = value,
            Param::K => c.weight.k = value.round().max(0.0) as usize,
            Param::P => c.weight.p = value,
            Param::L => c.splice.l = value,
            Param::D => c.splice.d = value,
            Param::SmallR => {}
            Param::Ht => c.grid.h_t = value,
        }
        c
    }

    /// Checks to run, in canonical order, with their overrides.
    pub fn enabled_checks(&self) -> Result<Vec<CheckSpec>> {
        let mut out = Vec::new();
        for id in CheckId::ALL {
            let over = self.checks.get(id.as_str()).cloned().unwrap_or_default();
            if !over.enabled {
                continue;
            }
            out.push(CheckSpec {
                id,
                tolerance: over.tolerance,
                sweep: over.sweep.as_ref().map(SweepConfig::to_sweep).transpose()?,
            });
        }
        Ok(out)
    }
}
