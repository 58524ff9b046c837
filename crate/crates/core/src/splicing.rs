//! Splicing matrices, the connection form ω and the total gluing `T^a` of a
//! pair of half-cylinder maps together with its explicit inverse.
//!
//! Coordinates: `u_−` lives on `C_− = (−∞, 0] × S¹`, `u_+` on `C_+ = [0, ∞) × S¹`.
//! With `a = (R, θ)` the neck coordinate `t` reads `u_−` at `(t − R, s − θ)` and
//! `u_+` at `(t + R, s + θ)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutoff::{beta_eval, BaseCutoff, CutoffParams, Side};
use crate::error::{Result, SpliceError};
use crate::grid::{translate, CylinderGrid, DiscreteMap};
use crate::weighted::{NormSpec, WeightedField};

/// 2×2 real matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];

pub const M1: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
pub const M2: Mat2 = [[1.0, -1.0], [1.0, 1.0]];
pub const M3: Mat2 = [[0.0, -1.0], [1.0, 0.0]];

pub fn det(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Gluing parameter `a = (R, θ)`; `R = ∞` means the pair is not glued at all.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GluingParam {
    pub r: f64,
    pub theta: f64,
}

impl GluingParam {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    pub fn infinite(theta: f64) -> Self {
        Self {
            r: f64::INFINITY,
            theta,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.r.is_infinite()
    }

    /// `R` rounded to the nearest multiple of `h`; the sentinel is left untouched.
    pub fn snapped(&self, h: f64) -> Self {
        if self.is_infinite() {
            return *self;
        }
        Self {
            r: (self.r / h).round() * h,
            theta: self.theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    M1,
    SpliceMinus,
    M2,
    SplicePlus,
    M3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Alpha,
    Beta,
}

/// Per-t samples of the splicing cutoffs and their first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct SplicingField {
    pub t: Vec<f64>,
    pub beta_minus: Vec<f64>,
    pub beta_plus: Vec<f64>,
    pub d_beta_minus: Vec<f64>,
    pub d_beta_plus: Vec<f64>,
    pub dd_beta_minus: Vec<f64>,
    pub dd_beta_plus: Vec<f64>,
    pub det: Vec<f64>,
    pub region: Vec<Region>,
}

/// Per-t samples of the connection entries `e` and `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionField {
    pub t: Vec<f64>,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
}

/// A pair of maps on the two half-cylinders.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPair {
    pub minus: DiscreteMap,
    pub plus: DiscreteMap,
}

/// The glued pair `(η_−, η_+) = (ξ_− ⊖_a ξ_+, ξ_− ⊕_a ξ_+)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GluedPair {
    pub minus: DiscreteMap,
    pub plus: DiscreteMap,
}

impl MapPair {
    pub fn new(minus: DiscreteMap, plus: DiscreteMap) -> Result<Self> {
        if minus.n_components() != plus.n_components()
            || minus.grid().lattice_offset(plus.grid()).is_none()
        {
            return Err(SpliceError::ShapeMismatch(
                "pair components must share the t-lattice and component count".into(),
            ));
        }
        Ok(Self { minus, plus })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            minus: DiscreteMap::zeros(self.minus.grid(), self.minus.n_components()),
            plus: DiscreteMap::zeros(self.plus.grid(), self.plus.n_components()),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.minus.max_abs().max(self.plus.max_abs())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    /// Restrict both components to the grids of `like`.
    pub fn restrict_to(&self, like: &MapPair) -> Result<Self> {
        Ok(Self {
            minus: self.minus.restrict(like.minus.grid())?,
            plus: self.plus.restrict(like.plus.grid())?,
        })
    }
}

/// `(‖u_−‖^p + ‖u_+‖^p)^{1/p}`.
impl WeightedField for MapPair {
    fn weighted_norm(&self, spec: &NormSpec) -> Result<f64> {
        let a = self.minus.weighted_norm(spec)?;
        let b = self.plus.weighted_norm(spec)?;
        Ok((a.powf(spec.p) + b.powf(spec.p)).powf(1.0 / spec.p))
    }

    fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        Ok(Self {
            minus: self.minus.lin_comb(a, &other.minus, b)?,
            plus: self.plus.lin_comb(a, &other.plus, b)?,
        })
    }
}

/// The configured cutoff family `β_±(·; l, d)` and everything built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SplicingFamily {
    pub cutoff: BaseCutoff,
    pub params: CutoffParams,
}

impl SplicingFamily {
    pub fn new(cutoff: BaseCutoff, params: CutoffParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { cutoff, params })
    }

    /// `β_±^{(deriv)}(t)`; `deriv` never exceeds the cutoff order in internal use.
    pub fn beta(&self, side: Side, t: f64, deriv: usize) -> f64 {
        beta_eval(&self.cutoff, &self.params, side, t, deriv).expect("derivative order within cutoff order")
    }

    /// `D = β_−² + β_+²`.
    pub fn det(&self, t: f64) -> f64 {
        let (bm, bp) = (self.beta(Side::Minus, t, 0), self.beta(Side::Plus, t, 0));
        bm * bm + bp * bp
    }

    /// Half-length `l + d` of the non-constant part of the splicing matrix.
    pub fn half_length(&self) -> f64 {
        self.params.l + self.params.d
    }

    pub fn region(&self, t: f64) -> Region {
        let CutoffParams { l, d, .. } = self.params;
        if t < -d - l {
            Region::M1
        } else if t <= -d + l {
            Region::SpliceMinus
        } else if t < d - l {
            Region::M2
        } else if t <= d + l {
            Region::SplicePlus
        } else {
            Region::M3
        }
    }

    /// `T_α = [α, −(1−α); 1−α, α]` at `α = α(t)`, or `T_β = [β_−, −β_+; β_+, β_−]`.
    pub fn splicing_matrix(&self, t: f64, kind: MatrixKind) -> Mat2 {
        match kind {
            MatrixKind::Alpha => {
                let a = self.cutoff.eval(t, 0).expect("order 0");
                [[a, -(1.0 - a)], [1.0 - a, a]]
            }
            MatrixKind::Beta => {
                let (bm, bp) = (self.beta(Side::Minus, t, 0), self.beta(Side::Plus, t, 0));
                [[bm, -bp], [bp, bm]]
            }
        }
    }

    /// `ω(t) = −[β_−′, −β_+′; 0, 0]·T_β^{−1} = [e, f; 0, 0]`.
    pub fn connection_omega(&self, t: f64) -> Mat2 {
        let (e, f) = self.connection_entries(t);
        [[e, f], [0.0, 0.0]]
    }

    fn connection_entries(&self, t: f64) -> (f64, f64) {
        let (bm, bp) = (self.beta(Side::Minus, t, 0), self.beta(Side::Plus, t, 0));
        let (dbm, dbp) = (self.beta(Side::Minus, t, 1), self.beta(Side::Plus, t, 1));
        let d = bm * bm + bp * bp;
        (-(dbm * bm + dbp * bp) / d, -(dbm * bp - dbp * bm) / d)
    }

    pub fn field(&self, t: &[f64]) -> SplicingField {
        let sample = |side, j| t.iter().map(|&x| self.beta(side, x, j)).collect::<Vec<f64>>();
        let beta_minus = sample(Side::Minus, 0);
        let beta_plus = sample(Side::Plus, 0);
        let det = beta_minus
            .iter()
            .zip(&beta_plus)
            .map(|(a, b)| a * a + b * b)
            .collect();
        SplicingField {
            t: t.to_vec(),
            d_beta_minus: sample(Side::Minus, 1),
            d_beta_plus: sample(Side::Plus, 1),
            dd_beta_minus: sample(Side::Minus, 2),
            dd_beta_plus: sample(Side::Plus, 2),
            beta_minus,
            beta_plus,
            det,
            region: t.iter().map(|&x| self.region(x)).collect(),
        }
    }

    pub fn connection_field(&self, t: &[f64]) -> ConnectionField {
        let (e, f) = t.iter().map(|&x| self.connection_entries(x)).unzip();
        ConnectionField { t: t.to_vec(), e, f }
    }

    /// `T^a(u_−, u_+) = T_β·(τ_{−a}u_−, τ_a u_+)`.
    ///
    /// `η_+` lives on `[−R, R]`, `η_−` on the union of the translated supports.
    pub fn total_glue(&self, pair: &MapPair, a: GluingParam) -> Result<GluedPair> {
        if a.is_infinite() {
            return Ok(GluedPair {
                minus: pair.minus.clone(),
                plus: pair.plus.clone(),
            });
        }
        let from_minus = translate(&pair.minus, -a.r, -a.theta)?;
        let from_plus = translate(&pair.plus, a.r, a.theta)?;
        let lattice = from_minus.grid();
        let minus_grid =
            lattice.lattice_span(pair.minus.grid().t_min() + a.r, pair.plus.grid().t_max() - a.r)?;
        let plus_grid = lattice.lattice_span(-a.r, a.r)?;

        let glue_on = |grid: &CylinderGrid, sign_minus: f64| -> Result<DiscreteMap> {
            let f = self.field(&grid.t_values());
            let wm = from_minus.window(grid)?;
            let wp = from_plus.window(grid)?;
            let mut out = DiscreteMap::zeros(grid, pair.minus.n_components());
            // η_− = β_−·A − β_+·B,  η_+ = β_+·A + β_−·B
            if sign_minus < 0.0 {
                wm.accumulate_into(&f.beta_minus, &mut out)?;
                wp.accumulate_into(&negate(&f.beta_plus), &mut out)?;
            } else {
                wm.accumulate_into(&f.beta_plus, &mut out)?;
                wp.accumulate_into(&f.beta_minus, &mut out)?;
            }
            Ok(out)
        };
        Ok(GluedPair {
            minus: glue_on(&minus_grid, -1.0)?,
            plus: glue_on(&plus_grid, 1.0)?,
        })
    }

    /// `(T^a)^{−1}(η_−, η_+) = diag(τ_a, τ_{−a})·D^{−1}·[β_−, β_+; −β_+, β_−]·(η_−, η_+)`,
    /// restricted to the grids of `like`.
    pub fn total_unglue(&self, glued: &GluedPair, a: GluingParam, like: &MapPair) -> Result<MapPair> {
        if a.is_infinite() {
            return Ok(MapPair {
                minus: glued.minus.restrict(like.minus.grid())?,
                plus: glued.plus.restrict(like.plus.grid())?,
            });
        }
        let lattice = glued.minus.grid();
        let (eta_m, eta_p) = (glued.minus.grid(), glued.plus.grid());
        let minus_grid = lattice.lattice_span(eta_m.t_min(), eta_p.t_max())?;
        let plus_grid = lattice.lattice_span(eta_p.t_min(), eta_m.t_max())?;

        let combine = |grid: &CylinderGrid, minus_side: bool| -> Result<DiscreteMap> {
            let f = self.field(&grid.t_values());
            let inv = |v: &[f64]| -> Vec<f64> { v.iter().zip(&f.det).map(|(x, d)| x / d).collect() };
            let wm = glued.minus.window(grid)?;
            let wp = glued.plus.window(grid)?;
            let mut out = DiscreteMap::zeros(grid, glued.minus.n_components());
            if minus_side {
                wm.accumulate_into(&inv(&f.beta_minus), &mut out)?;
                wp.accumulate_into(&inv(&f.beta_plus), &mut out)?;
            } else {
                wm.accumulate_into(&negate(&inv(&f.beta_plus)), &mut out)?;
                wp.accumulate_into(&inv(&f.beta_minus), &mut out)?;
            }
            Ok(out)
        };
        let xi_minus = translate(&combine(&minus_grid, true)?, a.r, a.theta)?;
        let xi_plus = translate(&combine(&plus_grid, false)?, -a.r, -a.theta)?;
        Ok(MapPair {
            minus: xi_minus.restrict(like.minus.grid())?,
            plus: xi_plus.restrict(like.plus.grid())?,
        })
    }
}

fn negate(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

/// Complex form of the splicing: `(β_− + iβ_+)·(η_− + iη_+)`.
pub fn complex_glue(eta: Complex64, beta: Complex64) -> Complex64 {
    beta * eta
}

/// `T·x` for a 2×2 real matrix.
pub fn apply(m: &Mat2, x: [f64; 2]) -> [f64; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}
