//! Exponentially weighted Sobolev norms `‖u‖_{k,p,δ} = ‖e^{δ|t|}·u‖_{k,p}` and
//! lower estimates of operator norms between such spaces.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpliceError};
use crate::grid::{d_s, d_t, CylinderGrid, DiscreteMap};

/// Largest admissible exponent `δ·|t|` before weighted samples are deemed to overflow.
pub const MAX_WEIGHT_EXPONENT: f64 = 600.0;

/// Admissible weighted-space parameters: `0 < δ < 1`, `k ≥ 1`, `p > 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub delta: f64,
    pub k: usize,
    pub p: f64,
}

impl WeightSpec {
    pub fn new(delta: f64, k: usize, p: f64) -> Result<Self> {
        let spec = Self { delta, k, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(SpliceError::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.k < 1 {
            return Err(SpliceError::InvalidParameter("k must be at least 1".into()));
        }
        if !(self.p > 2.0) || !self.p.is_finite() {
            return Err(SpliceError::InvalidParameter(format!(
                "p must be finite and > 2, got {}",
                self.p
            )));
        }
        Ok(())
    }

    /// Norm parameters at derivative order `k`.
    pub fn norm(&self, k: usize) -> NormSpec {
        NormSpec {
            delta: self.delta,
            k,
            p: self.p,
        }
    }

    /// Norm parameters of the space itself.
    pub fn full(&self) -> NormSpec {
        self.norm(self.k)
    }

    /// Norm parameters of the codomain `L^p_{k−1,δ}`.
    pub fn lowered(&self) -> NormSpec {
        self.norm(self.k - 1)
    }
}

/// Parameters of a single norm evaluation. Unlike [`WeightSpec`] this admits
/// `k = 0`, `δ = 0` and any `p ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub delta: f64,
    pub k: usize,
    pub p: f64,
}

impl NormSpec {
    pub fn new(delta: f64, k: usize, p: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() || !(p >= 1.0) || !p.is_finite() {
            return Err(SpliceError::InvalidParameter(format!(
                "norm needs finite delta >= 0 and p >= 1, got delta = {delta}, p = {p}"
            )));
        }
        Ok(Self { delta, k, p })
    }
}

impl From<WeightSpec> for NormSpec {
    fn from(w: WeightSpec) -> Self {
        w.full()
    }
}

/// `e^{δ|t|}`.
pub fn weight_eval(delta: f64, t: f64) -> f64 {
    (delta * t.abs()).exp()
}

/// Row profile `e^{δ|t_i|}` of a grid, rejecting weights beyond [`MAX_WEIGHT_EXPONENT`].
pub fn weight_profile(grid: &CylinderGrid, delta: f64) -> Result<Vec<f64>> {
    let exponent = delta * grid.t_min().abs().max(grid.t_max().abs());
    if exponent > MAX_WEIGHT_EXPONENT {
        return Err(SpliceError::Overflow { exponent });
    }
    Ok(grid.t_values().iter().map(|&t| weight_eval(delta, t)).collect())
}

/// `∫ |u|^p` with the trapezoid rule in t and the periodic Riemann sum in s;
/// `|u|` is the Euclidean norm over components.
pub fn lp_integral(u: &DiscreteMap, p: f64) -> f64 {
    let grid = u.grid();
    let n_t = grid.n_t();
    let n_comp = u.n_components();
    let cell = grid.h_t() * grid.h_s();
    let mut total = 0.0;
    for i in 0..n_t {
        let w = if i == 0 || i == n_t - 1 { 0.5 } else { 1.0 };
        let row: f64 = u
            .row(i)
            .chunks(n_comp)
            .map(|v| {
                let sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                if p == 2.0 {
                    sq
                } else {
                    sq.powf(0.5 * p)
                }
            })
            .sum();
        total += w * row;
    }
    total * cell
}

/// `D_s^i D_t^j v` for every `i + j ≤ k`.
fn mixed_derivatives(v: &DiscreteMap, k: usize) -> Vec<DiscreteMap> {
    let mut out = Vec::new();
    let mut dt_j = v.clone();
    for j in 0..=k {
        if j > 0 {
            dt_j = d_t(&dt_j);
        }
        let mut term = dt_j.clone();
        out.push(term.clone());
        for _ in 1..=(k - j) {
            term = d_s(&term);
            out.push(term.clone());
        }
    }
    out
}

/// `‖e^{δ|t|}·u‖_{k,p}`: the weight is applied first, then all mixed derivatives
/// `D_s^i D_t^j` with `i + j ≤ k` are taken of the product.
pub fn norm_weighted(u: &DiscreteMap, spec: &NormSpec) -> Result<f64> {
    if !u.is_finite() {
        return Err(SpliceError::NonFinite("norm_weighted"));
    }
    let weighted = u.mul_rows(&weight_profile(u.grid(), spec.delta)?)?;
    let sum: f64 = mixed_derivatives(&weighted, spec.k)
        .iter()
        .map(|d| lp_integral(d, spec.p))
        .sum();
    Ok(sum.powf(1.0 / spec.p))
}

/// The "weighted derivatives" convention `(Σ ‖e^{δ|t|}·D_s^i D_t^j u‖_p^p)^{1/p}`.
///
/// On a half-cylinder the two conventions agree up to a factor depending only on `k` and `δ`.
pub fn norm_weighted_derivatives(u: &DiscreteMap, spec: &NormSpec) -> Result<f64> {
    if !u.is_finite() {
        return Err(SpliceError::NonFinite("norm_weighted_derivatives"));
    }
    let profile = weight_profile(u.grid(), spec.delta)?;
    let mut sum = 0.0;
    for d in mixed_derivatives(u, spec.k) {
        sum += lp_integral(&d.mul_rows(&profile)?, spec.p);
    }
    Ok(sum.powf(1.0 / spec.p))
}

/// Both sides of `∫_Σ |∫₀¹ F dτ|^p ≤ ∫₀¹ ∫_Σ |F|^p`, where `slices[q]` samples
/// `F(·, τ_q)` at equally spaced `τ_q` covering `[0, 1]`.
pub fn jensen_gap(slices: &[DiscreteMap], p: f64) -> Result<(f64, f64)> {
    let n = slices.len();
    if n < 2 {
        return Err(SpliceError::InvalidParameter(
            "need at least two slices in the parameter direction".into(),
        ));
    }
    let weights: Vec<f64> = (0..n)
        .map(|q| if q == 0 || q == n - 1 { 0.5 } else { 1.0 } / (n - 1) as f64)
        .collect();
    let mut mean = slices[0].scaled(weights[0]);
    let mut rhs = weights[0] * lp_integral(&slices[0], p);
    for (slice, &w) in slices.iter().zip(&weights).skip(1) {
        mean = mean.lin_comb(1.0, slice, w)?;
        rhs += w * lp_integral(slice, p);
    }
    Ok((lp_integral(&mean, p), rhs))
}

/// A field on which weighted norms and linear combinations are defined.
pub trait WeightedField: Clone + Send + Sync {
    fn weighted_norm(&self, spec: &NormSpec) -> Result<f64>;
    fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self>;
}

impl WeightedField for DiscreteMap {
    fn weighted_norm(&self, spec: &NormSpec) -> Result<f64> {
        norm_weighted(self, spec)
    }

    fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.lin_comb(a, other, b)
    }
}

/// A finite family of test fields standing in for the unit ball of the domain.
#[derive(Debug, Clone)]
pub struct OperatorProbe<X> {
    pub fields: Vec<X>,
    pub seed: u64,
}

impl<X> OperatorProbe<X> {
    pub fn basis_size(&self) -> usize {
        self.fields.len()
    }
}

/// Shape of a probe family on one cylinder grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDesign {
    /// Envelope centers in t.
    pub centers: Vec<f64>,
    /// Envelope width (the envelope is `sech((t − c)/width)` in weighted form).
    pub width: f64,
    /// Fourier modes `m = 0, ±1, …, ±modes` are used.
    pub modes: usize,
    /// Additional seeded random superpositions.
    pub random: usize,
    pub seed: u64,
}

/// Probe fields on `grid`, built in weighted form and divided by `e^{δ|t|}`.
pub fn probe_fields(
    grid: &CylinderGrid,
    n_comp: usize,
    delta: f64,
    design: &ProbeDesign,
) -> Result<Vec<DiscreteMap>> {
    let inv_weight: Vec<f64> = weight_profile(grid, delta)?.iter().map(|w| 1.0 / w).collect();
    let envelope = |c: f64, t: f64| 1.0 / ((t - c) / design.width).cosh();
    let mut out = Vec::new();
    let modes: Vec<i64> = (-(design.modes as i64)..=design.modes as i64).collect();
    for &c in &design.centers {
        for &m in &modes {
            for comp in 0..n_comp {
                let w = DiscreteMap::from_fn(grid, n_comp, |t, s, v| {
                    v[comp] = Complex64::from_polar(envelope(c, t), m as f64 * s);
                });
                out.push(w.mul_rows(&inv_weight)?);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(design.seed);
    for _ in 0..design.random {
        let terms: Vec<(f64, i64, Vec<Complex64>)> = (0..3)
            .map(|_| {
                let c = if design.centers.is_empty() {
                    0.5 * (grid.t_min() + grid.t_max())
                } else {
                    design.centers[rng.gen_range(0..design.centers.len())]
                        + design.width * rng.gen_range(-1.0..1.0)
                };
                let m = modes[rng.gen_range(0..modes.len())];
                let coef = (0..n_comp)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                (c, m, coef)
            })
            .collect();
        let w = DiscreteMap::from_fn(grid, n_comp, |t, s, v| {
            for (c, m, coef) in &terms {
                let e = Complex64::from_polar(envelope(*c, t), *m as f64 * s);
                for (vi, ci) in v.iter_mut().zip(coef) {
                    *vi += ci * e;
                }
            }
        });
        out.push(w.mul_rows(&inv_weight)?);
    }
    Ok(out)
}

/// Relative defect above which an operator is declared non-linear.
const LINEARITY_TOL: f64 = 1e-9;

/// `max_ξ ‖op ξ‖_cod / ‖ξ‖_dom` over the probe family: a lower bound on `‖op‖_o`.
///
/// Linearity is verified first on seeded combinations of probe pairs.
pub fn op_norm_lower<X, Y, F>(op: F, dom: &NormSpec, cod: &NormSpec, probes: &OperatorProbe<X>) -> Result<f64>
where
    X: WeightedField,
    Y: WeightedField,
    F: Fn(&X) -> Result<Y> + Sync,
{
    let fields = &probes.fields;
    if fields.is_empty() {
        return Err(SpliceError::InvalidParameter("empty probe family".into()));
    }
    check_linearity(&op, cod, probes)?;
    let ratios = fields
        .par_iter()
        .map(|xi| {
            let denom = xi.weighted_norm(dom)?;
            if denom == 0.0 {
                return Ok(0.0);
            }
            Ok(op(xi)?.weighted_norm(cod)? / denom)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

fn check_linearity<X, Y, F>(op: &F, cod: &NormSpec, probes: &OperatorProbe<X>) -> Result<()>
where
    X: WeightedField,
    Y: WeightedField,
    F: Fn(&X) -> Result<Y> + Sync,
{
    let fields = &probes.fields;
    let mut rng = ChaCha8Rng::seed_from_u64(probes.seed ^ 0x5eed_11e4);
    for _ in 0..2 {
        let u = &fields[rng.gen_range(0..fields.len())];
        let v = &fields[rng.gen_range(0..fields.len())];
        let a: f64 = rng.gen_range(0.5..2.0);
        let b: f64 = -rng.gen_range(0.5..2.0);
        let (ou, ov) = (op(u)?, op(v)?);
        let combined = op(&u.combine(a, v, b)?)?;
        let expected = ou.combine(a, &ov, b)?;
        let scale = a.abs() * ou.weighted_norm(cod)? + b.abs() * ov.weighted_norm(cod)?;
        let diff = combined.combine(1.0, &expected, -1.0)?.weighted_norm(cod)?;
        let defect = if scale > 0.0 { diff / scale } else { diff };
        if !(defect <= LINEARITY_TOL) {
            return Err(SpliceError::NonLinear { defect });
        }
    }
    Ok(())
}
