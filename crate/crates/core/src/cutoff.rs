//! Base cutoff α, the shifted and scaled family β_±, the length function and
//! the gluing profile `r ↦ R`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpliceError};

/// Which half-cylinder (or which cutoff) an object belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Minus,
    Plus,
}

/// Polynomial smoothstep cutoff: `α(t) = 1 − S((t + 1)/2)` on `[−1, 1]`,
/// exactly 1 to the left and 0 to the right, with `α(t) + α(−t) = 1`.
///
/// `S` is the generalized smoothstep of degree `2m − 1` whose first `m − 1`
/// derivatives vanish at both ends, so α is `C^{m−1}` and its m-th derivative
/// is bounded.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseCutoff {
    order: usize,
    /// `derivs[j]` holds the monomial coefficients (in x) of `S^{(j)}`.
    derivs: Vec<Vec<f64>>,
}

impl Default for BaseCutoff {
    fn default() -> Self {
        Self::new(7).expect("order 7 is valid")
    }
}

impl BaseCutoff {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(SpliceError::InvalidParameter(format!(
                "cutoff order must be at least 2, got {order}"
            )));
        }
        let n = order - 1;
        let mut s = vec![0.0; 2 * n + 2];
        for k in 0..=n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s[n + 1 + k] = sign * binomial(n + k, k) * binomial(2 * n + 1, n - k);
        }
        let mut derivs = vec![s];
        for _ in 0..order {
            let prev = derivs.last().expect("non-empty");
            let next: Vec<f64> = prev
                .iter()
                .enumerate()
                .skip(1)
                .map(|(p, &c)| c * p as f64)
                .collect();
            derivs.push(next);
        }
        Ok(Self { order, derivs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `α^{(deriv)}(t)`.
    pub fn eval(&self, t: f64, deriv: usize) -> Result<f64> {
        if deriv > self.order {
            return Err(SpliceError::DerivativeOrder {
                requested: deriv,
                max: self.order,
            });
        }
        if t <= -1.0 || t >= 1.0 {
            let outside = if t <= -1.0 { 1.0 } else { 0.0 };
            return Ok(if deriv == 0 { outside } else { 0.0 });
        }
        // Horner loses accuracy near x = 1; reflect through α(t) = 1 − α(−t).
        if t > 0.0 {
            let reflected = self.eval(-t, deriv)?;
            return Ok(match deriv {
                0 => 1.0 - reflected,
                j if j % 2 == 1 => reflected,
                _ => -reflected,
            });
        }
        let x = 0.5 * (t + 1.0);
        let s = horner(&self.derivs[deriv], x) / 2f64.powi(deriv as i32);
        Ok(if deriv == 0 { 1.0 - s } else { -s })
    }

    /// `sup |α^{(deriv)}|`, sampled on a fine grid of `[−1, 1]`.
    pub fn sup_norm(&self, deriv: usize) -> Result<f64> {
        const SAMPLES: usize = 20_000;
        let mut sup: f64 = 0.0;
        for i in 0..=SAMPLES {
            let t = -1.0 + 2.0 * i as f64 / SAMPLES as f64;
            sup = sup.max(self.eval(t, deriv)?.abs());
        }
        Ok(sup)
    }

    /// `‖α‖_{C^k} = max_{j ≤ k} sup |α^{(j)}|`.
    pub fn c_norm(&self, k: usize) -> Result<f64> {
        (0..=k).try_fold(0.0_f64, |acc, j| Ok(acc.max(self.sup_norm(j)?)))
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Width `l` and offset `d` of the splicing cutoffs with their lower limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub l: f64,
    pub d: f64,
    pub l0: f64,
    pub d0: f64,
}

impl CutoffParams {
    pub fn new(l: f64, d: f64, l0: f64, d0: f64) -> Result<Self> {
        let p = Self { l, d, l0, d0 };
        p.validate()?;
        Ok(p)
    }

    /// The default binding `d = 3l`.
    pub fn with_default_offset(l: f64, l0: f64, d0: f64) -> Result<Self> {
        Self::new(l, 3.0 * l, l0, d0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.l, self.d, self.l0, self.d0].iter().all(|v| v.is_finite());
        if !finite || self.l0 <= 1.0 || self.d0 <= 1.0 {
            return Err(SpliceError::InvalidParameter(format!(
                "need finite l0 > 1 and d0 > 1, got l0 = {}, d0 = {}",
                self.l0, self.d0
            )));
        }
        if self.l < self.l0 || self.d < self.d0 {
            return Err(SpliceError::InvalidParameter(format!(
                "need l >= l0 and d >= d0, got l = {}, d = {}",
                self.l, self.d
            )));
        }
        if self.d < 3.0 * self.l * (1.0 - 1e-12) {
            return Err(SpliceError::InvalidParameter(format!(
                "need d >= 3l, got l = {}, d = {}",
                self.l, self.d
            )));
        }
        Ok(())
    }
}

/// `β_−(t) = α((t − d)/l)`, `β_+(t) = 1 − α((t + d)/l)`, and their derivatives.
pub fn beta_eval(
    cutoff: &BaseCutoff,
    params: &CutoffParams,
    side: Side,
    t: f64,
    deriv: usize,
) -> Result<f64> {
    let scale = params.l.powi(deriv as i32);
    match side {
        Side::Minus => Ok(cutoff.eval((t - params.d) / params.l, deriv)? / scale),
        Side::Plus => {
            let a = cutoff.eval((t + params.d) / params.l, deriv)?;
            Ok(if deriv == 0 { 1.0 - a } else { -a / scale })
        }
    }
}

/// `L_k(R) = R^{k/(k+1)}·(ln R)²`.
pub fn length_function(r: f64, order: u32) -> Result<f64> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(SpliceError::InvalidParameter(format!(
            "length function needs finite R > 1, got {r}"
        )));
    }
    let ln = r.ln();
    Ok(r.powf(order as f64 / (order as f64 + 1.0)) * ln * ln)
}

/// Gluing profile `R(r) = e^{1/r} − e^{1/r0}` with `R(0) = ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GluingProfileParams {
    pub r0: f64,
    pub r: f64,
}

impl GluingProfileParams {
    fn check(&self, allow_zero: bool) -> Result<()> {
        let lower_ok = if allow_zero { self.r >= 0.0 } else { self.r > 0.0 };
        if !(self.r0 > 0.0) || !lower_ok || self.r >= self.r0 || !self.r.is_finite() {
            return Err(SpliceError::InvalidParameter(format!(
                "gluing radius r = {} outside (0, r0 = {})",
                self.r, self.r0
            )));
        }
        Ok(())
    }
}

pub fn profile_r(g: &GluingProfileParams) -> Result<f64> {
    g.check(true)?;
    if g.r == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 / g.r).exp() - (1.0 / g.r0).exp())
}

/// `dR/dr = −e^{1/r}/r²`.
pub fn profile_dr_dr(g: &GluingProfileParams) -> Result<f64> {
    g.check(false)?;
    Ok(-(1.0 / g.r).exp() / (g.r * g.r))
}

/// Asymptotic form `|dR/dr| ≈ R·(ln R)²`, valid when `R ≈ e^{1/r}`.
pub fn profile_dr_dr_asymptotic(r_big: f64) -> f64 {
    let ln = r_big.ln();
    r_big * ln * ln
}

/// Splicing supports `(±d − l, ±d + l)` lie inside `(−R, R)` and the parameters are admissible.
pub fn feasibility_check(p: &CutoffParams, r: f64) -> bool {
    p.validate().is_ok() && p.d + p.l < r
}

/// How the cutoff parameters follow the gluing length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `(l, d, R)` chosen independently, subject to [`feasibility_check`].
    #[default]
    Free,
    /// `l = L₁(R)` and `d = 3l`.
    Asymptotic,
}

/// Cutoff parameters of the asymptotic binding `l = L₁(R)`, `d = 3l` at gluing length `r`.
pub fn asymptotic_params(r: f64, l0: f64, d0: f64) -> Result<CutoffParams> {
    let l = length_function(r, 1)?;
    CutoffParams::with_default_offset(l, l0, d0)
}

/// Smallest `R` from which the binding `l = L₁(R)`, `d = 3l` satisfies `d + l < R`.
///
/// `R − 4√R·ln²R` has a single sign change on `[e⁸, e³⁰]`, and the constraint
/// `l ≥ l0 > 1` excludes the spurious small-R branch.
pub fn asymptotic_threshold() -> f64 {
    let g = |x: f64| (0.5 * x).exp() - 4.0 * x * x;
    let (mut lo, mut hi) = (8.0_f64, 30.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.exp()
}
