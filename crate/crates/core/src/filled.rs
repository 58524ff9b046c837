//! The linearized section `Φ^a_L = ∂_t + ω`, its conjugate `Ψ^a_L = (T^a)^{−1}∘Φ^a_L∘T^a`
//! and the closed-form error term `E^R = Ψ^a_L − ∂_t` with its derivatives.
//!
//! With `g₁ = β_−β_+′/D`, `g₂ = β_−β_−′/D`, `g₃ = β_+β_+′/D`, `g₄ = β_+β_−′/D`:
//!
//! ```text
//! E_−(t) = g₃(t + R)·u_−(t) + g₄(t + R)·u_+(t + 2R, s + 2θ)
//! E_+(t) = g₁(t − R)·u_−(t − 2R, s − 2θ) + g₂(t − R)·u_+(t)
//! ```

use num_complex::Complex64;

use crate::cutoff::{profile_dr_dr, profile_r, GluingProfileParams, Side};
use crate::error::{Result, SpliceError};
use crate::grid::{d_s, d_t, translate, CylinderGrid, DiscreteMap};
use crate::splicing::{GluedPair, GluingParam, MapPair, SplicingFamily};
use crate::weighted::{norm_weighted, NormSpec, WeightSpec, WeightedField};

/// Input of the filled section: a pair, a gluing parameter and the weighted space.
#[derive(Debug, Clone)]
pub struct FilledSectionInput {
    pub pair: MapPair,
    pub a: GluingParam,
    pub spec: WeightSpec,
}

/// The four coupling coefficients of the error term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `β_−β_+′/D`
    G1,
    /// `β_−β_−′/D`
    G2,
    /// `β_+β_+′/D`
    G3,
    /// `β_+β_−′/D`
    G4,
}

impl Coupling {
    fn sides(self) -> (Side, Side) {
        match self {
            Coupling::G1 => (Side::Minus, Side::Plus),
            Coupling::G2 => (Side::Minus, Side::Minus),
            Coupling::G3 => (Side::Plus, Side::Plus),
            Coupling::G4 => (Side::Plus, Side::Minus),
        }
    }

    /// Side whose cutoff derivative sets the support.
    fn support_side(self) -> Side {
        self.sides().1
    }
}

/// `g(σ)` (`deriv = 0`) or `g′(σ)` (`deriv = 1`).
pub fn coupling(fam: &SplicingFamily, which: Coupling, sigma: f64, deriv: usize) -> f64 {
    let (a, b) = which.sides();
    let bm = fam.beta(Side::Minus, sigma, 0);
    let bp = fam.beta(Side::Plus, sigma, 0);
    let d = bm * bm + bp * bp;
    let (fa, fb1) = (fam.beta(a, sigma, 0), fam.beta(b, sigma, 1));
    match deriv {
        0 => fa * fb1 / d,
        1 => {
            let (fa1, fb2) = (fam.beta(a, sigma, 1), fam.beta(b, sigma, 2));
            let dd = 2.0 * (bm * fam.beta(Side::Minus, sigma, 1) + bp * fam.beta(Side::Plus, sigma, 1));
            (fa1 * fb1 + fa * fb2) / d - fa * fb1 * dd / (d * d)
        }
        _ => panic!("coupling derivatives beyond first order are not needed"),
    }
}

/// Open support interval of a coupling coefficient.
pub fn coupling_support(fam: &SplicingFamily, which: Coupling) -> (f64, f64) {
    let (l, d) = (fam.params.l, fam.params.d);
    match which.support_side() {
        Side::Plus => (-d - l, -d + l),
        Side::Minus => (d - l, d + l),
    }
}

/// `Φ^a_L`: plain `∂_t` on `η_+`, `∂_t η_− + e·η_− + f·η_+` on `η_−`.
pub fn phi_l(fam: &SplicingFamily, glued: &GluedPair, a: GluingParam) -> Result<GluedPair> {
    let plus = d_t(&glued.plus);
    let mut minus = d_t(&glued.minus);
    if !a.is_infinite() {
        let grid = glued.minus.grid().clone();
        let conn = fam.connection_field(&grid.t_values());
        glued.minus.window(&grid)?.accumulate_into(&conn.e, &mut minus)?;
        glued.plus.window(&grid)?.accumulate_into(&conn.f, &mut minus)?;
    }
    Ok(GluedPair { minus, plus })
}

/// `Ψ^a_L` by literal conjugation: unglue ∘ Φ ∘ glue.
pub fn psi_l_conjugated(fam: &SplicingFamily, pair: &MapPair, a: GluingParam) -> Result<MapPair> {
    let glued = fam.total_glue(pair, a)?;
    let phi = phi_l(fam, &glued, a)?;
    fam.total_unglue(&phi, a, pair)
}

/// `Ψ^a_L = ∂_t + E^R` from the closed formula.
pub fn psi_l_direct(fam: &SplicingFamily, pair: &MapPair, a: GluingParam) -> Result<MapPair> {
    let e = error_term(fam, pair, a)?;
    Ok(MapPair {
        minus: d_t(&pair.minus).add(&e.minus)?,
        plus: d_t(&pair.plus).add(&e.plus)?,
    })
}

/// Which member of the error-term family to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// `E^R`
    Value,
    /// `∂_R E^R` at fixed `(l, d)`
    DR,
    /// `∂_θ E^R`
    DTheta,
}

/// Source field of one term of the error family.
#[derive(Clone, Copy)]
enum Source {
    Raw,
    Dt,
    Ds,
}

struct Term {
    side: Side,
    source: Source,
    crossed: bool,
    coeff: Coupling,
    deriv: usize,
    factor: f64,
}

fn terms(kind: ErrorKind) -> Vec<Term> {
    let t = |side, source, crossed, coeff, deriv, factor| Term {
        side,
        source,
        crossed,
        coeff,
        deriv,
        factor,
    };
    use Coupling::*;
    use Side::*;
    use Source::*;
    match kind {
        ErrorKind::Value => vec![
            t(Minus, Raw, false, G3, 0, 1.0),
            t(Minus, Raw, true, G4, 0, 1.0),
            t(Plus, Raw, true, G1, 0, 1.0),
            t(Plus, Raw, false, G2, 0, 1.0),
        ],
        // ∂_R[g(t ± R)] = ±g′, ∂_R[u(t ± 2R)] = ±2·∂_t u
        ErrorKind::DR => vec![
            t(Minus, Raw, false, G3, 1, 1.0),
            t(Minus, Raw, true, G4, 1, 1.0),
            t(Minus, Dt, true, G4, 0, 2.0),
            t(Plus, Raw, true, G1, 1, -1.0),
            t(Plus, Dt, true, G1, 0, -2.0),
            t(Plus, Raw, false, G2, 1, -1.0),
        ],
        ErrorKind::DTheta => vec![
            t(Minus, Ds, true, G4, 0, 2.0),
            t(Plus, Ds, true, G1, 0, -2.0),
        ],
    }
}

/// `E^R`, `∂_R E^R` or `∂_θ E^R` on the grids of `pair`; identically zero at `R = ∞`.
pub fn error_family(fam: &SplicingFamily, pair: &MapPair, a: GluingParam, kind: ErrorKind) -> Result<MapPair> {
    let mut out = pair.zeros_like();
    if a.is_infinite() {
        return Ok(out);
    }
    let (mut dt_cache, mut ds_cache) = (None, None);
    for term in terms(kind) {
        // The output component is `term.side`; a crossed term reads the other map.
        let (src, target, sigma_shift, shift) = match (term.side, term.crossed) {
            (Side::Minus, false) => (&pair.minus, &mut out.minus, a.r, (0.0, 0.0)),
            (Side::Minus, true) => (&pair.plus, &mut out.minus, a.r, (2.0 * a.r, 2.0 * a.theta)),
            (Side::Plus, true) => (&pair.minus, &mut out.plus, -a.r, (-2.0 * a.r, -2.0 * a.theta)),
            (Side::Plus, false) => (&pair.plus, &mut out.plus, -a.r, (0.0, 0.0)),
        };
        let from_minus = std::ptr::eq(src, &pair.minus);
        let field = match term.source {
            Source::Raw => src.clone(),
            Source::Dt => cached(&mut dt_cache, pair, from_minus, d_t),
            Source::Ds => cached(&mut ds_cache, pair, from_minus, d_s),
        };
        let shifted = if shift == (0.0, 0.0) {
            field
        } else {
            translate(&field, shift.0, shift.1)?
        };
        let grid = target.grid().clone();
        let profile: Vec<f64> = grid
            .t_values()
            .iter()
            .map(|&t| term.factor * coupling(fam, term.coeff, t + sigma_shift, term.deriv))
            .collect();
        shifted.window(&grid)?.accumulate_into(&profile, target)?;
    }
    Ok(out)
}

fn cached(
    cache: &mut Option<(DiscreteMap, DiscreteMap)>,
    pair: &MapPair,
    from_minus: bool,
    op: fn(&DiscreteMap) -> DiscreteMap,
) -> DiscreteMap {
    let (m, p) = cache.get_or_insert_with(|| (op(&pair.minus), op(&pair.plus)));
    if from_minus {
        m.clone()
    } else {
        p.clone()
    }
}

pub fn error_term(fam: &SplicingFamily, pair: &MapPair, a: GluingParam) -> Result<MapPair> {
    error_family(fam, pair, a, ErrorKind::Value)
}

/// `(D_W Ψ^R_L)_u(ξ) = ∂_t ξ + E^R(ξ)`, independent of `u`.
pub fn d_w_psi(fam: &SplicingFamily, input: &FilledSectionInput, xi: &MapPair) -> Result<MapPair> {
    input.spec.validate()?;
    psi_l_direct(fam, xi, input.a)
}

/// `∂_R Ψ^R_L = ∂_R E^R` with `(l, d)` held fixed.
pub fn d_r_psi(fam: &SplicingFamily, input: &FilledSectionInput) -> Result<MapPair> {
    error_family(fam, &input.pair, input.a, ErrorKind::DR)
}

pub fn d_theta_psi(fam: &SplicingFamily, input: &FilledSectionInput) -> Result<MapPair> {
    error_family(fam, &input.pair, input.a, ErrorKind::DTheta)
}

/// Cartesian partials `(∂_x Ψ_L, ∂_y Ψ_L)` in the gluing disc with polar coordinates
/// `(r, θ)` and `R = R(r)`; the gluing length is used as given (off-lattice values interpolate).
/// At `r = 0` both vanish, which is the continuous extension.
pub fn d_xy_psi(
    fam: &SplicingFamily,
    pair: &MapPair,
    profile: &GluingProfileParams,
    theta: f64,
) -> Result<(MapPair, MapPair)> {
    if profile.r == 0.0 {
        profile_r(profile)?;
        return Ok((pair.zeros_like(), pair.zeros_like()));
    }
    let a = GluingParam::new(profile_r(profile)?, theta);
    let dr = error_family(fam, pair, a, ErrorKind::DR)?;
    let dth = error_family(fam, pair, a, ErrorKind::DTheta)?;
    let scale_r = profile_dr_dr(profile)?;
    let inv_r = 1.0 / profile.r;
    let (c, s) = (theta.cos(), theta.sin());
    let dx = dr.combine(c * scale_r, &dth, -s * inv_r)?;
    let dy = dr.combine(s * scale_r, &dth, c * inv_r)?;
    Ok((dx, dy))
}

fn check_exponent(x: f64) -> f64 {
    // exp of very negative exponents underflows harmlessly; positive ones never occur on supports
    if x < -745.0 {
        0.0
    } else {
        x.exp()
    }
}

/// The error operator `ξ ↦ E^R(ξ)` conjugated by the weights and recentred on the neck.
///
/// With `W_± = e^{δ|t|}ξ_±`, `V_−(σ) = W_−(σ − R)` and `V_+(σ) = W_+(σ + R)`,
///
/// ```text
/// (e·E)_−(σ) = g₃·V_− + g₄e^{−2δσ}·V_+(·, s + 2θ)
/// (e·E)_+(σ) = g₁e^{2δσ}·V_−(·, s − 2θ) + g₂·V_+
/// ```
///
/// and `‖ξ‖_{k,p,δ} = ‖V‖_{k,p}`, so `‖E^R‖_o` is computed without any weight at all and
/// depends on `R` only through `(l, d)` once `d + l < R`.
#[derive(Debug, Clone)]
pub struct ErrorFrame {
    grid: CylinderGrid,
    g1: Vec<f64>,
    g2: Vec<f64>,
    g3: Vec<f64>,
    g4: Vec<f64>,
    theta: f64,
}

impl ErrorFrame {
    /// Frame on the lattice `h·ℤ` covering `|σ| ≤ d + l + margin`.
    pub fn new(fam: &SplicingFamily, delta: f64, theta: f64, h: f64, n_s: usize, margin: f64) -> Result<Self> {
        let half = fam.half_length() + margin;
        let n = (half / h).ceil() as i64;
        let grid = CylinderGrid::on_lattice(h, -n, n, n_s)?;
        let sigma = grid.t_values();
        let weighted = |which, rate: f64| -> Vec<f64> {
            sigma
                .iter()
                .map(|&x| {
                    let g = coupling(fam, which, x, 0);
                    if g == 0.0 {
                        0.0
                    } else {
                        g * check_exponent(rate * x)
                    }
                })
                .collect()
        };
        Ok(Self {
            g1: weighted(Coupling::G1, 2.0 * delta),
            g2: weighted(Coupling::G2, 0.0),
            g3: weighted(Coupling::G3, 0.0),
            g4: weighted(Coupling::G4, -2.0 * delta),
            grid,
            theta,
        })
    }

    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    /// Apply the recentred weighted error operator to a frame pair on [`Self::grid`].
    pub fn apply(&self, v: &MapPair) -> Result<MapPair> {
        for m in [&v.minus, &v.plus] {
            if m.grid().lattice_offset(&self.grid) != Some(0) || m.grid().n_t() != self.grid.n_t() {
                return Err(SpliceError::ShapeMismatch("frame pair must live on the frame grid".into()));
            }
        }
        let n_comp = v.minus.n_components();
        let plus_rot = translate(&v.plus, 0.0, 2.0 * self.theta)?;
        let minus_rot = translate(&v.minus, 0.0, -2.0 * self.theta)?;
        let mut minus = DiscreteMap::zeros(&self.grid, n_comp);
        let mut plus = DiscreteMap::zeros(&self.grid, n_comp);
        v.minus.window(&self.grid)?.accumulate_into(&self.g3, &mut minus)?;
        plus_rot.window(&self.grid)?.accumulate_into(&self.g4, &mut minus)?;
        minus_rot.window(&self.grid)?.accumulate_into(&self.g1, &mut plus)?;
        v.plus.window(&self.grid)?.accumulate_into(&self.g2, &mut plus)?;
        Ok(MapPair { minus, plus })
    }

    /// Map a natural-coordinate pair at gluing length `r` into the frame.
    pub fn to_frame(&self, xi: &MapPair, r: f64, delta: f64) -> Result<MapPair> {
        let weigh = |m: &DiscreteMap, shift: f64| -> Result<DiscreteMap> {
            let w: Vec<f64> = m.grid().t_values().iter().map(|t| (delta * t.abs()).exp()).collect();
            translate(&m.mul_rows(&w)?, shift, 0.0)?.restrict(&self.grid)
        };
        Ok(MapPair {
            minus: weigh(&xi.minus, -r)?,
            plus: weigh(&xi.plus, r)?,
        })
    }
}

/// The explicit pair `u_−(t, s) = e^{γt}e^{is}`, `u_+(t, s) = e^{−γt}e^{is}` with `γ > δ`,
/// whose error terms are evaluated in log-domain so that any `R` is admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferencePair {
    pub gamma: f64,
}

struct RefTerm {
    coeff: Coupling,
    /// `(c₀, c₁)`: the coefficient is `c₀·g + c₁·g′`.
    mix: (f64, f64),
    /// Exponential rate in σ.
    rate: f64,
    phase: Complex64,
}

impl ReferencePair {
    /// `ln ‖u_±‖_{k,p,δ}` for either half (both are equal).
    pub fn log_norm_half(&self, delta: f64, k: usize, p: f64) -> f64 {
        let kappa = self.gamma - delta;
        let mut sum = 0.0;
        for j in 0..=k {
            // ∂_t contributes κ per order, ∂_s a unit factor
            sum += (k - j + 1) as f64 * kappa.powf(j as f64 * p);
        }
        (sum * 2.0 * std::f64::consts::PI / (p * kappa)).ln() / p
    }

    /// `ln ‖(u_−, u_+)‖_{k,p,δ}`.
    pub fn log_norm_pair(&self, delta: f64, k: usize, p: f64) -> f64 {
        self.log_norm_half(delta, k, p) + 2f64.ln() / p
    }

    /// Natural-coordinate samples of the pair on the given grids (first component only).
    pub fn sample(&self, minus: &CylinderGrid, plus: &CylinderGrid, n_comp: usize) -> MapPair {
        let g = self.gamma;
        MapPair {
            minus: DiscreteMap::from_fn(minus, n_comp, |t, s, v| v[0] = Complex64::from_polar((g * t).exp(), s)),
            plus: DiscreteMap::from_fn(plus, n_comp, |t, s, v| v[0] = Complex64::from_polar((-g * t).exp(), s)),
        }
    }

    fn terms(&self, delta: f64, theta: f64, kind: ErrorKind) -> (Vec<RefTerm>, Vec<RefTerm>) {
        let kappa = self.gamma - delta;
        let g = self.gamma;
        let one = Complex64::new(1.0, 0.0);
        let rot_p = Complex64::from_polar(1.0, 2.0 * theta);
        let rot_m = Complex64::from_polar(1.0, -2.0 * theta);
        let i = Complex64::new(0.0, 1.0);
        let t = |coeff, mix, rate, phase| RefTerm { coeff, mix, rate, phase };
        use Coupling::*;
        match kind {
            ErrorKind::Value => (
                vec![t(G3, (1.0, 0.0), kappa, one), t(G4, (1.0, 0.0), -2.0 * delta - kappa, rot_p)],
                vec![t(G1, (1.0, 0.0), 2.0 * delta + kappa, rot_m), t(G2, (1.0, 0.0), -kappa, one)],
            ),
            ErrorKind::DR => (
                vec![t(G3, (0.0, 1.0), kappa, one), t(G4, (-2.0 * g, 1.0), -2.0 * delta - kappa, rot_p)],
                vec![t(G1, (-2.0 * g, -1.0), 2.0 * delta + kappa, rot_m), t(G2, (0.0, -1.0), -kappa, one)],
            ),
            ErrorKind::DTheta => (
                vec![t(G4, (2.0, 0.0), -2.0 * delta - kappa, i * rot_p)],
                vec![t(G1, (-2.0, 0.0), 2.0 * delta + kappa, i * rot_m)],
            ),
        }
    }

    /// `ln ‖F‖_{k,p,δ}` for `F ∈ {E^R, ∂_R E^R, ∂_θ E^R}` of the reference pair.
    ///
    /// Every term is `e^{−κR}·c(σ)·e^{ρσ}` on the support of its coupling, so each one is
    /// normalized by its own peak and only the window within `e^{−80}` of that peak is sampled.
    pub fn log_norm_error(
        &self,
        fam: &SplicingFamily,
        delta: f64,
        r: f64,
        theta: f64,
        k: usize,
        p: f64,
        kind: ErrorKind,
    ) -> Result<f64> {
        if !(self.gamma > delta) {
            return Err(SpliceError::InvalidParameter(format!(
                "reference decay {} must exceed delta {delta}",
                self.gamma
            )));
        }
        if !(fam.half_length() < r) {
            return Err(SpliceError::Infeasible(format!(
                "splicing supports reach {} beyond R = {r}",
                fam.half_length()
            )));
        }
        let kappa = self.gamma - delta;
        let spec = NormSpec::new(0.0, k, p)?;
        let (minus, plus) = self.terms(delta, theta, kind);
        let mut log_terms = Vec::new();
        for term in minus.iter().chain(&plus) {
            if let Some(v) = self.log_norm_term(fam, term, &spec)? {
                log_terms.push(v);
            }
        }
        if log_terms.is_empty() {
            return Ok(f64::NEG_INFINITY);
        }
        // terms have disjoint supports within each component: p-th powers add
        let m = log_terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = log_terms.iter().map(|&x| (p * (x - m)).exp()).sum();
        Ok(m + sum.ln() / p - kappa * r)
    }

    fn log_norm_term(&self, fam: &SplicingFamily, term: &RefTerm, spec: &NormSpec) -> Result<Option<f64>> {
        let (lo, hi) = coupling_support(fam, term.coeff);
        let coeff = |x: f64| {
            let (c0, c1) = term.mix;
            let mut v = 0.0;
            if c0 != 0.0 {
                v += c0 * coupling(fam, term.coeff, x, 0);
            }
            if c1 != 0.0 {
                v += c1 * coupling(fam, term.coeff, x, 1);
            }
            v
        };
        const COARSE: usize = 20_000;
        let step = (hi - lo) / COARSE as f64;
        let log_mag: Vec<(f64, f64)> = (1..COARSE)
            .map(|i| {
                let x = lo + i as f64 * step;
                let c = coeff(x).abs();
                (x, if c > 0.0 { c.ln() + term.rate * x } else { f64::NEG_INFINITY })
            })
            .collect();
        let peak = log_mag.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
        if peak == f64::NEG_INFINITY {
            return Ok(None);
        }
        let keep: Vec<f64> = log_mag.iter().filter(|&&(_, v)| v > peak - 80.0).map(|&(x, _)| x).collect();
        let w_lo = (keep[0] - step).max(lo);
        let w_hi = (keep[keep.len() - 1] + step).min(hi);
        let h = (fam.params.l / 40.0).min(0.25 / (term.rate.abs() + 1.0));
        let pad = 4.0 * h;
        let grid = CylinderGrid::with_spacing(w_lo - pad, w_hi + pad, h, 4)?;
        let phase = term.phase;
        let field = DiscreteMap::from_fn(&grid, 1, |x, s, v| {
            if x > lo && x < hi {
                let c = coeff(x);
                if c != 0.0 {
                    let mag = c.abs().ln() + term.rate * x - peak;
                    v[0] = phase * Complex64::from_polar(c.signum() * check_exponent(mag), s);
                }
            }
        });
        let n = norm_weighted(&field, spec)?;
        Ok((n > 0.0).then(|| peak + n.ln()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::{BaseCutoff, CutoffParams};
    use crate::weighted::{norm_weighted, NormSpec};

    fn family() -> SplicingFamily {
        SplicingFamily::new(BaseCutoff::default(), CutoffParams::new(4.0, 12.0, 1.5, 1.5).unwrap()).unwrap()
    }

    fn pair(h: f64, theta_modes: bool) -> MapPair {
        let gm = CylinderGrid::with_spacing(-60.0, 0.0, h, 8).unwrap();
        let gp = CylinderGrid::with_spacing(0.0, 60.0, h, 8).unwrap();
        let minus = DiscreteMap::from_fn(&gm, 2, |t, s, v| {
            let m = if theta_modes { s } else { 0.0 };
            v[0] = Complex64::from_polar((0.9 * t).exp() * (1.0 + 0.2 * (0.7 * t).sin()), m);
            v[1] = Complex64::new((0.8 * t).exp() * (2.0 * m).cos(), 0.1);
        });
        let plus = DiscreteMap::from_fn(&gp, 2, |t, s, v| {
            let m = if theta_modes { s } else { 0.0 };
            v[0] = Complex64::new((-0.85 * t).exp() * (1.0 + 0.3 * m.sin()), 0.0);
            v[1] = Complex64::from_polar((-t).exp(), -m);
        });
        MapPair::new(minus, plus).unwrap()
    }

    #[test]
    fn coupling_derivative_matches_finite_difference() {
        let fam = family();
        let h = 1e-5;
        for which in [Coupling::G1, Coupling::G2, Coupling::G3, Coupling::G4] {
            for &x in &[-13.1, -10.5, 9.7, 12.0, 14.9] {
                let fd = (coupling(&fam, which, x + h, 0) - coupling(&fam, which, x - h, 0)) / (2.0 * h);
                assert!((fd - coupling(&fam, which, x, 1)).abs() < 1e-8, "{which:?} at {x}");
            }
        }
    }

    #[test]
    fn pipelines_agree() {
        let fam = family();
        let u = pair(0.05, true);
        let a = GluingParam::new(20.0, 0.3);
        let conj = psi_l_conjugated(&fam, &u, a).unwrap();
        let direct = psi_l_direct(&fam, &u, a).unwrap();
        let diff = conj.sub(&direct).unwrap().max_abs();
        assert!(diff < 1e-5, "{diff}");
    }

    #[test]
    fn infinite_gluing_is_plain_derivative() {
        let fam = family();
        let u = pair(0.1, true);
        let a = GluingParam::infinite(0.4);
        let expect = MapPair {
            minus: d_t(&u.minus),
            plus: d_t(&u.plus),
        };
        assert_eq!(psi_l_direct(&fam, &u, a).unwrap(), expect);
        assert_eq!(psi_l_conjugated(&fam, &u, a).unwrap(), expect);
        assert_eq!(error_term(&fam, &u, a).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn phi_plus_component_is_plain_derivative() {
        let fam = family();
        let u = pair(0.1, true);
        let a = GluingParam::new(20.0, 0.0);
        let glued = fam.total_glue(&u, a).unwrap();
        let phi = phi_l(&fam, &glued, a).unwrap();
        assert_eq!(phi.plus, d_t(&glued.plus));
    }

    #[test]
    fn phi_on_constants() {
        let fam = family();
        let a = GluingParam::new(20.0, 0.0);
        let gm = CylinderGrid::with_spacing(-40.0, 20.0, 0.1, 4).unwrap();
        let gp = CylinderGrid::with_spacing(-20.0, 20.0, 0.1, 4).unwrap();
        let (cm, cp) = (Complex64::new(1.5, 0.0), Complex64::new(-0.5, 2.0));
        let glued = GluedPair {
            minus: DiscreteMap::from_fn(&gm, 1, |_, _, v| v[0] = cm),
            plus: DiscreteMap::from_fn(&gp, 1, |_, _, v| v[0] = cp),
        };
        let phi = phi_l(&fam, &glued, a).unwrap();
        for i in (0..gm.n_t()).step_by(13) {
            let t = gm.t(i);
            if t.abs() < 20.0 {
                let om = fam.connection_omega(t);
                let expect = cm * om[0][0] + cp * om[0][1];
                assert!((phi.minus.at(i, 1)[0] - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn support_away_from_splicing_gives_plain_derivative() {
        let fam = family();
        let gm = CylinderGrid::with_spacing(-80.0, 0.0, 0.1, 4).unwrap();
        let gp = CylinderGrid::with_spacing(0.0, 80.0, 0.1, 4).unwrap();
        let bump = |c: f64| move |t: f64, _: f64, v: &mut [Complex64]| {
            let x = (t - c) / 3.0;
            v[0] = Complex64::new(if x.abs() < 1.0 { (1.0 - x * x).powi(6) } else { 0.0 }, 0.0);
        };
        let u = MapPair {
            minus: DiscreteMap::from_fn(&gm, 1, bump(-60.0)),
            plus: DiscreteMap::from_fn(&gp, 1, bump(60.0)),
        };
        let e = error_term(&fam, &u, GluingParam::new(20.0, 0.0)).unwrap();
        assert_eq!(e.max_abs(), 0.0);
    }

    #[test]
    fn error_with_zero_plus_component() {
        let fam = family();
        let mut u = pair(0.1, true);
        u.plus = DiscreteMap::zeros(u.plus.grid(), 2);
        let a = GluingParam::new(20.0, 0.3);
        let e = error_term(&fam, &u, a).unwrap();
        let shifted = translate(&u.minus, -40.0, -0.6).unwrap();
        let g = u.plus.grid();
        let prof: Vec<f64> = g.t_values().iter().map(|&t| coupling(&fam, Coupling::G1, t - 20.0, 0)).collect();
        let mut oracle = DiscreteMap::zeros(g, 2);
        shifted.window(g).unwrap().accumulate_into(&prof, &mut oracle).unwrap();
        assert!(e.plus.sub(&oracle).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn d_w_is_linear_and_u_independent() {
        let fam = family();
        let u = pair(0.1, true);
        let a = GluingParam::new(20.0, 0.3);
        let spec = WeightSpec::new(0.5, 1, 3.0).unwrap();
        let xi = u.combine(0.3, &u, 0.0).unwrap();
        let input = FilledSectionInput { pair: u.clone(), a, spec };
        let other = FilledSectionInput { pair: u.combine(-2.0, &u, 0.0).unwrap(), a, spec };
        let d1 = d_w_psi(&fam, &input, &xi).unwrap();
        assert_eq!(d1, d_w_psi(&fam, &other, &xi).unwrap());
        let h = 1e-3;
        let shifted = psi_l_direct(&fam, &u.combine(1.0, &xi, h).unwrap(), a).unwrap();
        let base = psi_l_direct(&fam, &u, a).unwrap();
        let fd = shifted.combine(1.0 / h, &base, -1.0 / h).unwrap();
        assert!(fd.sub(&d1).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn d_theta_vanishes_on_s_independent_input() {
        let fam = family();
        let u = pair(0.1, false);
        let input = FilledSectionInput {
            pair: u,
            a: GluingParam::new(20.0, 0.3),
            spec: WeightSpec::new(0.5, 1, 3.0).unwrap(),
        };
        assert_eq!(d_theta_psi(&fam, &input).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn d_r_matches_centered_difference() {
        let fam = family();
        let u = pair(0.025, true);
        let spec = WeightSpec::new(0.5, 1, 3.0).unwrap();
        let exact = d_r_psi(&fam, &FilledSectionInput { pair: u.clone(), a: GluingParam::new(20.0, 0.3), spec }).unwrap();
        let err = |h: f64| {
            let up = psi_l_direct(&fam, &u, GluingParam::new(20.0 + h, 0.3)).unwrap();
            let dn = psi_l_direct(&fam, &u, GluingParam::new(20.0 - h, 0.3)).unwrap();
            up.combine(0.5 / h, &dn, -0.5 / h).unwrap().sub(&exact).unwrap().max_abs()
        };
        let slope = (err(0.4) / err(0.2)).log2();
        assert!((slope - 2.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn polar_assembly_at_special_angles() {
        let fam = family();
        let u = pair(0.1, true);
        let prof = GluingProfileParams { r0: 1.0, r: 1.0 / 3.2 };
        let a = GluingParam::new(profile_r(&prof).unwrap(), 0.0);
        let (dx, dy) = d_xy_psi(&fam, &u, &prof, 0.0).unwrap();
        let dr = error_family(&fam, &u, a, ErrorKind::DR).unwrap();
        let dth = error_family(&fam, &u, a, ErrorKind::DTheta).unwrap();
        let scale = profile_dr_dr(&prof).unwrap();
        assert!(dx.sub(&dr.combine(scale, &dr, 0.0).unwrap()).unwrap().max_abs() < 1e-12);
        assert!(dy.sub(&dth.combine(1.0 / prof.r, &dth, 0.0).unwrap()).unwrap().max_abs() < 1e-12);
        let zero = d_xy_psi(&fam, &u, &GluingProfileParams { r0: 1.0, r: 0.0 }, 0.7).unwrap();
        assert_eq!(zero.0.max_abs() + zero.1.max_abs(), 0.0);
    }

    #[test]
    fn frame_matches_natural_coordinates() {
        let fam = family();
        let delta = 0.5;
        let u = pair(0.05, true);
        let a = GluingParam::new(20.0, 0.3);
        let frame = ErrorFrame::new(&fam, delta, a.theta, 0.05, 8, 2.0).unwrap();
        let v = frame.to_frame(&u, a.r, delta).unwrap();
        let framed = frame.apply(&v).unwrap();
        let natural = error_term(&fam, &u, a).unwrap();
        let spec = NormSpec::new(delta, 0, 3.0).unwrap();
        let flat = NormSpec::new(0.0, 0, 3.0).unwrap();
        let n_nat = natural.weighted_norm(&spec).unwrap();
        let n_frame = framed.weighted_norm(&flat).unwrap();
        assert!((n_nat - n_frame).abs() / n_nat < 1e-10, "{n_nat} vs {n_frame}");
    }

    #[test]
    fn reference_pair_matches_grid() {
        let fam = family();
        let delta = 0.5;
        let reference = ReferencePair { gamma: 0.9 };
        let gm = CylinderGrid::with_spacing(-80.0, 0.0, 0.02, 8).unwrap();
        let gp = CylinderGrid::with_spacing(0.0, 80.0, 0.02, 8).unwrap();
        let u = reference.sample(&gm, &gp, 1);
        let spec = NormSpec::new(delta, 1, 3.0).unwrap();
        let log_u = u.minus.weighted_norm(&spec).unwrap().ln();
        assert!((log_u - reference.log_norm_half(delta, 1, 3.0)).abs() < 1e-4);
        let a = GluingParam::new(20.0, 0.3);
        for kind in [ErrorKind::Value, ErrorKind::DR, ErrorKind::DTheta] {
            let grid = error_family(&fam, &u, a, kind).unwrap();
            let on_grid = grid.weighted_norm(&spec).unwrap().ln();
            let analytic = reference.log_norm_error(&fam, delta, 20.0, 0.3, 1, 3.0, kind).unwrap();
            assert!((on_grid - analytic).abs() < 1e-3, "{kind:?}: {on_grid} vs {analytic}");
        }
        // norms of single maps ignore the pair combination
        let _ = norm_weighted(&u.minus, &spec).unwrap();
    }
}
