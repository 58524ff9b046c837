//! Seeded test fields with the exponential decay the weighted spaces require.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpliceError};
use crate::grid::{CylinderGrid, DiscreteMap};
use crate::splicing::MapPair;

/// Shape of the seeded pairs: `u_±(t, s) = e^{∓γt}(1 + a·sin(ωt + φ))·Σ_m c_m e^{ims}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// Decay rate `γ`; must exceed the weight `δ` for the pair to lie in the weighted space.
    pub decay: f64,
    /// Highest Fourier mode `|m|` present.
    pub modes: usize,
    /// Amplitude `a < 1` of the radial modulation.
    pub modulation: f64,
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self {
            decay: 0.9,
            modes: 3,
            modulation: 0.2,
        }
    }
}

impl FieldSpec {
    pub fn validate(&self, delta: f64) -> Result<()> {
        if !(self.decay > delta) || !self.decay.is_finite() {
            return Err(SpliceError::InvalidParameter(format!(
                "field decay {} must exceed delta {delta}",
                self.decay
            )));
        }
        if !(0.0..1.0).contains(&self.modulation) {
            return Err(SpliceError::InvalidParameter(format!(
                "field modulation {} must lie in [0, 1)",
                self.modulation
            )));
        }
        Ok(())
    }
}

struct HalfField {
    omega: f64,
    phase: f64,
    coeffs: Vec<(i64, Vec<Complex64>)>,
}

impl HalfField {
    fn draw(rng: &mut ChaCha8Rng, spec: &FieldSpec, n_comp: usize, s_independent: bool) -> Self {
        let omega = rng.gen_range(0.5..1.5);
        let phase = rng.gen_range(0.0..TAU);
        let top = if s_independent { 0 } else { spec.modes as i64 };
        let coeffs = (-top..=top)
            .map(|m| {
                let c = (0..n_comp)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                (m, c)
            })
            .collect();
        Self { omega, phase, coeffs }
    }

    fn sample(&self, grid: &CylinderGrid, n_comp: usize, rate: f64, modulation: f64) -> DiscreteMap {
        DiscreteMap::from_fn(grid, n_comp, |t, s, v| {
            let radial = (rate * t).exp() * (1.0 + modulation * (self.omega * t + self.phase).sin());
            for (m, c) in &self.coeffs {
                let e = Complex64::from_polar(radial, *m as f64 * s);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi += ci * e;
                }
            }
        })
    }
}

/// Seeded pair on the given half-cylinder grids.
pub fn seeded_pair(
    minus: &CylinderGrid,
    plus: &CylinderGrid,
    n_comp: usize,
    spec: &FieldSpec,
    seed: u64,
) -> Result<MapPair> {
    pair_impl(minus, plus, n_comp, spec, seed, false)
}

/// Seeded pair whose samples do not depend on `s`.
pub fn s_independent_pair(
    minus: &CylinderGrid,
    plus: &CylinderGrid,
    n_comp: usize,
    spec: &FieldSpec,
    seed: u64,
) -> Result<MapPair> {
    pair_impl(minus, plus, n_comp, spec, seed, true)
}

fn pair_impl(
    minus: &CylinderGrid,
    plus: &CylinderGrid,
    n_comp: usize,
    spec: &FieldSpec,
    seed: u64,
    s_independent: bool,
) -> Result<MapPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fm = HalfField::draw(&mut rng, spec, n_comp, s_independent);
    let fp = HalfField::draw(&mut rng, spec, n_comp, s_independent);
    MapPair::new(
        fm.sample(minus, n_comp, spec.decay, spec.modulation),
        fp.sample(plus, n_comp, -spec.decay, spec.modulation),
    )
}

/// Slices `F(·, τ_j)`, `τ_j = j/(n−1)`, of a seeded compactly concentrated family on `grid`;
/// with `constant` the family does not depend on `τ`.
pub fn jensen_family(grid: &CylinderGrid, n_comp: usize, n_slices: usize, seed: u64, constant: bool) -> Vec<DiscreteMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(i64, Vec<[Complex64; 3]>)> = (-2..=2)
        .map(|m| {
            let c = (0..n_comp)
                .map(|_| {
                    let mut z = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    [z(), z(), z()]
                })
                .collect();
            (m, c)
        })
        .collect();
    let center = rng.gen_range(-1.0..1.0);
    (0..n_slices)
        .map(|j| {
            let tau = if constant { 0.0 } else { j as f64 / (n_slices.max(2) - 1) as f64 };
            DiscreteMap::from_fn(grid, n_comp, |t, s, v| {
                let env = (-(t - center) * (t - center) / 2.0).exp();
                for (m, c) in &modes {
                    let e = Complex64::from_polar(env, *m as f64 * s);
                    for (vi, ci) in v.iter_mut().zip(c) {
                        *vi += e * (ci[0] + ci[1] * tau + ci[2] * (3.0 * tau).sin());
                    }
                }
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::d_s;

    #[test]
    fn seeded_pairs_are_reproducible_and_distinct() {
        let gm = CylinderGrid::with_spacing(-10.0, 0.0, 0.1, 8).unwrap();
        let gp = CylinderGrid::with_spacing(0.0, 10.0, 0.1, 8).unwrap();
        let spec = FieldSpec::default();
        let a = seeded_pair(&gm, &gp, 2, &spec, 3).unwrap();
        assert_eq!(a, seeded_pair(&gm, &gp, 2, &spec, 3).unwrap());
        assert_ne!(a, seeded_pair(&gm, &gp, 2, &spec, 4).unwrap());
        // decay towards both ends
        assert!(a.minus.row(0).iter().all(|z| z.norm() < 1e-3));
        assert!(a.plus.row(gp.n_t() - 1).iter().all(|z| z.norm() < 1e-3));
    }

    #[test]
    fn s_independent_pairs_have_no_angular_derivative() {
        let gm = CylinderGrid::with_spacing(-5.0, 0.0, 0.1, 8).unwrap();
        let gp = CylinderGrid::with_spacing(0.0, 5.0, 0.1, 8).unwrap();
        let u = s_independent_pair(&gm, &gp, 2, &FieldSpec::default(), 1).unwrap();
        assert_eq!(d_s(&u.minus).max_abs(), 0.0);
        assert_eq!(d_s(&u.plus).max_abs(), 0.0);
    }
}
