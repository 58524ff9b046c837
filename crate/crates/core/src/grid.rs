//! Discretized cylinders `I × S¹` and sampled `ℂⁿ`-valued maps on them.
//!
//! All grids that take part in one computation share a common t-lattice
//! `t_min + i·h_t`. A translation by a multiple of `h_t` is then a pure
//! relabelling of the grid and introduces no interpolation error. Off-lattice
//! shifts fall back to cubic Lagrange interpolation.
//!
//! The s-direction has period 2π. Derivatives in s are spectral; fractional
//! s-shifts use Fourier phase shifting, so both are exact for band-limited data.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SpliceError};

/// Period of the circle factor.
pub const S_PERIOD: f64 = 2.0 * PI;

/// Relative tolerance (in units of `h_t`) for deciding lattice alignment.
const LATTICE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderGrid {
    t_min: f64,
    t_max: f64,
    n_t: usize,
    n_s: usize,
}

impl CylinderGrid {
    /// Uniform grid with `n_t` samples on `[t_min, t_max]` and `n_s` periodic samples in s.
    pub fn new(t_min: f64, t_max: f64, n_t: usize, n_s: usize) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite()) || t_min >= t_max {
            return Err(SpliceError::InvalidGrid(format!(
                "need t_min < t_max, got [{t_min}, {t_max}]"
            )));
        }
        if n_t < 4 || n_s < 4 {
            return Err(SpliceError::InvalidGrid(format!(
                "need n_t >= 4 and n_s >= 4, got n_t = {n_t}, n_s = {n_s}"
            )));
        }
        Ok(Self {
            t_min,
            t_max,
            n_t,
            n_s,
        })
    }

    /// Grid with spacing `h` starting at `t_min` and reaching at least `t_max`.
    pub fn with_spacing(t_min: f64, t_max: f64, h: f64, n_s: usize) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(SpliceError::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        let cells = ((t_max - t_min) / h - LATTICE_TOL).ceil().max(0.0) as usize;
        Self::new(t_min, t_min + cells as f64 * h, cells + 1, n_s)
    }

    /// Grid on the lattice `h·ℤ` spanning indices `i_min..=i_max`.
    pub fn on_lattice(h: f64, i_min: i64, i_max: i64, n_s: usize) -> Result<Self> {
        if i_max <= i_min {
            return Err(SpliceError::InvalidGrid(format!(
                "empty lattice range {i_min}..={i_max}"
            )));
        }
        Self::new(i_min as f64 * h, i_max as f64 * h, (i_max - i_min + 1) as usize, n_s)
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn h_t(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_t - 1) as f64
    }

    pub fn h_s(&self) -> f64 {
        S_PERIOD / self.n_s as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.h_t()
    }

    pub fn s(&self, j: usize) -> f64 {
        j as f64 * self.h_s()
    }

    pub fn t_values(&self) -> Vec<f64> {
        (0..self.n_t).map(|i| self.t(i)).collect()
    }

    /// True when `dt` is an integer multiple of `h_t`.
    pub fn is_grid_multiple(&self, dt: f64) -> bool {
        let q = dt / self.h_t();
        (q - q.round()).abs() < LATTICE_TOL
    }

    /// Snap `value` to the nearest multiple of `h_t`.
    pub fn snap(&self, value: f64) -> f64 {
        (value / self.h_t()).round() * self.h_t()
    }

    /// Grid relabelled by `t → t − dt` (same samples, shifted coordinates).
    fn relabelled(&self, steps: i64) -> Self {
        let h = self.h_t();
        let t_min = self.t_min - steps as f64 * h;
        Self {
            t_min,
            t_max: t_min + (self.n_t - 1) as f64 * h,
            n_t: self.n_t,
            n_s: self.n_s,
        }
    }

    /// Row offset of `other`'s first row in units of this grid's spacing,
    /// provided both grids share spacing, circle resolution and lattice.
    pub fn lattice_offset(&self, other: &CylinderGrid) -> Option<i64> {
        if self.n_s != other.n_s {
            return None;
        }
        let h = self.h_t();
        if ((other.h_t() - h) / h).abs() > 1e-9 {
            return None;
        }
        let q = (other.t_min - self.t_min) / h;
        ((q - q.round()).abs() < LATTICE_TOL).then(|| q.round() as i64)
    }

    /// Grid on the same lattice and circle resolution holding the lattice rows in `[t_lo, t_hi]`;
    /// the span may extend past this grid.
    pub fn lattice_span(&self, t_lo: f64, t_hi: f64) -> Result<Self> {
        let h = self.h_t();
        let i_lo = ((t_lo - self.t_min) / h - LATTICE_TOL).ceil() as i64;
        let i_hi = ((t_hi - self.t_min) / h + LATTICE_TOL).floor() as i64;
        if i_hi - i_lo < 3 {
            return Err(SpliceError::InvalidGrid(format!(
                "range [{t_lo}, {t_hi}] holds fewer than 4 lattice rows"
            )));
        }
        let t0 = self.t_min + i_lo as f64 * h;
        Self::new(t0, t0 + (i_hi - i_lo) as f64 * h, (i_hi - i_lo + 1) as usize, self.n_s)
    }
}

/// Sampled `ℂⁿ`-valued function on a [`CylinderGrid`], stored row-major as
/// `(t-index, s-index, component)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMap {
    grid: CylinderGrid,
    n_comp: usize,
    data: Vec<Complex64>,
}

impl DiscreteMap {
    pub fn zeros(grid: &CylinderGrid, n_comp: usize) -> Self {
        assert!(n_comp > 0, "a map needs at least one component");
        Self {
            grid: grid.clone(),
            n_comp,
            data: vec![Complex64::new(0.0, 0.0); grid.n_t * grid.n_s * n_comp],
        }
    }

    /// Sample `f(t, s, out)` at every grid point.
    pub fn from_fn<F>(grid: &CylinderGrid, n_comp: usize, f: F) -> Self
    where
        F: Fn(f64, f64, &mut [Complex64]),
    {
        let mut map = Self::zeros(grid, n_comp);
        let n_s = grid.n_s;
        for (idx, cell) in map.data.chunks_mut(n_comp).enumerate() {
            let (i, j) = (idx / n_s, idx % n_s);
            f(grid.t(i), grid.s(j), cell);
        }
        map
    }

    pub fn from_samples(grid: &CylinderGrid, n_comp: usize, data: Vec<Complex64>) -> Result<Self> {
        let expected = grid.n_t * grid.n_s * n_comp;
        if n_comp == 0 || data.len() != expected {
            return Err(SpliceError::ShapeMismatch(format!(
                "expected {expected} samples for ({}, {}, {n_comp}), got {}",
                grid.n_t,
                grid.n_s,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.is_finite()) {
            return Err(SpliceError::NonFinite("DiscreteMap::from_samples"));
        }
        Ok(Self {
            grid: grid.clone(),
            n_comp,
            data,
        })
    }

    pub fn grid(&self) -> &CylinderGrid {
        &self.grid
    }

    pub fn n_components(&self) -> usize {
        self.n_comp
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.data
    }

    pub fn at(&self, i: usize, j: usize) -> &[Complex64] {
        let start = (i * self.grid.n_s + j) * self.n_comp;
        &self.data[start..start + self.n_comp]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let width = self.row_width();
        &self.data[i * width..(i + 1) * width]
    }

    fn row_width(&self) -> usize {
        self.grid.n_s * self.n_comp
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    /// Largest component modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_samples(|z| z * c)
    }

    pub fn map_samples(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            n_comp: self.n_comp,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.n_comp != other.n_comp || self.grid.lattice_offset(&other.grid) != Some(0)
            || self.grid.n_t != other.grid.n_t
        {
            return Err(SpliceError::ShapeMismatch(format!(
                "maps on [{}, {}]x{} ({} comps) and [{}, {}]x{} ({} comps)",
                self.grid.t_min,
                self.grid.t_max,
                self.grid.n_t,
                self.n_comp,
                other.grid.t_min,
                other.grid.t_max,
                other.grid.n_t,
                other.n_comp
            )));
        }
        Ok(())
    }

    /// `a·self + b·other` on a common grid.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            n_comp: self.n_comp,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&x, &y)| x * a + y * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(1.0, other, 1.0)
    }

    /// Multiply row `i` by `profile[i]`.
    pub fn mul_rows(&self, profile: &[f64]) -> Result<Self> {
        if profile.len() != self.grid.n_t {
            return Err(SpliceError::ShapeMismatch(format!(
                "profile of length {} on {} rows",
                profile.len(),
                self.grid.n_t
            )));
        }
        let width = self.row_width();
        let mut out = self.clone();
        for (row, &c) in out.data.chunks_mut(width).zip(profile) {
            row.iter_mut().for_each(|z| *z *= c);
        }
        Ok(out)
    }

    /// Resample the rows of this map onto `target`, which must share its lattice.
    /// Rows of `target` outside this map's t-range are flagged out-of-domain.
    pub fn window(&self, target: &CylinderGrid) -> Result<Windowed> {
        let offset = self.grid.lattice_offset(target).ok_or_else(|| {
            SpliceError::ShapeMismatch(format!(
                "grid [{}, {}] (h = {}) is not on the lattice of [{}, {}] (h = {})",
                target.t_min,
                target.t_max,
                target.h_t(),
                self.grid.t_min,
                self.grid.t_max,
                self.grid.h_t()
            ))
        })?;
        let width = self.row_width();
        let mut map = DiscreteMap::zeros(target, self.n_comp);
        let mut valid = vec![false; target.n_t];
        for (i, ok) in valid.iter_mut().enumerate() {
            let src = offset + i as i64;
            if src >= 0 && (src as usize) < self.grid.n_t {
                let src = src as usize;
                map.data[i * width..(i + 1) * width]
                    .copy_from_slice(&self.data[src * width..(src + 1) * width]);
                *ok = true;
            }
        }
        Ok(Windowed { map, valid })
    }

    /// Restriction to a sub-grid on the same lattice; every target row must be covered.
    pub fn restrict(&self, target: &CylinderGrid) -> Result<Self> {
        self.window(target)?.into_complete()
    }
}

/// A map resampled onto a foreign grid together with its row-validity mask.
#[derive(Debug, Clone)]
pub struct Windowed {
    map: DiscreteMap,
    valid: Vec<bool>,
}

impl Windowed {
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn grid(&self) -> &CylinderGrid {
        self.map.grid()
    }

    /// `out += profile · self`, rejecting any non-zero multiplier on an out-of-domain row.
    pub fn accumulate_into(&self, profile: &[f64], out: &mut DiscreteMap) -> Result<()> {
        self.accumulate_complex(profile, Complex64::new(1.0, 0.0), out)
    }

    /// `out += factor · profile · self`.
    pub fn accumulate_complex(
        &self,
        profile: &[f64],
        factor: Complex64,
        out: &mut DiscreteMap,
    ) -> Result<()> {
        if profile.len() != self.valid.len() || out.data.len() != self.map.data.len() {
            return Err(SpliceError::ShapeMismatch(
                "profile, window and accumulator differ in size".into(),
            ));
        }
        let width = self.map.row_width();
        for (i, (&c, &ok)) in profile.iter().zip(&self.valid).enumerate() {
            if c == 0.0 {
                continue;
            }
            if !ok {
                return Err(SpliceError::OutOfDomain {
                    t: self.map.grid.t(i),
                });
            }
            let w = factor * c;
            let src = &self.map.data[i * width..(i + 1) * width];
            for (o, &z) in out.data[i * width..(i + 1) * width].iter_mut().zip(src) {
                *o += w * z;
            }
        }
        Ok(())
    }

    /// The resampled map, provided no row is out-of-domain.
    pub fn into_complete(self) -> Result<DiscreteMap> {
        if let Some(i) = self.valid.iter().position(|&ok| !ok) {
            return Err(SpliceError::OutOfDomain {
                t: self.map.grid.t(i),
            });
        }
        Ok(self.map)
    }
}

/// `(translate u)(t, s) = u(t + dt, s + dtheta)`.
///
/// Lattice shifts relabel the grid to `[t_min − dt, t_max − dt]`. Other shifts
/// interpolate onto the rows of the source lattice whose images `t + dt` fall in
/// the source range; the remaining rows are simply absent and therefore
/// out-of-domain for any later [`DiscreteMap::window`].
pub fn translate(u: &DiscreteMap, dt: f64, dtheta: f64) -> Result<DiscreteMap> {
    if !dt.is_finite() || !dtheta.is_finite() {
        return Err(SpliceError::InvalidParameter(format!(
            "translation ({dt}, {dtheta}) is not finite"
        )));
    }
    let grid = &u.grid;
    let h = grid.h_t();
    let shifted = if grid.is_grid_multiple(dt) {
        DiscreteMap {
            grid: grid.relabelled((dt / h).round() as i64),
            n_comp: u.n_comp,
            data: u.data.clone(),
        }
    } else {
        interpolate_t(u, dt)?
    };
    shift_s(&shifted, dtheta)
}

fn interpolate_t(u: &DiscreteMap, dt: f64) -> Result<DiscreteMap> {
    let grid = &u.grid;
    let h = grid.h_t();
    let n = grid.n_t as i64;
    let i_lo = (-dt / h - LATTICE_TOL).ceil() as i64;
    let i_hi = ((n - 1) as f64 - dt / h + LATTICE_TOL).floor() as i64;
    if i_hi - i_lo < 3 {
        return Err(SpliceError::InvalidGrid(format!(
            "shift by {dt} leaves fewer than 4 interpolable rows"
        )));
    }
    let t0 = grid.t_min + i_lo as f64 * h;
    let out_grid = CylinderGrid::new(
        t0,
        t0 + (i_hi - i_lo) as f64 * h,
        (i_hi - i_lo + 1) as usize,
        grid.n_s,
    )?;
    let width = u.row_width();
    let mut out = DiscreteMap::zeros(&out_grid, u.n_comp);
    for (k, row) in out.data.chunks_mut(width).enumerate() {
        // Fractional source index of t + dt.
        let x = (i_lo + k as i64) as f64 + dt / h;
        let j0 = ((x.floor() as i64) - 1).clamp(0, n - 4) as usize;
        let w = lagrange4(x - j0 as f64);
        for (q, &wq) in w.iter().enumerate() {
            let src = &u.data[(j0 + q) * width..(j0 + q + 1) * width];
            for (o, &z) in row.iter_mut().zip(src) {
                *o += z * wq;
            }
        }
    }
    Ok(out)
}

/// Cubic Lagrange weights for nodes 0, 1, 2, 3 evaluated at `x`.
fn lagrange4(x: f64) -> [f64; 4] {
    [
        -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0,
        x * (x - 2.0) * (x - 3.0) / 2.0,
        -x * (x - 1.0) * (x - 3.0) / 2.0,
        x * (x - 1.0) * (x - 2.0) / 6.0,
    ]
}

struct CircleFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl CircleFft {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// Signed wavenumber of FFT bin `q`; the Nyquist bin maps to `−n/2`.
    fn wavenumber(&self, q: usize) -> f64 {
        if q < self.n.div_ceil(2) || (self.n % 2 == 1 && q == self.n / 2) {
            q as f64
        } else {
            q as f64 - self.n as f64
        }
    }

    /// Apply `multiplier(q, k)` to every circle of every row and component.
    fn apply(&self, u: &DiscreteMap, multiplier: impl Fn(usize, f64) -> Complex64) -> DiscreteMap {
        let n_s = self.n;
        let n_comp = u.n_comp;
        let factors: Vec<Complex64> = (0..n_s)
            .map(|q| multiplier(q, self.wavenumber(q)) / n_s as f64)
            .collect();
        let mut out = u.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); n_s];
        let width = n_s * n_comp;
        for row in out.data.chunks_mut(width) {
            for c in 0..n_comp {
                for j in 0..n_s {
                    buf[j] = row[j * n_comp + c];
                }
                self.forward.process(&mut buf);
                for (b, f) in buf.iter_mut().zip(&factors) {
                    *b *= f;
                }
                self.inverse.process(&mut buf);
                for j in 0..n_s {
                    row[j * n_comp + c] = buf[j];
                }
            }
        }
        out
    }
}

fn shift_s(u: &DiscreteMap, dtheta: f64) -> Result<DiscreteMap> {
    let n_s = u.grid.n_s;
    let q = dtheta / u.grid.h_s();
    if (q - q.round()).abs() < 1e-12 {
        let m = (q.round() as i64).rem_euclid(n_s as i64) as usize;
        if m == 0 {
            return Ok(u.clone());
        }
        let n_comp = u.n_comp;
        let mut out = u.clone();
        let width = u.row_width();
        for (dst, src) in out.data.chunks_mut(width).zip(u.data.chunks(width)) {
            for j in 0..n_s {
                let from = (j + m) % n_s;
                dst[j * n_comp..(j + 1) * n_comp]
                    .copy_from_slice(&src[from * n_comp..(from + 1) * n_comp]);
            }
        }
        return Ok(out);
    }
    let fft = CircleFft::new(n_s);
    Ok(fft.apply(u, |_, k| Complex64::from_polar(1.0, k * dtheta)))
}

/// ∂_t by fourth-order finite differences (one-sided stencils on the two edge rows).
pub fn d_t(u: &DiscreteMap) -> DiscreteMap {
    let n = u.grid.n_t;
    let h = u.grid.h_t();
    let width = u.row_width();
    let mut out = DiscreteMap::zeros(&u.grid, u.n_comp);
    let (coeffs, denom): (Box<dyn Fn(usize) -> (usize, Vec<f64>)>, f64) = if n >= 5 {
        (
            Box::new(move |i: usize| match i {
                0 => (0, vec![-25.0, 48.0, -36.0, 16.0, -3.0]),
                1 => (0, vec![-3.0, -10.0, 18.0, -6.0, 1.0]),
                i if i == n - 2 => (n - 5, vec![-1.0, 6.0, -18.0, 10.0, 3.0]),
                i if i == n - 1 => (n - 5, vec![3.0, -16.0, 36.0, -48.0, 25.0]),
                i => (i - 2, vec![1.0, -8.0, 0.0, 8.0, -1.0]),
            }),
            12.0 * h,
        )
    } else {
        (
            Box::new(|i: usize| match i {
                0 => (0, vec![-11.0, 18.0, -9.0, 2.0]),
                1 => (0, vec![-2.0, -3.0, 6.0, -1.0]),
                2 => (0, vec![1.0, -6.0, 3.0, 2.0]),
                _ => (0, vec![-2.0, 9.0, -18.0, 11.0]),
            }),
            6.0 * h,
        )
    };
    for i in 0..n {
        let (start, c) = coeffs(i);
        let dst = &mut out.data[i * width..(i + 1) * width];
        for (q, &cq) in c.iter().enumerate() {
            if cq == 0.0 {
                continue;
            }
            let src = &u.data[(start + q) * width..(start + q + 1) * width];
            for (o, &z) in dst.iter_mut().zip(src) {
                *o += z * cq;
            }
        }
        dst.iter_mut().for_each(|z| *z /= denom);
    }
    out
}

/// ∂_s by Fourier differentiation; the Nyquist mode is dropped.
pub fn d_s(u: &DiscreteMap) -> DiscreteMap {
    let n_s = u.grid.n_s;
    let fft = CircleFft::new(n_s);
    let mut out = fft.apply(u, |q, k| {
        if n_s % 2 == 0 && q == n_s / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k)
        }
    });
    // circles on which u is constant have derivative exactly zero, not FFT roundoff
    let nc = u.n_comp;
    for i in 0..u.grid.n_t {
        let row = u.row(i);
        for c in 0..nc {
            if (1..n_s).all(|j| row[j * nc + c] == row[c]) {
                let base = i * n_s * nc;
                for j in 0..n_s {
                    out.data[base + j * nc + c] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn make_grid_spacing() {
        let g = CylinderGrid::new(0.0, 10.0, 101, 32).unwrap();
        assert!((g.h_t() - 0.1).abs() < 1e-15);
        assert!((g.h_s() - 2.0 * PI / 32.0).abs() < 1e-15);
        let minus = CylinderGrid::new(-10.0, 0.0, 101, 32).unwrap();
        assert_eq!(minus.t(100), 0.0);
        let neck = CylinderGrid::new(-20.0, 20.0, 401, 64).unwrap();
        assert!((neck.h_t() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(CylinderGrid::new(1.0, 1.0, 10, 8).is_err());
        assert!(CylinderGrid::new(2.0, 1.0, 10, 8).is_err());
        assert!(CylinderGrid::new(0.0, 1.0, 3, 8).is_err());
        assert!(CylinderGrid::new(0.0, 1.0, 10, 3).is_err());
    }

    #[test]
    fn translate_identity_and_value() {
        let g = CylinderGrid::new(0.0, 10.0, 101, 8).unwrap();
        let u = DiscreteMap::from_fn(&g, 1, |t, _, out| out[0] = c((-t).exp()));
        assert_eq!(translate(&u, 0.0, 0.0).unwrap(), u);

        let v = translate(&u, 3.0, 0.0).unwrap();
        assert!((v.grid().t_min() + 3.0).abs() < 1e-12);
        let i0 = v.grid().lattice_offset(&CylinderGrid::new(0.0, 1.0, 11, 8).unwrap()).unwrap();
        assert!((v.at(i0 as usize, 0)[0].re - 0.049787068367863944).abs() < 1e-15);
    }

    #[test]
    fn translate_off_lattice_is_fourth_order() {
        let err = |h: f64| {
            let g = CylinderGrid::with_spacing(0.0, 6.0, h, 4).unwrap();
            let u = DiscreteMap::from_fn(&g, 1, |t, _, out| out[0] = c(t.sin()));
            let v = translate(&u, 0.37, 0.0).unwrap();
            (0..v.grid().n_t())
                .map(|i| (v.at(i, 0)[0].re - (v.grid().t(i) + 0.37).sin()).abs())
                .fold(0.0, f64::max)
        };
        let slope = (err(0.1) / err(0.05)).log2();
        assert!(slope > 3.5, "slope {slope}");
    }

    #[test]
    fn s_shift_is_exact_for_band_limited_data() {
        let g = CylinderGrid::new(0.0, 1.0, 4, 16).unwrap();
        let u = DiscreteMap::from_fn(&g, 1, |_, s, out| {
            out[0] = Complex64::from_polar(1.0, 3.0 * s) + Complex64::from_polar(0.5, -2.0 * s)
        });
        let v = translate(&u, 0.0, 0.3).unwrap();
        for j in 0..16 {
            let s = g.s(j) + 0.3;
            let expect =
                Complex64::from_polar(1.0, 3.0 * s) + Complex64::from_polar(0.5, -2.0 * s);
            assert!((v.at(1, j)[0] - expect).norm() < 1e-13);
        }
        // group law in s
        let w = translate(&v, 0.0, 0.45).unwrap();
        let direct = translate(&u, 0.0, 0.75).unwrap();
        assert!(w.sub(&direct).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn d_s_of_fourier_mode() {
        let g = CylinderGrid::new(0.0, 1.0, 5, 16).unwrap();
        for m in [-7_i32, -3, 0, 1, 5] {
            let u = DiscreteMap::from_fn(&g, 1, |_, s, out| {
                out[0] = Complex64::from_polar(1.0, m as f64 * s)
            });
            let du = d_s(&u);
            let expect = u.map_samples(|z| z * Complex64::new(0.0, m as f64));
            assert!(du.sub(&expect).unwrap().max_abs() < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn derivatives_of_constants_vanish() {
        let g = CylinderGrid::new(-1.0, 2.0, 31, 8).unwrap();
        let u = DiscreteMap::from_fn(&g, 2, |_, _, out| {
            out[0] = c(2.5);
            out[1] = Complex64::new(-1.0, 0.5);
        });
        assert!(d_t(&u).max_abs() < 1e-12);
        assert_eq!(d_s(&u).max_abs(), 0.0);
    }

    #[test]
    fn d_t_of_polynomials() {
        // exact for quartics, including the one-sided edge rows
        let g = CylinderGrid::new(-1.0, 1.0, 21, 4).unwrap();
        let u = DiscreteMap::from_fn(&g, 1, |t, _, out| out[0] = c(t.powi(4) - 2.0 * t * t));
        let du = d_t(&u);
        for i in 0..g.n_t() {
            let t = g.t(i);
            assert!((du.at(i, 0)[0].re - (4.0 * t.powi(3) - 4.0 * t)).abs() < 1e-11);
        }
        // the four-row fallback is exact for cubics
        let g4 = CylinderGrid::new(0.0, 3.0, 4, 4).unwrap();
        let u = DiscreteMap::from_fn(&g4, 1, |t, _, out| out[0] = c(t.powi(3)));
        let du = d_t(&u);
        for i in 0..4 {
            assert!((du.at(i, 0)[0].re - 3.0 * g4.t(i).powi(2)).abs() < 1e-11);
        }
    }

    #[test]
    fn d_t_convergence_slope_is_four() {
        let err = |n: usize| {
            let g = CylinderGrid::new(0.0, 2.0, n, 4).unwrap();
            let u = DiscreteMap::from_fn(&g, 1, |t, _, out| out[0] = c((1.3 * t).sin() * t * t));
            let du = d_t(&u);
            (0..n)
                .map(|i| {
                    let t = g.t(i);
                    let exact = 1.3 * (1.3 * t).cos() * t * t + 2.0 * t * (1.3 * t).sin();
                    (du.at(i, 0)[0].re - exact).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2, e3) = (err(21), err(41), err(81));
        let s1 = (e1 / e2).log2();
        let s2 = (e2 / e3).log2();
        assert!((s1 - 4.0).abs() < 0.5 && (s2 - 4.0).abs() < 0.5, "{s1} {s2}");
    }

    #[test]
    fn window_flags_out_of_domain_rows() {
        let g = CylinderGrid::new(0.0, 1.0, 11, 4).unwrap();
        let u = DiscreteMap::from_fn(&g, 1, |t, _, out| out[0] = c(t));
        let target = CylinderGrid::new(-0.5, 0.5, 11, 4).unwrap();
        let w = u.window(&target).unwrap();
        assert_eq!(w.valid().iter().filter(|&&v| v).count(), 6);

        let mut acc = DiscreteMap::zeros(&target, 1);
        let masked: Vec<f64> = target.t_values().iter().map(|&t| if t >= 0.0 { 1.0 } else { 0.0 }).collect();
        w.accumulate_into(&masked, &mut acc).unwrap();
        assert!((acc.at(10, 0)[0].re - 0.5).abs() < 1e-15);

        let ones = vec![1.0; 11];
        assert!(matches!(
            w.accumulate_into(&ones, &mut acc),
            Err(SpliceError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn window_rejects_foreign_lattice() {
        let g = CylinderGrid::new(0.0, 1.0, 11, 4).unwrap();
        let u = DiscreteMap::zeros(&g, 1);
        let off = CylinderGrid::new(0.05, 1.05, 11, 4).unwrap();
        assert!(u.window(&off).is_err());
    }
}
