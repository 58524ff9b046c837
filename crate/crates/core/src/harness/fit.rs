//! Least-squares rate fits on linearized data.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpliceError};

/// Minimum number of points a rate fit accepts.
pub const MIN_FIT_POINTS: usize = 4;

/// Asymptotic law fitted to `(x, y)` data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateModel {
    /// `y = c·x^a`
    Power,
    /// `y = c·e^{a·x}`
    Exp,
    /// `y = c·(ln x)^a`
    Log,
}

impl std::str::FromStr for RateModel {
    type Err = SpliceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(Self::Power),
            "exp" => Ok(Self::Exp),
            "log" => Ok(Self::Log),
            other => Err(SpliceError::InvalidParameter(format!("unknown rate model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub model: RateModel,
    /// The fitted exponent or rate `a`.
    pub rate: f64,
    /// `ln c`.
    pub log_prefactor: f64,
    /// Root-mean-square residual in the linearized coordinates.
    pub residual: f64,
    pub n_points: usize,
}

/// Fit `model` to the points; needs at least [`MIN_FIT_POINTS`] points with `y > 0`
/// and at least two distinct abscissae.
pub fn fit_xy(points: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    fit_with_min(points, model, MIN_FIT_POINTS)
}

/// Same as [`fit_xy`] with an explicit lower limit on the number of points (at least 2).
pub(crate) fn fit_with_min(points: &[(f64, f64)], model: RateModel, min_points: usize) -> Result<RateFit> {
    if points.len() < min_points.max(2) {
        return Err(SpliceError::DegenerateFit(format!(
            "{} points, need at least {}",
            points.len(),
            min_points.max(2)
        )));
    }
    let mut lin = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if !(y > 0.0) || !y.is_finite() || !x.is_finite() {
            return Err(SpliceError::DegenerateFit(format!("point ({x}, {y}) cannot be linearized")));
        }
        let lx = match model {
            RateModel::Power => positive_ln(x)?,
            RateModel::Exp => x,
            RateModel::Log => positive_ln(positive_ln(x)?)?,
        };
        lin.push((lx, y.ln()));
    }
    let n = lin.len() as f64;
    let mx = lin.iter().map(|p| p.0).sum::<f64>() / n;
    let my = lin.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = lin.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = lin.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 1e-300 * n) {
        return Err(SpliceError::DegenerateFit("all abscissae coincide".into()));
    }
    let rate = sxy / sxx;
    let log_prefactor = my - rate * mx;
    let residual = (lin
        .iter()
        .map(|p| (p.1 - log_prefactor - rate * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        model,
        rate,
        log_prefactor,
        residual,
        n_points: lin.len(),
    })
}

fn positive_ln(x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(x.ln())
    } else {
        Err(SpliceError::DegenerateFit(format!("logarithm of non-positive abscissa {x}")))
    }
}

/// Log-spaced or linearly spaced sample points from `from` to `to` inclusive.
pub fn spaced(from: f64, to: f64, steps: usize, log: bool) -> Result<Vec<f64>> {
    if steps == 0 || !from.is_finite() || !to.is_finite() || (log && (from <= 0.0 || to <= 0.0)) {
        return Err(SpliceError::InvalidParameter(format!(
            "cannot space {steps} points over [{from}, {to}]"
        )));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    let n = (steps - 1) as f64;
    Ok((0..steps)
        .map(|i| {
            let f = i as f64 / n;
            if log {
                (from.ln() + f * (to.ln() - from.ln())).exp()
            } else {
                from + f * (to - from)
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_laws() {
        let xs: [f64; 5] = [10.0, 20.0, 40.0, 80.0, 160.0];
        let pow: Vec<_> = xs.iter().map(|&x| (x, 3.0 * x.powf(-1.5))).collect();
        let f = fit_xy(&pow, RateModel::Power).unwrap();
        assert!((f.rate + 1.5).abs() < 1e-12 && (f.log_prefactor - 3f64.ln()).abs() < 1e-10);
        let ex: Vec<_> = xs.iter().map(|&x| (x, (-0.25 * x).exp())).collect();
        assert!((fit_xy(&ex, RateModel::Exp).unwrap().rate + 0.25).abs() < 1e-12);
        let lg: Vec<_> = xs.iter().map(|&x| (x, x.ln().powi(-2))).collect();
        let f = fit_xy(&lg, RateModel::Log).unwrap();
        assert!((f.rate + 2.0).abs() < 1e-12 && f.residual < 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let few = [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)];
        assert!(matches!(fit_xy(&few, RateModel::Power), Err(SpliceError::DegenerateFit(_))));
        let same = [(2.0, 1.0), (2.0, 2.0), (2.0, 3.0), (2.0, 4.0)];
        assert!(matches!(fit_xy(&same, RateModel::Exp), Err(SpliceError::DegenerateFit(_))));
        let zero = [(1.0, 1.0), (2.0, 0.0), (3.0, 3.0), (4.0, 1.0)];
        assert!(matches!(fit_xy(&zero, RateModel::Power), Err(SpliceError::DegenerateFit(_))));
    }

    #[test]
    fn spacing() {
        let v = spaced(20.0, 160.0, 4, true).unwrap();
        assert!((v[1] - 40.0).abs() < 1e-9 && (v[3] - 160.0).abs() < 1e-9);
        assert_eq!(spaced(0.0, 3.0, 4, false).unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert!(spaced(0.0, 3.0, 4, true).is_err());
    }
}
