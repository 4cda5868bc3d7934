//! Geometric decay-rate estimation for distance sequences.

use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

/// Minimum number of window points for a fit.
pub const MIN_FIT_POINTS: usize = 10;

/// Default fraction of usable points discarded as transient.
pub const DEFAULT_BURN_IN: f64 = 0.5;

/// Default absolute tolerance when comparing fitted and predicted rates.
pub const DEFAULT_RATE_TOLERANCE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Fitted per-step contraction factor `exp(slope)`.
    pub rho_hat: f64,
    /// RMS deviation of the window's log-distances from the fitted line.
    pub residual: f64,
    /// Half-open index range `[start, end)` used for the fit.
    pub window: (usize, usize),
    pub n_points: usize,
}

/// Least-squares fit of `log d_n ≈ a + s n`, `rho_hat = exp(s)`.
///
/// Usable points are the prefix of `distances` before the first entry below
/// `floor`; the first `burn_in_fraction` of them is discarded.
pub fn estimate_rate(distances: &[f64], burn_in_fraction: f64, floor: f64) -> Result<RateEstimate> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(usage(format!("burn-in fraction must lie in [0, 1), got {burn_in_fraction}")));
    }
    if !(floor > 0.0) {
        return Err(usage(format!("floor must be > 0, got {floor}")));
    }
    // `!(d >= floor)` also stops at NaN
    let usable = distances
        .iter()
        .position(|&d| !(d >= floor) || !d.is_finite())
        .unwrap_or(distances.len());
    let start = (burn_in_fraction * usable as f64).floor() as usize;
    let n_points = usable - start;
    if n_points < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            usable: n_points,
            required: MIN_FIT_POINTS,
        });
    }

    let xs: Vec<f64> = (start..usable).map(|n| n as f64).collect();
    let ys: Vec<f64> = distances[start..usable].iter().map(|d| d.ln()).collect();
    let count = n_points as f64;
    let x_mean = xs.iter().sum::<f64>() / count;
    let y_mean = ys.iter().sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - x_mean) * (y - y_mean);
        sxx += (x - x_mean) * (x - x_mean);
    }
    let slope = sxy / sxx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (y_mean + slope * (x - x_mean));
            r * r
        })
        .sum::<f64>()
        / count)
        .sqrt();

    Ok(RateEstimate {
        rho_hat: slope.exp(),
        residual,
        window: (start, usable),
        n_points,
    })
}

/// `log max_n ρ^{−n} d_n`, evaluated in log space.
pub fn log_sup_ratio_statistic(distances: &[f64], rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(usage(format!("rho must lie in (0, 1), got {rho}")));
    }
    let log_rho = rho.ln();
    Ok(distances
        .iter()
        .enumerate()
        .map(|(n, d)| d.ln() - n as f64 * log_rho)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `max_n ρ^{−n} d_n`. Stays bounded as the sequence grows iff the
/// sequence decays at least as fast as `ρ`.
pub fn sup_ratio_statistic(distances: &[f64], rho: f64) -> Result<f64> {
    log_sup_ratio_statistic(distances, rho).map(f64::exp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Match,
    Faster,
    Slower,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Match => "match",
            Self::Faster => "faster",
            Self::Slower => "slower",
        }
    }

    /// Whether this verdict is consistent with the predicted rate being an
    /// upper bound.
    pub fn is_acceptable(self) -> bool {
        !matches!(self, Self::Slower)
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn adjudicate(estimate: &RateEstimate, predicted: f64, tolerance: f64) -> Result<Verdict> {
    if !(tolerance > 0.0) {
        return Err(usage(format!("tolerance must be > 0, got {tolerance}")));
    }
    Ok(compare_rates(estimate.rho_hat, predicted, tolerance))
}

pub(crate) fn compare_rates(rho_hat: f64, predicted: f64, tolerance: f64) -> Verdict {
    if (rho_hat - predicted).abs() <= tolerance {
        Verdict::Match
    } else if rho_hat < predicted - tolerance {
        Verdict::Faster
    } else {
        Verdict::Slower
    }
}
