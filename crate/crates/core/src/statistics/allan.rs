//! Allan variance of the tick frequency.

use serde::Serialize;

use super::fcs::AsymptoticRates;
use crate::error::{Error, Result};
use crate::trajectories::TickRecord;

/// Number of batches for the batch-means standard error.
pub const ALLAN_BATCHES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllanEstimate {
    pub tau: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Steady-state Allan variance `Σ / τ`.
pub fn allan_variance_formula(rates: &AsymptoticRates, tau: f64) -> Result<AllanEstimate> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Precondition(format!("averaging time {tau} must be positive")));
    }
    Ok(AllanEstimate { tau, value: rates.sigma_rate / tau, stderr: 0.0 })
}

/// Two-sample variance of `bins` adjacent frequency estimates over windows of
/// length `tau`, starting at time zero.
///
/// Each term is `(n_{(k+2)τ} - 2 n_{(k+1)τ} + n_{kτ})² / (2τ²)`; the standard
/// error comes from the spread of batch means over consecutive terms.
pub fn allan_variance_trajectory(ticks: &TickRecord, tau: f64, bins: usize) -> Result<AllanEstimate> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Precondition(format!("averaging time {tau} must be positive")));
    }
    if bins < 2 {
        return Err(Error::Precondition("at least two bins are needed".into()));
    }
    let needed = (bins + 1) as f64 * tau;
    if ticks.horizon < needed {
        return Err(Error::Length(format!(
            "record spans {} but {bins} bins of width {tau} need {needed}",
            ticks.horizon
        )));
    }
    let counts: Vec<f64> = (0..=bins + 1).map(|j| ticks.count_at(j as f64 * tau) as f64).collect();
    let terms: Vec<f64> =
        (0..bins).map(|k| (counts[k + 2] - 2.0 * counts[k + 1] + counts[k]).powi(2) / (2.0 * tau * tau)).collect();
    let value = terms.iter().sum::<f64>() / bins as f64;

    let batches = ALLAN_BATCHES.min(bins);
    let size = bins / batches;
    let means: Vec<f64> =
        (0..batches).map(|b| terms[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Ok(AllanEstimate { tau, value, stderr: (var / batches as f64).sqrt() })
}
