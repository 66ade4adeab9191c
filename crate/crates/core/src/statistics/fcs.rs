//! Asymptotic tick rates from full counting statistics.

use serde::Serialize;

use crate::clock_model::{validate_elementary, ClockSpec};
use crate::error::{Error, Result};
use crate::evolution::{tick_number_moments, ClockState, ShiftDecomposition};
use crate::numerics::{leading_eigenvalue, sorted_spectrum, stationary_state, C64};

/// Counting-field steps for the central differences.
pub const CHI_STEPS: [f64; 2] = [1e-3, 5e-4];

/// Relative disagreement between methods that counts as a failure.
pub const CONSISTENCY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMethod {
    EigDerivative,
    SlopeFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticRates {
    pub nu: f64,
    pub sigma_rate: f64,
    pub r1: f64,
}

impl AsymptoticRates {
    pub fn new(nu: f64, sigma_rate: f64) -> Self {
        AsymptoticRates { nu, sigma_rate, r1: nu / sigma_rate }
    }
}

pub fn fcs_rates(spec: &ClockSpec, method: RateMethod) -> Result<AsymptoticRates> {
    validate_elementary(spec)?;
    let dec = ShiftDecomposition::new(spec);
    stationary_state(&dec.tilted(0.0))?;
    match method {
        RateMethod::EigDerivative => eig_derivative(&dec),
        RateMethod::SlopeFit => slope_fit(spec, &dec),
    }
}

fn eig_derivative(dec: &ShiftDecomposition) -> Result<AsymptoticRates> {
    let lambda = |chi: f64| leading_eigenvalue(&dec.tilted(chi));
    let l0 = lambda(0.0)?;
    let mut first = [C64::new(0.0, 0.0); 2];
    let mut second = [C64::new(0.0, 0.0); 2];
    for (k, &h) in CHI_STEPS.iter().enumerate() {
        let plus = lambda(h)?;
        let minus = lambda(-h)?;
        first[k] = (plus - minus) / (2.0 * h);
        second[k] = (plus - l0 * 2.0 + minus) / (h * h);
    }
    // both step pairs differ by a factor two, so the h² error terms cancel
    let d1 = (first[1] * 4.0 - first[0]) / 3.0;
    let d2 = (second[1] * 4.0 - second[0]) / 3.0;
    Ok(AsymptoticRates::new(d1.im, -d2.re))
}

/// Late-time window `[t1, 2 t1]` with `t1` chosen so transients have decayed
/// by `e^{-28}` relative to the stationary growth.
fn slope_fit(spec: &ClockSpec, dec: &ShiftDecomposition) -> Result<AsymptoticRates> {
    let spectrum = sorted_spectrum(&dec.tilted(0.0))?;
    let gap = spectrum.get(1).map(|z| -z.re).unwrap_or(1.0);
    if !(gap > 0.0) {
        return Err(Error::Degeneracy("reduced generator has no relaxation gap".into()));
    }
    let t1 = 28.0 / gap;
    let times: Vec<f64> = (0..=20).map(|k| t1 * (1.0 + k as f64 / 20.0)).collect();
    let mut n_max = 64usize;
    let moments = loop {
        match tick_number_moments(spec, &ClockState::from_spec(spec, n_max), &times) {
            Ok(m) => break m,
            Err(Error::TruncationLeak { suggested_n_max, .. }) if suggested_n_max <= 1 << 16 => {
                n_max = suggested_n_max.max(2 * n_max);
            }
            Err(e) => return Err(e),
        }
    };
    let ts: Vec<f64> = moments.iter().map(|m| m.time).collect();
    let means: Vec<f64> = moments.iter().map(|m| m.mean).collect();
    let vars: Vec<f64> = moments.iter().map(|m| m.variance).collect();
    Ok(AsymptoticRates::new(regression_slope(&ts, &means), regression_slope(&ts, &vars)))
}

pub(crate) fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn relative_difference(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Both extraction methods; fails if they disagree by more than [`CONSISTENCY_TOL`].
pub fn cross_validate_rates(spec: &ClockSpec) -> Result<(AsymptoticRates, AsymptoticRates)> {
    let eig = fcs_rates(spec, RateMethod::EigDerivative)?;
    let fit = fcs_rates(spec, RateMethod::SlopeFit)?;
    let dnu = relative_difference(eig.nu, fit.nu);
    let dsig = relative_difference(eig.sigma_rate, fit.sigma_rate);
    if dnu > CONSISTENCY_TOL || dsig > CONSISTENCY_TOL {
        return Err(Error::Consistency(format!(
            "nu {} vs {} (rel {dnu:e}); Sigma {} vs {} (rel {dsig:e})",
            eig.nu, fit.nu, eig.sigma_rate, fit.sigma_rate
        )));
    }
    Ok((eig, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_rates_are_exact() {
        let r = fcs_rates(&ClockSpec::poisson(2.5), RateMethod::EigDerivative).unwrap();
        assert!((r.nu - 2.5).abs() < 1e-9);
        assert!((r.sigma_rate - 2.5).abs() < 1e-7);
        assert!((r.r1 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn erlang_rates() {
        for d in 2..=5 {
            let g = 1.3;
            let r = fcs_rates(&ClockSpec::erlang(d, g), RateMethod::EigDerivative).unwrap();
            let df = d as f64;
            assert!((r.nu - g / df).abs() < 1e-8 * g, "d={d} nu={}", r.nu);
            assert!((r.sigma_rate - g / (df * df)).abs() < 1e-6 * g, "d={d} Sigma={}", r.sigma_rate);
        }
    }

    #[test]
    fn slope_fit_matches_poisson() {
        let r = fcs_rates(&ClockSpec::poisson(1.0), RateMethod::SlopeFit).unwrap();
        assert!((r.nu - 1.0).abs() < 1e-6);
        assert!((r.sigma_rate - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_steady_state_is_rejected() {
        // two disconnected Poisson lanes
        let mut spec = ClockSpec::branching(1.0, 0.5, 0.2);
        spec.jumps.remove(1);
        spec.jumps[1].op = crate::numerics::matrix::ket_bra(2, 1, 1);
        assert!(matches!(fcs_rates(&spec, RateMethod::EigDerivative), Err(Error::Degeneracy(_))));
    }
}
