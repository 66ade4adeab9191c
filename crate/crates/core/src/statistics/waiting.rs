//! Waiting-time distribution of a reset clock and the precision identity.

use serde::Serialize;

use super::fcs::{fcs_rates, RateMethod};
use super::quadrature::integrate;
use crate::clock_model::{require_elementary, ClockSpec, ToleranceConfig};
use crate::error::{Error, Result};
use crate::evolution::ShiftDecomposition;
use crate::numerics::matrix::{is_psd, CMatrix, CVector, ONE};
use crate::numerics::{propagator, sorted_spectrum, vectorize, C64};

/// Survival below which the quadrature range is considered complete.
const QUADRATURE_SURVIVAL: f64 = 1e-13;
/// Survival allowed beyond the end of a tabulated grid.
pub const GRID_TAIL: f64 = 1e-9;
/// Minimal normalizable mass.
pub const DARK_MASS_TOL: f64 = 1e-6;
const QUAD_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaitingTimeDistribution {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub mu: f64,
    pub sigma2: f64,
    pub r2: f64,
    /// Total probability of ever ticking.
    pub mass: f64,
}

/// No-tick dynamics of an elementary clock started in a fixed state.
pub(crate) struct NoTickDynamics {
    l0: CMatrix,
    start: CVector,
    tick_row: CVector,
    trace_row: CVector,
    decay: f64,
}

impl NoTickDynamics {
    pub(crate) fn new(spec: &ClockSpec, reset: &CMatrix) -> Result<Self> {
        require_elementary(spec, "waiting-time analysis")?;
        let d = spec.dim;
        let tol = ToleranceConfig::default();
        if reset.shape() != (d, d) {
            return Err(Error::Validation(vec![format!("reset state is {:?}, expected {d}x{d}", reset.shape())]));
        }
        let mut problems = Vec::new();
        if !is_psd(reset, tol.psd) {
            problems.push("reset state is not positive semidefinite".to_string());
        }
        if (reset.trace() - ONE).norm() > tol.trace {
            problems.push("reset state does not have unit trace".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let dec = ShiftDecomposition::new(spec);
        let mut k = CMatrix::zeros(d, d);
        for j in spec.jumps.iter().filter(|j| j.delta == 1) {
            let l = j.scaled_op();
            k += l.adjoint() * l;
        }
        // Tr[K X] = Σ_ij K_ji X_ij, with X_ij at vector index i + d j
        let tick_row = CVector::from_fn(d * d, |idx, _| k[(idx / d, idx % d)]);
        let trace_row = CVector::from_fn(d * d, |idx, _| if idx % d == idx / d { ONE } else { C64::new(0.0, 0.0) });
        let l0 = dec.l0.matrix().clone();
        let spectrum = sorted_spectrum(&dec.l0)?;
        let scale = crate::numerics::matrix::norm_one(&l0).max(1e-300);
        let start = vectorize(reset);
        let decaying: Vec<f64> = spectrum.iter().map(|z| z.re).filter(|&r| r < -1e-9 * scale).collect();
        let abscissa = spectrum[0].re;
        let mut dynamics = NoTickDynamics { l0, start, tick_row, trace_row, decay: 0.0 };
        if abscissa < -1e-9 * scale {
            dynamics.decay = -abscissa;
        } else {
            // a non-decaying mode exists; tolerate it only if the start state does not feed it
            let slowest = decaying.first().copied();
            let mass = match slowest {
                Some(r) => {
                    let horizon = 40.0 / -r;
                    1.0 - dynamics.survival(horizon)?
                }
                None => 0.0,
            };
            if mass < 1.0 - DARK_MASS_TOL {
                return Err(Error::DarkState { mass });
            }
            dynamics.decay = -slowest.expect("mass close to one needs a decaying mode");
        }
        Ok(dynamics)
    }

    fn dot(row: &CVector, v: &CVector) -> f64 {
        row.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<C64>().re
    }

    pub(crate) fn state_at(&self, t: f64) -> Result<CVector> {
        Ok(propagator(&self.l0, t)? * &self.start)
    }

    pub(crate) fn survival(&self, t: f64) -> Result<f64> {
        Ok(Self::dot(&self.trace_row, &self.state_at(t)?))
    }

    pub(crate) fn survival_of(&self, v: &CVector) -> f64 {
        Self::dot(&self.trace_row, v)
    }

    fn density_of(&self, v: &CVector) -> f64 {
        Self::dot(&self.tick_row, v)
    }

    pub(crate) fn start(&self) -> &CVector {
        &self.start
    }

    pub(crate) fn step(&self, dt: f64) -> Result<CMatrix> {
        propagator(&self.l0, dt)
    }

    /// Smallest doubling of `10 / decay` at which survival drops below `level`.
    fn time_until(&self, level: f64) -> Result<f64> {
        let mut t = 10.0 / self.decay;
        let cap = 1e4 / self.decay;
        while self.survival(t)? >= level {
            if t > cap {
                return Err(Error::Integration(format!("survival stays above {level:e} up to t = {t:e}")));
            }
            t *= 2.0;
        }
        Ok(t)
    }
}

pub fn waiting_time(spec: &ClockSpec, reset: &CMatrix, grid: &[f64]) -> Result<WaitingTimeDistribution> {
    let dyn_ = NoTickDynamics::new(spec, reset)?;
    let t_end = dyn_.time_until(QUADRATURE_SURVIVAL)?;

    let f = |lo: f64, nodes: &[f64; 15]| -> Result<[[f64; 3]; 15]> {
        let base = dyn_.state_at(lo)?;
        let mut out = [[0.0; 3]; 15];
        for (k, &t) in nodes.iter().enumerate() {
            let v = dyn_.step(t - lo)? * &base;
            let w = dyn_.density_of(&v);
            out[k] = [w, t * w, t * t * w];
        }
        Ok(out)
    };
    let m = integrate(f, 0.0, t_end, 32, QUAD_REL_TOL, 1e-300)?;
    // beyond t_end the density decays at the slowest rate of the no-tick generator
    let s_end = dyn_.survival(t_end)?.max(0.0);
    let a = dyn_.decay;
    let tail = [s_end, s_end * (t_end + 1.0 / a), s_end * (t_end * t_end + 2.0 * t_end / a + 2.0 / (a * a))];
    let mass = m[0] + tail[0];
    if mass < 1.0 - DARK_MASS_TOL {
        return Err(Error::DarkState { mass });
    }
    let m1 = (m[1] + tail[1]) / mass;
    let m2 = (m[2] + tail[2]) / mass;
    let sigma2 = m2 - m1 * m1;

    let grid = extend_grid(&dyn_, grid)?;
    let density = tabulate(&dyn_, &grid)?;
    Ok(WaitingTimeDistribution { grid, density, mu: m1, sigma2, r2: m1 * m1 / sigma2, mass })
}

fn extend_grid(dyn_: &NoTickDynamics, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Precondition("grid must be finite, nonnegative and nondecreasing".into()));
    }
    let t_tail = dyn_.time_until(GRID_TAIL)?;
    let mut out = grid.to_vec();
    if out.is_empty() {
        return Ok((0..=400).map(|k| t_tail * k as f64 / 400.0).collect());
    }
    let last = *out.last().expect("nonempty");
    if dyn_.survival(last)? < GRID_TAIL {
        return Ok(out);
    }
    let spacing = if out.len() >= 2 { out[out.len() - 1] - out[out.len() - 2] } else { 0.0 };
    let step = spacing.max((t_tail - last) / 1000.0);
    let mut t = last;
    loop {
        t += step;
        out.push(t);
        if t >= t_tail && dyn_.survival(t)? < GRID_TAIL {
            break;
        }
    }
    Ok(out)
}

fn tabulate(dyn_: &NoTickDynamics, grid: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.len());
    let mut t = 0.0;
    let mut v = dyn_.start().clone();
    for &g in grid {
        if g > t {
            v = dyn_.step(g - t)? * v;
            t = g;
        }
        out.push(dyn_.density_of(&v));
    }
    Ok(out)
}

/// Probability that the first tick falls in `[jδ, (j+1)δ)`, for `j < k`.
pub fn binned_waiting_time(spec: &ClockSpec, reset: &CMatrix, delta: f64, k: usize) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("bin width {delta} must be positive")));
    }
    let dyn_ = NoTickDynamics::new(spec, reset)?;
    let step = dyn_.step(delta)?;
    let mut v = dyn_.start().clone();
    let mut prev = dyn_.survival_of(&v);
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        v = &step * v;
        let s = dyn_.survival_of(&v);
        out.push(prev - s);
        prev = s;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionReport {
    pub r1: f64,
    pub r2: f64,
    pub nu_mu: f64,
    pub sigma_ratio: f64,
}

pub const NU_MU_TOL: f64 = 1e-6;
pub const SIGMA_RATIO_TOL: f64 = 1e-5;
pub const R_RATIO_TOL: f64 = 1e-5;

/// Compares counting-statistics rates with waiting-time moments:
/// `ν μ = 1`, `Σ μ³ / σ² = 1` and `R₁ = R₂`.
pub fn check_precision_identity(spec: &ClockSpec, reset: &CMatrix) -> Result<PrecisionReport> {
    let rates = fcs_rates(spec, RateMethod::EigDerivative)?;
    let w = waiting_time(spec, reset, &[])?;
    let report = PrecisionReport {
        r1: rates.r1,
        r2: w.r2,
        nu_mu: rates.nu * w.mu,
        sigma_ratio: rates.sigma_rate * w.mu.powi(3) / w.sigma2,
    };
    let mut failures = Vec::new();
    if (report.nu_mu - 1.0).abs() >= NU_MU_TOL {
        failures.push(format!("nu*mu = {}", report.nu_mu));
    }
    if (report.sigma_ratio - 1.0).abs() >= SIGMA_RATIO_TOL {
        failures.push(format!("Sigma*mu^3/sigma^2 = {}", report.sigma_ratio));
    }
    if (report.r1 / report.r2 - 1.0).abs() >= R_RATIO_TOL {
        failures.push(format!("R1/R2 = {}", report.r1 / report.r2));
    }
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(Error::IdentityFailure(failures.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock_model::JumpTerm;
    use crate::numerics::matrix::ket_bra;

    #[test]
    fn poisson_waiting_time() {
        let spec = ClockSpec::poisson(2.0);
        let w = waiting_time(&spec, &spec.initial, &[0.0, 0.5, 1.0]).unwrap();
        assert!((w.mu - 0.5).abs() < 1e-9);
        assert!((w.sigma2 - 0.25).abs() < 1e-9);
        assert!((w.r2 - 1.0).abs() < 1e-8);
        assert!((w.density[1] - 2.0 * (-1.0f64).exp()).abs() < 1e-12);
        let last = *w.grid.last().unwrap();
        assert!((-2.0 * last).exp() < GRID_TAIL);
    }

    #[test]
    fn erlang_three_moments() {
        let g = 1.7;
        let spec = ClockSpec::erlang(3, g);
        let w = waiting_time(&spec, &spec.initial, &[]).unwrap();
        assert!((w.mu - 3.0 / g).abs() < 1e-9);
        assert!((w.sigma2 - 3.0 / (g * g)).abs() < 1e-9);
        assert!((w.r2 - 3.0).abs() < 1e-8);
    }

    #[test]
    fn trapped_population_is_a_dark_state() {
        // level 1 is reachable but never ticks
        let spec = ClockSpec::new(
            CMatrix::zeros(2, 2),
            vec![JumpTerm::new(1, 1.0, ket_bra(2, 0, 0)), JumpTerm::new(0, 1.0, ket_bra(2, 1, 0))],
            ket_bra(2, 0, 0),
        )
        .unwrap();
        match waiting_time(&spec, &spec.initial, &[]) {
            Err(Error::DarkState { mass }) => assert!((mass - 0.5).abs() < 1e-6, "{mass}"),
            other => panic!("expected dark state, got {other:?}"),
        }
    }

    #[test]
    fn unreachable_dark_level_is_tolerated() {
        let spec =
            ClockSpec::new(CMatrix::zeros(2, 2), vec![JumpTerm::new(1, 1.0, ket_bra(2, 0, 0))], ket_bra(2, 0, 0))
                .unwrap();
        let w = waiting_time(&spec, &spec.initial, &[]).unwrap();
        assert!((w.mu - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_elementary_spec_is_rejected() {
        let mut spec = ClockSpec::poisson(1.0);
        spec.jumps.push(JumpTerm::new(-1, 0.1, ket_bra(1, 0, 0)));
        assert!(matches!(waiting_time(&spec, &spec.initial, &[]), Err(Error::Precondition(_))));
    }

    #[test]
    fn bins_of_exponential() {
        let spec = ClockSpec::poisson(1.0);
        let bins = binned_waiting_time(&spec, &spec.initial, 0.1, 3).unwrap();
        for (j, p) in bins.iter().enumerate() {
            let want = (-0.1 * j as f64).exp() - (-0.1 * (j + 1) as f64).exp();
            assert!((p - want).abs() < 1e-14);
        }
    }
}
