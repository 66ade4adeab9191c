//! Fixed-step picture: each interval of length `δ` writes one bit recording
//! whether the clock ticked.
//!
//! A step is a two-outcome instrument `(m0, m1)` on the clockwork. Intervals
//! with more than one tick are lumped into the `1` outcome.

use serde::Serialize;

use crate::clock_model::{require_elementary, ClockSpec};
use crate::error::{Error, Result};
use crate::evolution::{max_rate, ShiftDecomposition};
use crate::numerics::matrix::CMatrix;
use crate::numerics::{matrix_exponential, vectorize, SuperOperator};

/// `δ · max_rate` must stay below this for the first-order step.
pub const STABILITY_LIMIT: f64 = 0.5;

/// Untracked probability allowed after the last slot.
pub const COVERAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StepOrder {
    First,
    Exact,
}

#[derive(Debug, Clone)]
pub struct DiscreteStep {
    pub delta: f64,
    pub order: StepOrder,
    pub m0: SuperOperator,
    pub m1: SuperOperator,
}

/// First order: `m0 = 𝟙 + δ𝓛₀`, `m1 = δ𝓛₊`. Exact: `m0 = e^{δ𝓛₀}` and
/// `m1 = e^{δ𝓛} − e^{δ𝓛₀}`.
pub fn build_step(spec: &ClockSpec, delta: f64, order: StepOrder) -> Result<DiscreteStep> {
    require_elementary(spec, "discrete steps")?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Precondition(format!("step {delta} must be positive")));
    }
    let dec = ShiftDecomposition::new(spec);
    let (m0, m1) = match order {
        StepOrder::First => {
            let scale = delta * max_rate(spec);
            if scale >= STABILITY_LIMIT {
                return Err(Error::Stability(format!("delta * max_rate = {scale} must be below {STABILITY_LIMIT}")));
            }
            (SuperOperator::identity(spec.dim) + dec.l0.clone() * delta, dec.part(1) * delta)
        }
        StepOrder::Exact => {
            let d = spec.dim;
            let no_tick = SuperOperator::from_matrix(d, matrix_exponential(dec.l0.matrix(), delta)?)?;
            let all = SuperOperator::from_matrix(d, matrix_exponential(dec.tilted(0.0).matrix(), delta)?)?;
            let tick = &all - &no_tick;
            (no_tick, tick)
        }
    };
    Ok(DiscreteStep { delta, order, m0, m1 })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitString {
    pub bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        BitString { bits }
    }

    /// `Tr[m_{b_k} ∘ … ∘ m_{b_1}(ρ)]`.
    pub fn probability(&self, step: &DiscreteStep, rho: &CMatrix) -> f64 {
        let mut x = rho.clone();
        for &b in &self.bits {
            x = if b { step.m1.apply(&x) } else { step.m0.apply(&x) };
        }
        x.trace().re
    }
}

/// `P(first 1 at slot j)` for `j = 1..=k`, i.e. `Tr[m1 ∘ m0^{j−1}(ρ)]`.
pub fn bitstring_distribution(step: &DiscreteStep, reset: &CMatrix, k: usize) -> Result<Vec<f64>> {
    let d = step.m0.dim();
    if reset.shape() != (d, d) {
        return Err(Error::Dimension(format!("reset state is {:?}, step acts on dimension {d}", reset.shape())));
    }
    let m0 = step.m0.matrix();
    let m1 = step.m1.matrix();
    let trace_of = |v: &crate::numerics::CVector| (0..d).map(|i| v[i + d * i]).sum::<crate::numerics::C64>().re;
    let mut v = vectorize(reset);
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        out.push(trace_of(&(m1 * &v)));
        v = m0 * v;
    }
    let remaining = trace_of(&v);
    if remaining > COVERAGE_TOL {
        return Err(Error::Horizon(format!(
            "{k} steps of {} leave probability {remaining:e} without a tick",
            step.delta
        )));
    }
    Ok(out)
}

/// Total-variation distance; the shorter input is padded with zeros.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n).map(|i| (p.get(i).copied().unwrap_or(0.0) - q.get(i).copied().unwrap_or(0.0)).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::{ket_bra, max_abs};
    use crate::statistics::binned_waiting_time;

    #[test]
    fn poisson_tick_probabilities() {
        let spec = ClockSpec::poisson(2.0);
        let delta = 0.01;
        let first = build_step(&spec, delta, StepOrder::First).unwrap();
        let exact = build_step(&spec, delta, StepOrder::Exact).unwrap();
        assert!((first.m1.apply(&spec.initial).trace().re - 2.0 * delta).abs() < 1e-15);
        assert!((exact.m1.apply(&spec.initial).trace().re - (1.0 - (-2.0 * delta).exp())).abs() < 1e-15);
    }

    #[test]
    fn first_order_step_is_an_instrument() {
        let spec = ClockSpec::coherent_two_level(1.0, 0.8);
        let s = build_step(&spec, 0.05, StepOrder::First).unwrap();
        let sum = &s.m0 + &s.m1;
        assert!(sum.trace_preservation_defect() < 1e-12);
        assert!(s.m1.is_completely_positive(1e-10));
    }

    #[test]
    fn large_step_is_unstable() {
        assert!(matches!(build_step(&ClockSpec::poisson(1.0), 0.6, StepOrder::First), Err(Error::Stability(_))));
    }

    #[test]
    fn exact_poisson_pmf_is_the_binned_exponential() {
        let spec = ClockSpec::poisson(1.0);
        let delta = 0.05;
        let step = build_step(&spec, delta, StepOrder::Exact).unwrap();
        let pmf = bitstring_distribution(&step, &spec.initial, 400).unwrap();
        let p = 1.0 - (-delta).exp();
        for (j, q) in pmf.iter().enumerate() {
            assert!((q - p * (1.0 - p).powi(j as i32)).abs() < 1e-14);
        }
        let bins = binned_waiting_time(&spec, &spec.initial, delta, 400).unwrap();
        assert!(tv_distance(&pmf, &bins) < 1e-10);
    }

    #[test]
    fn first_order_error_is_quadratic_in_delta() {
        let spec = ClockSpec::erlang(3, 1.0);
        let err = |delta: f64| {
            let first = build_step(&spec, delta, StepOrder::First).unwrap();
            let exact = build_step(&spec, delta, StepOrder::Exact).unwrap();
            max_abs(&(exact.m0.matrix() - first.m0.matrix()))
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn bit_outcomes_are_normalized() {
        let spec = ClockSpec::erlang(2, 1.0);
        let step = build_step(&spec, 0.1, StepOrder::First).unwrap();
        let k = 6;
        let total: f64 = (0..1u32 << k)
            .map(|mask| BitString::new((0..k).map(|i| mask >> i & 1 == 1).collect()).probability(&step, &spec.initial))
            .sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reset_state_off_the_ticking_level() {
        let spec = ClockSpec::erlang(3, 1.0);
        let step = build_step(&spec, 0.01, StepOrder::First).unwrap();
        let m1 = step.m1.apply(&ket_bra(3, 0, 0));
        assert_eq!(m1.trace().re, 0.0);
    }

    #[test]
    fn short_horizon_is_reported() {
        let spec = ClockSpec::poisson(1.0);
        let step = build_step(&spec, 0.1, StepOrder::First).unwrap();
        assert!(matches!(bitstring_distribution(&step, &spec.initial, 10), Err(Error::Horizon(_))));
    }
}
