//! Salecker–Wigner–Peres clock: `H = Σₙ nω|n⟩⟨n|` on `C^d`.
//!
//! The angle states `|θ_k⟩ = d^{-1/2} Σₙ e^{-2πink/d}|n⟩` are carried into
//! each other every `2π/(ωd)`. The shifted basis `|λ_l⟩` uses `l + α` in
//! place of `k`, and the POVM `{½|θ_k⟩⟨θ_k|, ½|λ_l⟩⟨λ_l|}` registers
//! arrivals at the intermediate times `2π(l + α)/(ωd)` as well.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::matrix::{c, identity, max_abs, zeros, CMatrix, CVector, C64};

/// Timeline samples per tick interval `2π/(ωd)`.
pub const TIMELINE_SAMPLES_PER_TICK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwpConfig {
    pub dim: usize,
    pub omega: f64,
    pub alphas: Vec<f64>,
}

impl SwpConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.dim < 2 {
            problems.push(format!("dim {} must be at least 2", self.dim));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            problems.push(format!("omega {} must be positive", self.omega));
        }
        for (k, a) in self.alphas.iter().enumerate() {
            if !(0.0..1.0).contains(a) {
                problems.push(format!("alphas[{k}] = {a} must lie in [0, 1)"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn tick(&self) -> f64 {
        2.0 * PI / (self.omega * self.dim as f64)
    }
}

/// `d^{-1/2} Σₙ e^{-2πin·x/d}|n⟩`; `x = k` gives `|θ_k⟩`, `x = l + α` gives `|λ_l⟩`.
pub fn angle_state(d: usize, x: f64) -> CVector {
    let norm = 1.0 / (d as f64).sqrt();
    CVector::from_fn(d, |n, _| C64::from_polar(norm, -2.0 * PI * n as f64 * x / d as f64))
}

/// `e^{-iHt}|ψ⟩`.
pub fn evolve(omega: f64, psi: &CVector, t: f64) -> CVector {
    CVector::from_fn(psi.len(), |n, _| psi[n] * C64::from_polar(1.0, -(n as f64) * omega * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Arrival {
    pub l: usize,
    pub time: f64,
    /// `⟨ψ(t)|½|λ_l⟩⟨λ_l||ψ(t)⟩` with `ψ(0) = θ₀`.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimelinePoint {
    pub time: f64,
    /// Outcome probabilities for the `½|θ_k⟩⟨θ_k|` elements.
    pub theta: Vec<f64>,
    /// Outcome probabilities for the `½|λ_l⟩⟨λ_l|` elements.
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaReport {
    pub alpha: f64,
    pub gram_residual: f64,
    pub povm_residual: f64,
    pub arrivals: Vec<Arrival>,
    pub timeline: Vec<TimelinePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwpReport {
    pub config: SwpConfig,
    /// `|⟨θ_{k+1}|U(2π/ωd)|θ_k⟩|` for `k = 0..d`.
    pub overlaps: Vec<f64>,
    pub alphas: Vec<AlphaReport>,
}

impl SwpReport {
    pub fn worst_overlap_defect(&self) -> f64 {
        self.overlaps.iter().map(|o| (o - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

fn half_weight(basis: &CVector, psi: &CVector) -> f64 {
    0.5 * basis.dotc(psi).norm_sqr()
}

pub fn swp_demo(cfg: &SwpConfig) -> Result<SwpReport> {
    cfg.validate()?;
    let d = cfg.dim;
    let tick = cfg.tick();
    let thetas: Vec<CVector> = (0..d).map(|k| angle_state(d, k as f64)).collect();
    let overlaps = (0..d).map(|k| thetas[(k + 1) % d].dotc(&evolve(cfg.omega, &thetas[k], tick)).norm()).collect();
    let theta_sum = thetas.iter().fold(zeros(d, d), |acc, t| acc + outer(t));
    let samples = TIMELINE_SAMPLES_PER_TICK * d;
    let alphas = cfg
        .alphas
        .iter()
        .map(|&alpha| {
            let lambdas: Vec<CVector> = (0..d).map(|l| angle_state(d, l as f64 + alpha)).collect();
            let gram = CMatrix::from_fn(d, d, |i, j| lambdas[i].dotc(&lambdas[j]));
            let lambda_sum = lambdas.iter().fold(zeros(d, d), |acc, l| acc + outer(l));
            let povm = (&theta_sum + lambda_sum) * c(0.5, 0.0);
            let arrivals = (0..d)
                .map(|l| {
                    let time = tick * (l as f64 + alpha);
                    let psi = evolve(cfg.omega, &thetas[0], time);
                    Arrival { l, time, probability: half_weight(&lambdas[l], &psi) }
                })
                .collect();
            let timeline = (0..samples)
                .map(|s| {
                    let time = tick * d as f64 * s as f64 / samples as f64;
                    let psi = evolve(cfg.omega, &thetas[0], time);
                    TimelinePoint {
                        time,
                        theta: thetas.iter().map(|t| half_weight(t, &psi)).collect(),
                        lambda: lambdas.iter().map(|l| half_weight(l, &psi)).collect(),
                    }
                })
                .collect();
            AlphaReport {
                alpha,
                gram_residual: max_abs(&(gram - identity(d))),
                povm_residual: max_abs(&(povm - identity(d))),
                arrivals,
                timeline,
            }
        })
        .collect();
    Ok(SwpReport { config: cfg.clone(), overlaps, alphas })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_states_step_forward() {
        let r = swp_demo(&SwpConfig { dim: 5, omega: 1.3, alphas: vec![] }).unwrap();
        assert!(r.worst_overlap_defect() < 1e-12);
    }

    #[test]
    fn half_step_arrival_at_dimension_four() {
        let r = swp_demo(&SwpConfig { dim: 4, omega: 1.0, alphas: vec![0.5] }).unwrap();
        let a = &r.alphas[0];
        assert!((a.arrivals[0].time - PI / 4.0).abs() < 1e-15);
        assert!((a.arrivals[0].probability - 0.5).abs() < 1e-12);
        assert!(a.gram_residual < 1e-12 && a.povm_residual < 1e-12);
        assert_eq!(a.timeline.len(), 32);
        let total: f64 = a.timeline[3].theta.iter().chain(&a.timeline[3].lambda).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_config_rejected() {
        assert!(swp_demo(&SwpConfig { dim: 1, omega: 1.0, alphas: vec![] }).is_err());
        assert!(swp_demo(&SwpConfig { dim: 3, omega: 1.0, alphas: vec![1.0] }).is_err());
    }
}
