//! Measurement disturbance of coherent register dynamics.
//!
//! A qubit whose basis states are two register values is rotated by
//! `H = (Ω/2)σₓ` and the register is read projectively at a list of times.
//! Frequent readout freezes the register. Clocks whose states stay
//! block-diagonal in the register are not affected by readout at all.

use serde::Serialize;

use crate::clock_model::{require_elementary, ClockSpec};
use crate::error::{Error, Result};
use crate::evolution::{ClockState, FullSpaceModel};
use crate::numerics::matrix::{c, frobenius, identity, is_hermitian, ket_bra, kron, zeros, CMatrix};
use crate::numerics::{matrix_exponential, RandomStream};

/// Largest system or environment factor accepted by [`ZenoModel::with_environment`].
pub const MAX_FACTOR_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Schedule {
    /// Readouts at `kT/m`, `k = 1..=m`.
    Fixed,
    /// Each fixed time moved by a uniform offset in `[-width/2, width/2]`,
    /// clipped to `[0, T]`.
    Jittered { width: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoConfig {
    pub rabi_frequency: f64,
    pub total_time: f64,
    pub measurement_counts: Vec<usize>,
    pub schedule: Schedule,
    pub seed: u64,
}

impl ZenoConfig {
    pub fn fixed(rabi_frequency: f64, total_time: f64, measurement_counts: Vec<usize>) -> Self {
        ZenoConfig { rabi_frequency, total_time, measurement_counts, schedule: Schedule::Fixed, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.rabi_frequency > 0.0 && self.rabi_frequency.is_finite()) {
            problems.push(format!("rabi_frequency {} must be positive", self.rabi_frequency));
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            problems.push(format!("total_time {} must be positive", self.total_time));
        }
        if let Schedule::Jittered { width } = self.schedule {
            if !(width >= 0.0 && width.is_finite()) {
                problems.push(format!("jitter width {width} must be finite and >= 0"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Readout times for `m` measurements, ascending.
    pub fn times(&self, m: usize) -> Vec<f64> {
        let t = self.total_time;
        let mut times: Vec<f64> = (1..=m).map(|k| t * k as f64 / m as f64).collect();
        if let Schedule::Jittered { width } = self.schedule {
            let mut rng = RandomStream::split(self.seed, m as u64);
            for x in &mut times {
                *x = (*x + width * (rng.uniform() - 0.5)).clamp(0.0, t);
            }
            times.sort_by(f64::total_cmp);
        }
        times
    }
}

/// Hamiltonian, register projectors and initial state on a common space.
#[derive(Debug, Clone)]
pub struct ZenoModel {
    pub hamiltonian: CMatrix,
    pub projectors: Vec<CMatrix>,
    pub initial: CMatrix,
}

impl ZenoModel {
    /// Register values `n ∈ {0, 1}`, one clockwork state each, starting at `n = 0`.
    pub fn qubit(rabi_frequency: f64) -> Self {
        let half = rabi_frequency / 2.0;
        let hamiltonian = (ket_bra(2, 0, 1) + ket_bra(2, 1, 0)) * c(half, 0.0);
        ZenoModel { hamiltonian, projectors: vec![ket_bra(2, 0, 0), ket_bra(2, 1, 1)], initial: ket_bra(2, 0, 0) }
    }

    /// System ⊗ environment: register `n` is system basis state `n`, and the
    /// readout projectors `|n⟩⟨n| ⊗ 𝟙_E` act on the system factor only.
    pub fn with_environment(hamiltonian: CMatrix, system_dim: usize, env_dim: usize, initial: CMatrix) -> Result<Self> {
        if system_dim == 0 || env_dim == 0 || system_dim > MAX_FACTOR_DIM || env_dim > MAX_FACTOR_DIM {
            return Err(Error::Dimension(format!("factors {system_dim} x {env_dim} must lie in 1..={MAX_FACTOR_DIM}")));
        }
        let d = system_dim * env_dim;
        if hamiltonian.shape() != (d, d) || initial.shape() != (d, d) {
            return Err(Error::Dimension(format!("operators must be {d}x{d}")));
        }
        if !is_hermitian(&hamiltonian, 1e-12) {
            return Err(Error::Validation(vec!["hamiltonian is not Hermitian".into()]));
        }
        let projectors = (0..system_dim).map(|n| kron(&ket_bra(system_dim, n, n), &identity(env_dim))).collect();
        Ok(ZenoModel { hamiltonian, projectors, initial })
    }

    fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoPoint {
    pub m: usize,
    /// Probability that every readout, including one at `T`, finds `n = 0`.
    pub survival: f64,
    /// `cos^{2m}(ΩT/2m)` for the fixed schedule of the qubit model.
    pub closed_form: Option<f64>,
    /// `P(n = 0)` at `T` after non-selective readouts.
    pub p0: f64,
    /// `⟨n⟩` at `T` after non-selective readouts.
    pub mean_register: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoReport {
    pub config: ZenoConfig,
    pub points: Vec<ZenoPoint>,
}

fn propagate(u_cache: &mut Vec<(f64, CMatrix)>, model: &ZenoModel, dt: f64) -> Result<CMatrix> {
    if let Some((_, u)) = u_cache.iter().find(|(t, _)| *t == dt) {
        return Ok(u.clone());
    }
    let u = matrix_exponential(&(&model.hamiltonian * c(0.0, -1.0)), dt)?;
    u_cache.push((dt, u.clone()));
    Ok(u)
}

fn run_schedule(model: &ZenoModel, times: &[f64], total_time: f64) -> Result<(f64, f64, f64)> {
    let mut readouts = times.to_vec();
    if readouts.last().map_or(true, |&t| t < total_time) {
        readouts.push(total_time);
    }
    let mut cache = Vec::new();
    let p0 = &model.projectors[0];
    let mut selective = model.initial.clone();
    let mut averaged = model.initial.clone();
    let mut now = 0.0;
    for &t in &readouts {
        let u = propagate(&mut cache, model, t - now)?;
        now = t;
        selective = p0 * (&u * &selective * u.adjoint()) * p0;
        let rotated = &u * &averaged * u.adjoint();
        let mut next = zeros(model.dim(), model.dim());
        for p in &model.projectors {
            next += p * &rotated * p;
        }
        averaged = next;
    }
    let weights: Vec<f64> = model.projectors.iter().map(|p| (p * &averaged).trace().re).collect();
    let mean = weights.iter().enumerate().map(|(n, w)| n as f64 * w).sum();
    Ok((selective.trace().re, weights[0], mean))
}

pub fn zeno_experiment(cfg: &ZenoConfig) -> Result<ZenoReport> {
    cfg.validate()?;
    let model = ZenoModel::qubit(cfg.rabi_frequency);
    let mut report = zeno_with_model(&model, cfg)?;
    if cfg.schedule == Schedule::Fixed {
        let angle = cfg.rabi_frequency * cfg.total_time / 2.0;
        for p in &mut report.points {
            let m = p.m.max(1) as i32;
            p.closed_form = Some((angle / m as f64).cos().powi(2 * m));
        }
    }
    Ok(report)
}

/// Same protocol on an arbitrary model; `rabi_frequency` only enters
/// through the schedule.
pub fn zeno_with_model(model: &ZenoModel, cfg: &ZenoConfig) -> Result<ZenoReport> {
    cfg.validate()?;
    let points = cfg
        .measurement_counts
        .iter()
        .map(|&m| {
            let (survival, p0, mean_register) = run_schedule(model, &cfg.times(m), cfg.total_time)?;
            Ok(ZenoPoint { m, survival, closed_form: None, p0, mean_register })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ZenoReport { config: cfg.clone(), points })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisturbanceReport {
    /// Largest `‖D(ρ_t) − ρ_t‖_F` at the readout times.
    pub dephasing_residual: f64,
    /// Largest `|p_{n|t}` with readouts `− p_{n|t}` without readouts|.
    pub distribution_residual: f64,
}

/// Reads the register of an elementary clock non-selectively at `times`
/// and compares with the unread evolution over the same segments.
pub fn measurement_disturbance(spec: &ClockSpec, n_max: usize, times: &[f64]) -> Result<DisturbanceReport> {
    require_elementary(spec, "measurement disturbance")?;
    let mut sorted = times.to_vec();
    if sorted.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::Precondition("readout times must be finite and >= 0".into()));
    }
    sorted.sort_by(f64::total_cmp);
    let model = FullSpaceModel::new(spec, n_max)?;
    let mut read = model.embed(&ClockState::from_spec(spec, n_max));
    let mut free = read.clone();
    let mut now = 0.0;
    let mut report = DisturbanceReport { dephasing_residual: 0.0, distribution_residual: 0.0 };
    for &t in &sorted {
        read = model.evolve(&read, t - now)?;
        free = model.evolve(&free, t - now)?;
        now = t;
        let after = model.dephase(&read);
        report.dephasing_residual = report.dephasing_residual.max(frobenius(&(&after - &read)));
        read = after;
        let gap = model
            .register_weights(&read)
            .iter()
            .zip(model.register_weights(&free))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.distribution_residual = report.distribution_residual.max(gap);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn no_readout_is_a_rabi_flop() {
        let r = zeno_experiment(&ZenoConfig::fixed(1.0, 1.3, vec![0])).unwrap();
        assert!((r.points[0].survival - (0.65f64).cos().powi(2)).abs() < 1e-14);
        let r = zeno_experiment(&ZenoConfig::fixed(2.0, PI / 2.0, vec![0])).unwrap();
        assert!(r.points[0].survival < 1e-20);
    }

    #[test]
    fn survival_matches_closed_form() {
        let r = zeno_experiment(&ZenoConfig::fixed(1.0, PI, (1..=16).collect())).unwrap();
        for p in &r.points {
            let exact = (PI / (2.0 * p.m as f64)).cos().powi(2 * p.m as i32);
            assert!((p.survival - exact).abs() < 1e-12, "m = {}", p.m);
        }
        assert!((r.points[3].survival - (PI / 8.0).cos().powi(8)).abs() < 1e-12);
    }

    #[test]
    fn nonselective_readout_mixes() {
        let r = zeno_experiment(&ZenoConfig::fixed(1.0, PI, vec![2])).unwrap();
        assert!((r.points[0].p0 - 0.5).abs() < 1e-12);
        assert!((r.points[0].mean_register - 0.5).abs() < 1e-12);
    }

    #[test]
    fn jitter_is_reproducible() {
        let cfg =
            ZenoConfig { schedule: Schedule::Jittered { width: 0.1 }, seed: 3, ..ZenoConfig::fixed(1.0, PI, vec![8]) };
        assert_eq!(cfg.times(8), cfg.times(8));
        assert_ne!(cfg.times(8), ZenoConfig::fixed(1.0, PI, vec![8]).times(8));
    }

    #[test]
    fn trivial_environment_changes_nothing() {
        let q = ZenoModel::qubit(1.0);
        let env = ZenoModel::with_environment(
            kron(&q.hamiltonian, &identity(2)),
            2,
            2,
            kron(&q.initial, &(identity(2) / c(2.0, 0.0))),
        )
        .unwrap();
        let cfg = ZenoConfig::fixed(1.0, PI, vec![3]);
        let a = zeno_with_model(&q, &cfg).unwrap();
        let b = zeno_with_model(&env, &cfg).unwrap();
        assert!((a.points[0].survival - b.points[0].survival).abs() < 1e-12);
    }

    #[test]
    fn poisson_clock_ignores_readout() {
        let times: Vec<f64> = (1..=20).map(|k| 0.37 * k as f64).collect();
        let r = measurement_disturbance(&ClockSpec::poisson(1.0), 16, &times).unwrap();
        assert!(r.dephasing_residual < 1e-12);
        assert!(r.distribution_residual < 1e-12);
    }
}
