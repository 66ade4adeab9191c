//! Clock definitions and the structural checks that classify them.
//!
//! A [`ClockSpec`] is an elementary-form clock: one clockwork Hamiltonian and a
//! list of jump terms, each tagged with the register shift it causes. Rates are
//! kept separate from operators in the public type; internally every term acts
//! through `sqrt(rate) * op` (see [`JumpTerm::scaled_op`]).
//!
//! [`GeneralClockSpec`] describes a clock whose register indices label distinct
//! clockwork blocks; [`validate_general`] checks that the generator respects the
//! block structure.

mod general;
pub mod io;

pub use general::{validate_general, BlockJump, GeneralClockSpec, GeneralJump, GeneralValidation};
pub use io::{load_spec, parse_spec, save_spec, to_canonical_json, LoadedSpec};

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::matrix::{c, is_hermitian, is_psd, ket_bra, max_abs, zeros, CMatrix, ONE};

/// Absolute max-norm tolerances for structural checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub hermitian: f64,
    pub psd: f64,
    pub trace: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { hermitian: 1e-12, psd: 1e-12, trace: 1e-12 }
    }
}

impl ToleranceConfig {
    pub fn uniform(tol: f64) -> Self {
        ToleranceConfig { hermitian: tol, psd: tol, trace: tol }
    }
}

/// One Lindblad term `rate * D[op]` that shifts the register by `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTerm {
    pub delta: i32,
    pub rate: f64,
    pub op: CMatrix,
}

impl JumpTerm {
    pub fn new(delta: i32, rate: f64, op: CMatrix) -> Self {
        JumpTerm { delta, rate, op }
    }

    /// `sqrt(rate) * op`, the operator that enters the dissipator.
    pub fn scaled_op(&self) -> CMatrix {
        &self.op * c(self.rate.sqrt(), 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockSpec {
    pub dim: usize,
    pub hamiltonian: CMatrix,
    pub jumps: Vec<JumpTerm>,
    pub initial: CMatrix,
    pub labels: Option<Vec<String>>,
}

impl ClockSpec {
    /// Builds a spec and rejects it if any structural invariant fails.
    pub fn new(hamiltonian: CMatrix, jumps: Vec<JumpTerm>, initial: CMatrix) -> Result<Self> {
        let spec = ClockSpec { dim: hamiltonian.nrows(), hamiltonian, jumps, initial, labels: None };
        let problems = spec.violations(&ToleranceConfig::default());
        if problems.is_empty() {
            Ok(spec)
        } else {
            Err(Error::Validation(problems))
        }
    }

    /// Single-level clockwork ticking at `rate`.
    pub fn poisson(rate: f64) -> Self {
        ClockSpec {
            dim: 1,
            hamiltonian: zeros(1, 1),
            jumps: vec![JumpTerm::new(1, rate, CMatrix::from_element(1, 1, ONE))],
            initial: CMatrix::from_element(1, 1, ONE),
            labels: None,
        }
    }

    /// `d`-level ladder: internal hops `k -> k+1` at `rate`, then a tick that
    /// resets the clockwork to level 0. Waiting times are Erlang(d, rate).
    pub fn erlang(d: usize, rate: f64) -> Self {
        assert!(d >= 1, "ladder needs at least one level");
        let mut jumps: Vec<JumpTerm> = (0..d - 1).map(|k| JumpTerm::new(0, rate, ket_bra(d, k + 1, k))).collect();
        jumps.push(JumpTerm::new(1, rate, ket_bra(d, 0, d - 1)));
        ClockSpec { dim: d, hamiltonian: zeros(d, d), jumps, initial: ket_bra(d, 0, 0), labels: None }
    }

    /// Driven two-level clockwork `H = omega * sigma_x` that ticks by decaying
    /// from the excited level back to the ground level at `rate`.
    pub fn coherent_two_level(omega: f64, rate: f64) -> Self {
        let h = CMatrix::from_fn(2, 2, |i, j| if i != j { c(omega, 0.0) } else { c(0.0, 0.0) });
        ClockSpec {
            dim: 2,
            hamiltonian: h,
            jumps: vec![JumpTerm::new(1, rate, ket_bra(2, 0, 1))],
            initial: ket_bra(2, 0, 0),
            labels: Some(vec!["ground".into(), "excited".into()]),
        }
    }

    /// From level 0 the clock either ticks directly at `fast` or switches at
    /// `switch` into a slow lane (level 1) that ticks at `slow`. Every tick
    /// returns the clockwork to level 0.
    pub fn branching(fast: f64, switch: f64, slow: f64) -> Self {
        ClockSpec {
            dim: 2,
            hamiltonian: zeros(2, 2),
            jumps: vec![
                JumpTerm::new(1, fast, ket_bra(2, 0, 0)),
                JumpTerm::new(0, switch, ket_bra(2, 1, 0)),
                JumpTerm::new(1, slow, ket_bra(2, 0, 1)),
            ],
            initial: ket_bra(2, 0, 0),
            labels: Some(vec!["fast".into(), "slow".into()]),
        }
    }

    pub fn with_initial(mut self, initial: CMatrix) -> Self {
        self.initial = initial;
        self
    }

    /// Same clock running `factor` times faster: every rate and the Hamiltonian
    /// are multiplied by `factor`.
    pub fn time_scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.hamiltonian = &self.hamiltonian * c(factor, 0.0);
        for j in &mut out.jumps {
            j.rate *= factor;
        }
        out
    }

    /// Distinct register shifts present in the jump list.
    pub fn shifts(&self) -> BTreeSet<i32> {
        self.jumps.iter().map(|j| j.delta).collect()
    }

    /// Human-readable list of every violated structural invariant.
    pub fn violations(&self, tol: &ToleranceConfig) -> Vec<String> {
        let mut out = Vec::new();
        let d = self.dim;
        if d == 0 {
            out.push("dim must be positive".to_string());
            return out;
        }
        if self.hamiltonian.shape() != (d, d) {
            out.push(format!("hamiltonian is {:?}, expected {d}x{d}", self.hamiltonian.shape()));
        } else if !is_hermitian(&self.hamiltonian, tol.hermitian) {
            out.push("hamiltonian is not Hermitian".to_string());
        }
        for (k, j) in self.jumps.iter().enumerate() {
            if !j.rate.is_finite() || j.rate < 0.0 {
                out.push(format!("jumps[{k}].rate = {} must be finite and >= 0", j.rate));
            }
            if j.op.shape() != (d, d) {
                out.push(format!("jumps[{k}].op is {:?}, expected {d}x{d}", j.op.shape()));
            } else if max_abs(&j.op) == 0.0 {
                out.push(format!("jumps[{k}].op is zero"));
            } else if j.op.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                out.push(format!("jumps[{k}].op has non-finite entries"));
            }
        }
        if self.initial.shape() != (d, d) {
            out.push(format!("initial is {:?}, expected {d}x{d}", self.initial.shape()));
        } else {
            if !is_psd(&self.initial, tol.psd) {
                out.push("initial state is not positive semidefinite".to_string());
            }
            let tr = self.initial.trace();
            if (tr - ONE).norm() > tol.trace {
                out.push(format!("initial state has trace {tr}, expected 1"));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != d {
                out.push(format!("{} labels for dimension {d}", labels.len()));
            }
        }
        out
    }
}

/// The four simplifying properties of a ticking clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PropertyFlags {
    pub self_timed: bool,
    pub clockwork_independent: bool,
    pub serial_registers: bool,
    pub irreversible_ticks: bool,
}

impl PropertyFlags {
    pub fn is_elementary(&self) -> bool {
        self.self_timed && self.clockwork_independent && self.serial_registers && self.irreversible_ticks
    }
}

/// Classifies an elementary-form spec.
///
/// Self-timing and clockwork independence hold by construction of
/// [`ClockSpec`]; the register flags are read off the jump shifts.
pub fn validate_elementary(spec: &ClockSpec) -> Result<PropertyFlags> {
    validate_elementary_with(spec, &ToleranceConfig::default())
}

pub fn validate_elementary_with(spec: &ClockSpec, tol: &ToleranceConfig) -> Result<PropertyFlags> {
    let problems = spec.violations(tol);
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }
    Ok(PropertyFlags {
        self_timed: true,
        clockwork_independent: true,
        serial_registers: spec.jumps.iter().all(|j| j.delta.abs() <= 1),
        irreversible_ticks: spec.jumps.iter().all(|j| j.delta >= 0),
    })
}

/// Fails with a precondition error unless the clock is elementary.
pub(crate) fn require_elementary(spec: &ClockSpec, what: &str) -> Result<PropertyFlags> {
    let flags = validate_elementary(spec)?;
    if !flags.is_elementary() {
        return Err(Error::Precondition(format!("{what} requires an elementary clock, got {flags:?}")));
    }
    Ok(flags)
}
