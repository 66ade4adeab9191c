//! Quantum channels in Kraus form and their JSON files.

use std::path::Path;

use serde::Deserialize;

use crate::clock_model::io::{matrix_from_raw, write_matrix, RawMatrix};
use crate::error::{Error, Result};
use crate::numerics::matrix::{frobenius, identity, max_abs, zeros, CMatrix};
use crate::numerics::SuperOperator;

/// Completeness tolerance `‖Σ A†A − 𝟙‖_max`.
pub const COMPLETENESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    dim: usize,
    kraus: Vec<CMatrix>,
}

impl QuantumChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        Self::with_tolerance(kraus, COMPLETENESS_TOL)
    }

    pub fn with_tolerance(kraus: Vec<CMatrix>, tol: f64) -> Result<Self> {
        let first =
            kraus.first().ok_or_else(|| Error::Validation(vec!["channel needs at least one Kraus operator".into()]))?;
        let d = first.nrows();
        let mut problems = Vec::new();
        for (k, a) in kraus.iter().enumerate() {
            if a.shape() != (d, d) {
                problems.push(format!("kraus[{k}] is {:?}, expected {d}x{d}", a.shape()));
            }
        }
        if problems.is_empty() {
            let mut sum = zeros(d, d);
            for a in &kraus {
                sum += a.adjoint() * a;
            }
            let defect = max_abs(&(sum - identity(d)));
            if defect > tol {
                problems.push(format!("Kraus operators are incomplete: |sum A^dag A - 1| = {defect:e}"));
            }
        }
        if problems.is_empty() {
            Ok(QuantumChannel { dim: d, kraus })
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn identity(d: usize) -> Self {
        QuantumChannel { dim: d, kraus: vec![identity(d)] }
    }

    /// Projective measurement onto the computational basis, outcome discarded.
    pub fn dephasing(d: usize) -> Self {
        QuantumChannel { dim: d, kraus: (0..d).map(|i| crate::numerics::matrix::ket_bra(d, i, i)).collect() }
    }

    /// Non-selective measurement of which block of `⊕ₙ C^{blocks[n]}` the state occupies.
    pub fn block_measurement(blocks: &[usize]) -> Self {
        let d: usize = blocks.iter().sum();
        let mut offset = 0;
        let kraus = blocks
            .iter()
            .map(|&b| {
                let mut p = zeros(d, d);
                for i in offset..offset + b {
                    p[(i, i)] = crate::numerics::matrix::ONE;
                }
                offset += b;
                p
            })
            .collect();
        QuantumChannel { dim: d, kraus }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = zeros(self.dim, self.dim);
        for a in &self.kraus {
            out += a * rho * a.adjoint();
        }
        out
    }

    /// Heisenberg picture `X ↦ Σ A† X A`.
    pub fn apply_dual(&self, x: &CMatrix) -> CMatrix {
        let mut out = zeros(self.dim, self.dim);
        for a in &self.kraus {
            out += a.adjoint() * x * a;
        }
        out
    }

    pub fn superoperator(&self) -> SuperOperator {
        let mut s = SuperOperator::zero(self.dim);
        for a in &self.kraus {
            s = s + SuperOperator::conjugation(a);
        }
        s
    }

    /// `V A V†` for every Kraus operator.
    pub fn conjugated(&self, v: &CMatrix) -> Self {
        QuantumChannel { dim: self.dim, kraus: self.kraus.iter().map(|a| v * a * v.adjoint()).collect() }
    }
}

/// Largest `‖𝓔(ρ) − ρ‖_F` over `states`.
pub fn verify_nondisturbance(channel: &QuantumChannel, states: &[CMatrix]) -> Result<f64> {
    let d = channel.dim();
    let mut worst: f64 = 0.0;
    for (k, rho) in states.iter().enumerate() {
        if rho.shape() != (d, d) {
            return Err(Error::Dimension(format!("states[{k}] is {:?}, channel acts on dimension {d}", rho.shape())));
        }
        worst = worst.max(frobenius(&(channel.apply(rho) - rho)));
    }
    Ok(worst)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    dim: usize,
    kraus: Vec<RawMatrix>,
}

/// Parses `{"dim": d, "kraus": [matrix, ...]}`.
pub fn parse_channel(text: &str) -> Result<QuantumChannel> {
    let raw: RawChannel = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        detail: e.to_string(),
    })?;
    let mut kraus = Vec::with_capacity(raw.kraus.len());
    for (k, m) in raw.kraus.iter().enumerate() {
        let field = format!("kraus[{k}]");
        let a = matrix_from_raw(m, &field)?;
        if a.shape() != (raw.dim, raw.dim) {
            return Err(Error::Parse {
                location: field,
                detail: format!("matrix is {}x{}, expected {d}x{d}", a.nrows(), a.ncols(), d = raw.dim),
            });
        }
        kraus.push(a);
    }
    if kraus.is_empty() {
        return Err(Error::Parse { location: "kraus".into(), detail: "at least one operator is required".into() });
    }
    QuantumChannel::new(kraus).map_err(|e| Error::Parse { location: "kraus".into(), detail: e.to_string() })
}

pub fn load_channel(path: impl AsRef<Path>) -> Result<QuantumChannel> {
    parse_channel(&std::fs::read_to_string(path)?)
}

pub fn channel_to_json(channel: &QuantumChannel) -> String {
    let mut out = format!("{{\n  \"dim\": {},\n  \"kraus\": [", channel.dim());
    for (k, a) in channel.kraus().iter().enumerate() {
        out.push_str(if k == 0 { "\n    " } else { ",\n    " });
        write_matrix(&mut out, a, 4);
    }
    out.push_str("\n  ]\n}\n");
    out
}
