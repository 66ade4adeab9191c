//! Reduction of a clock to its register and clockwork: trace out every `Fₙ`.

use super::ki::KIDecomposition;
use crate::error::{Error, Result};
use crate::numerics::matrix::{frobenius, identity, partial_trace_second, zeros, CMatrix};

/// States must be rebuilt from their reduction to within this.
pub const ROUND_TRIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct MinimalClock {
    /// `dim Cₙ` per block.
    pub dims: Vec<usize>,
    /// Block projectors on `⊕ₙ Cₙ`.
    pub projectors: Vec<CMatrix>,
    /// `⊕ₙ tr_F(ρ)` for each input state.
    pub states: Vec<CMatrix>,
    /// `p_n` per state computed on the original space.
    pub weights_before: Vec<Vec<f64>>,
    /// `p_n` per state computed on the reduced space.
    pub weights_after: Vec<Vec<f64>>,
    /// Largest `‖R(S(ρ)) − ρ‖_F`.
    pub residual: f64,
}

impl MinimalClock {
    pub fn dim(&self) -> usize {
        self.dims.iter().sum()
    }
}

fn reduce(decomp: &KIDecomposition, rho: &CMatrix) -> Vec<CMatrix> {
    let rotated = decomp.basis.adjoint() * rho * &decomp.basis;
    decomp
        .blocks
        .iter()
        .zip(decomp.offsets())
        .map(|(b, o)| partial_trace_second(&rotated.view((o, o), (b.dim(), b.dim())).into_owned(), b.c_dim, b.f_dim))
        .collect()
}

fn direct_sum(parts: &[CMatrix]) -> CMatrix {
    let d: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = zeros(d, d);
    let mut o = 0;
    for p in parts {
        out.view_mut((o, o), p.shape()).copy_from(p);
        o += p.nrows();
    }
    out
}

pub fn minimal_clock(decomp: &KIDecomposition, states: &[CMatrix]) -> Result<MinimalClock> {
    let d = decomp.dim();
    let dims: Vec<usize> = decomp.blocks.iter().map(|b| b.c_dim).collect();
    let reduced_dim: usize = dims.iter().sum();
    let mut projectors = Vec::with_capacity(dims.len());
    let mut o = 0;
    for &c_dim in &dims {
        let mut p = zeros(reduced_dim, reduced_dim);
        p.view_mut((o, o), (c_dim, c_dim)).copy_from(&identity(c_dim));
        projectors.push(p);
        o += c_dim;
    }
    let full_projectors = decomp.projectors();
    let mut out_states = Vec::with_capacity(states.len());
    let mut weights_before = Vec::with_capacity(states.len());
    let mut weights_after = Vec::with_capacity(states.len());
    let mut residual: f64 = 0.0;
    for (k, rho) in states.iter().enumerate() {
        if rho.shape() != (d, d) {
            return Err(Error::Shape(format!("states[{k}] is {:?}, decomposition acts on dimension {d}", rho.shape())));
        }
        let parts = reduce(decomp, rho);
        let rebuilt = decomp.assemble(&parts)?;
        let r = frobenius(&(rebuilt - rho));
        if r > ROUND_TRIP_TOL {
            return Err(Error::Shape(format!("states[{k}] is not of the form ⊕ σₙ ⊗ ωₙ (round-trip residual {r:e})")));
        }
        residual = residual.max(r);
        let reduced = direct_sum(&parts);
        weights_before.push(full_projectors.iter().map(|p| (p * rho).trace().re).collect());
        weights_after.push(projectors.iter().map(|p| (p * &reduced).trace().re).collect());
        out_states.push(reduced);
    }
    Ok(MinimalClock { dims, projectors, states: out_states, weights_before, weights_after, residual })
}
