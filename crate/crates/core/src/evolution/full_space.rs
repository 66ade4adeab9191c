//! The same dynamics written on the full clockwork ⊗ register space.
//!
//! Basis index `n * d + i` pairs register bin `n` with clockwork level `i`.
//! Each jump term yields one operator `|route(n)⟩⟨n| ⊗ L` per source bin, so the
//! absorbing top bin never produces register coherences.

use super::{integrator::propagate, ClockState, TruncatedRegister, INTEGRATOR_TOL};
use crate::clock_model::{validate_elementary, ClockSpec};
use crate::error::{Error, Result};
use crate::numerics::matrix::{c, identity, ket_bra, kron, norm_one, zeros, CMatrix, CVector};
use crate::numerics::{unvectorize, vectorize, SuperOperator};

#[derive(Debug, Clone)]
pub struct FullSpaceModel {
    clock_dim: usize,
    register: TruncatedRegister,
    hamiltonian: CMatrix,
    jumps: Vec<CMatrix>,
    /// `(n, route(n), L)` for every entry of `jumps`.
    sources: Vec<(usize, usize, CMatrix)>,
    /// Clockwork `H - (i/2) Σ L†L`, repeated in every bin.
    effective: CMatrix,
    norm_bound: f64,
}

impl FullSpaceModel {
    pub fn new(spec: &ClockSpec, n_max: usize) -> Result<Self> {
        validate_elementary(spec)?;
        let d = spec.dim;
        let bins = n_max + 1;
        let register = TruncatedRegister::new(n_max);
        let hamiltonian = kron(&identity(bins), &spec.hamiltonian);
        let mut jumps = Vec::new();
        let mut sources = Vec::new();
        // every bin feeds through the same clockwork operators into disjoint blocks,
        // so the jump part is bounded by a single bin's sum
        let mut feed_bound = 0.0;
        for j in &spec.jumps {
            let l = j.scaled_op();
            feed_bound += norm_one(&l).powi(2);
            for n in 0..bins {
                let to = register.route(n, j.delta);
                jumps.push(kron(&ket_bra(bins, to, n), &l));
                sources.push((n, to, l.clone()));
            }
        }
        let mut local_decay = zeros(d, d);
        for j in &spec.jumps {
            local_decay += j.scaled_op().adjoint() * j.scaled_op();
        }
        let norm_bound = 2.0 * norm_one(&spec.hamiltonian) + norm_one(&local_decay) + feed_bound;
        let effective = &spec.hamiltonian - local_decay * c(0.0, 0.5);
        Ok(FullSpaceModel { clock_dim: d, register, hamiltonian, jumps, sources, effective, norm_bound })
    }

    pub fn dim(&self) -> usize {
        self.clock_dim * (self.register.n_max + 1)
    }

    pub fn jump_operators(&self) -> &[CMatrix] {
        &self.jumps
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    /// Block-diagonal density matrix of a register state.
    pub fn embed(&self, state: &ClockState) -> CMatrix {
        let d = self.clock_dim;
        let mut rho = zeros(self.dim(), self.dim());
        for (n, m) in state.components.iter().enumerate() {
            rho.view_mut((n * d, n * d), (d, d)).copy_from(m);
        }
        rho
    }

    /// Non-selective register readout `Σₙ Pₙ ρ Pₙ`.
    pub fn dephase(&self, rho: &CMatrix) -> CMatrix {
        let d = self.clock_dim;
        CMatrix::from_fn(rho.nrows(), rho.ncols(), |i, j| if i / d == j / d { rho[(i, j)] } else { c(0.0, 0.0) })
    }

    /// `tr(Pₙ ρ)` for every register bin.
    pub fn register_weights(&self, rho: &CMatrix) -> Vec<f64> {
        let d = self.clock_dim;
        (0..=self.register.n_max).map(|n| (0..d).map(|i| rho[(n * d + i, n * d + i)].re).sum()).collect()
    }

    /// Register-bin projectors `|n⟩⟨n| ⊗ 𝟙`.
    pub fn register_projectors(&self) -> Vec<CMatrix> {
        let bins = self.register.n_max + 1;
        (0..bins).map(|n| kron(&ket_bra(bins, n, n), &identity(self.clock_dim))).collect()
    }

    /// Largest entry of `rho` outside the register-diagonal blocks.
    pub fn off_block_norm(&self, rho: &CMatrix) -> f64 {
        let d = self.clock_dim;
        let mut worst: f64 = 0.0;
        for i in 0..rho.nrows() {
            for j in 0..rho.ncols() {
                if i / d != j / d {
                    worst = worst.max(rho[(i, j)].norm());
                }
            }
        }
        worst
    }

    fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.clock_dim;
        let bins = self.register.n_max + 1;
        // -i (K ρ - ρ K†) with K = 𝟙 ⊗ effective, one block row or column at a time
        let mut out = zeros(rho.nrows(), rho.ncols());
        let k_adj = self.effective.adjoint();
        for a in 0..bins {
            out.rows_mut(a * d, d).copy_from(&(&self.effective * rho.rows(a * d, d)));
        }
        for b in 0..bins {
            let right = rho.columns(b * d, d) * &k_adj;
            let mut col = out.columns_mut(b * d, d);
            col -= right;
        }
        out *= c(0.0, -1.0);
        // jump n -> r only reads the (n, n) block and writes the (r, r) block
        for (n, to, l) in &self.sources {
            let fed = l * rho.view((n * d, n * d), (d, d)) * l.adjoint();
            let mut target = out.view_mut((to * d, to * d), (d, d));
            target += fed;
        }
        out
    }

    pub fn evolve(&self, rho: &CMatrix, t: f64) -> Result<CMatrix> {
        if rho.shape() != (self.dim(), self.dim()) {
            return Err(Error::Dimension(format!("state is {:?}, model is {}", rho.shape(), self.dim())));
        }
        let dim = self.dim();
        let apply = |v: &CVector| vectorize(&self.apply(&unvectorize(v, dim)));
        let v = propagate(&apply, self.norm_bound, &vectorize(rho), t, INTEGRATOR_TOL)?;
        Ok(unvectorize(&v, dim))
    }

    /// Dense generator on the full space; only sensible for small windows.
    pub fn superoperator(&self) -> SuperOperator {
        let mut g = SuperOperator::hamiltonian(&self.hamiltonian);
        for l in &self.jumps {
            g = g + SuperOperator::dissipator(l);
        }
        g
    }
}
