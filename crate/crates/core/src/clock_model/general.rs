//! Clocks whose register indices label clockwork blocks of differing dimension.

use std::collections::BTreeSet;

use super::{ClockSpec, JumpTerm, PropertyFlags, ToleranceConfig};
use crate::error::{Error, Result};
use crate::numerics::matrix::{c, is_hermitian, is_psd, kron, max_abs, zeros, CMatrix, ONE};
use crate::numerics::SuperOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralJump {
    pub rate: f64,
    pub op: CMatrix,
}

/// A generator on the direct sum `⊕ₙ Cₙ`, written in the full space.
///
/// Block `n` occupies rows `offsets()[n] .. offsets()[n] + blocks[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralClockSpec {
    pub blocks: Vec<usize>,
    pub hamiltonian: CMatrix,
    pub jumps: Vec<GeneralJump>,
    pub initial: Option<CMatrix>,
}

/// A jump restricted to the single block pair it connects.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockJump {
    pub term: usize,
    pub from: usize,
    pub to: usize,
    pub rate: f64,
    /// `blocks[to] x blocks[from]` operator.
    pub op: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralValidation {
    pub flags: PropertyFlags,
    pub hamiltonian_blocks: Vec<CMatrix>,
    pub jumps: Vec<BlockJump>,
    /// Distinct `(from, to)` register transitions, sorted.
    pub edges: Vec<(usize, usize)>,
    pub diagnostics: Vec<String>,
}

impl GeneralValidation {
    /// The equivalent elementary spec, available when there is a single block.
    /// Every jump then keeps the register index fixed.
    pub fn to_clock_spec(&self, initial: CMatrix) -> Option<ClockSpec> {
        if self.hamiltonian_blocks.len() != 1 {
            return None;
        }
        let h = self.hamiltonian_blocks[0].clone();
        Some(ClockSpec {
            dim: h.nrows(),
            hamiltonian: h,
            jumps: self.jumps.iter().map(|j| JumpTerm::new(0, j.rate, j.op.clone())).collect(),
            initial,
            labels: None,
        })
    }
}

impl GeneralClockSpec {
    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|&b| {
                let o = acc;
                acc += b;
                o
            })
            .collect()
    }

    /// Projectors `Πₙ` onto each block, in the full space.
    pub fn projectors(&self) -> Vec<CMatrix> {
        let d = self.dim();
        self.offsets()
            .iter()
            .zip(&self.blocks)
            .map(|(&o, &b)| {
                CMatrix::from_fn(d, d, |i, j| if i == j && i >= o && i < o + b { ONE } else { c(0.0, 0.0) })
            })
            .collect()
    }

    /// Full-space Lindbladian `-i[H, ·] + Σ γ D[L]`.
    pub fn generator(&self) -> SuperOperator {
        let mut g = SuperOperator::hamiltonian(&self.hamiltonian);
        for j in &self.jumps {
            g = g + SuperOperator::dissipator(&j.op) * j.rate;
        }
        g
    }

    fn block(&self, m: &CMatrix, to: usize, from: usize) -> CMatrix {
        let off = self.offsets();
        m.view((off[to], off[from]), (self.blocks[to], self.blocks[from])).into_owned()
    }
}

/// Checks that the Hamiltonian is block diagonal and that every jump maps a
/// single block into a single block.
pub fn validate_general(spec: &GeneralClockSpec) -> Result<GeneralValidation> {
    let tol = ToleranceConfig::default();
    if spec.blocks.is_empty() || spec.blocks.contains(&0) {
        return Err(Error::Validation(vec!["blocks must be a nonempty list of positive dimensions".into()]));
    }
    let d = spec.dim();
    let nb = spec.blocks.len();
    let mut problems = Vec::new();
    if spec.hamiltonian.shape() != (d, d) {
        problems.push(format!("hamiltonian is {:?}, expected {d}x{d}", spec.hamiltonian.shape()));
    } else if !is_hermitian(&spec.hamiltonian, tol.hermitian) {
        problems.push("hamiltonian is not Hermitian".into());
    }
    for (k, j) in spec.jumps.iter().enumerate() {
        if !j.rate.is_finite() || j.rate < 0.0 {
            problems.push(format!("jumps[{k}].rate = {} must be finite and >= 0", j.rate));
        }
        if j.op.shape() != (d, d) {
            problems.push(format!("jumps[{k}].op is {:?}, expected {d}x{d}", j.op.shape()));
        } else if max_abs(&j.op) == 0.0 {
            problems.push(format!("jumps[{k}].op is zero"));
        }
    }
    if let Some(rho) = &spec.initial {
        if rho.shape() != (d, d) {
            problems.push(format!("initial is {:?}, expected {d}x{d}", rho.shape()));
        } else {
            if !is_psd(rho, tol.psd) {
                problems.push("initial state is not positive semidefinite".into());
            }
            if (rho.trace() - ONE).norm() > tol.trace {
                problems.push("initial state does not have unit trace".into());
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Validation(problems));
    }

    for m in 0..nb {
        for n in 0..nb {
            if m != n && max_abs(&spec.block(&spec.hamiltonian, m, n)) > tol.hermitian {
                return Err(Error::Structure(format!("hamiltonian couples block {n} to block {m}")));
            }
        }
    }
    let hamiltonian_blocks: Vec<CMatrix> = (0..nb).map(|n| spec.block(&spec.hamiltonian, n, n)).collect();

    let mut jumps = Vec::new();
    let mut diagnostics = Vec::new();
    for (k, j) in spec.jumps.iter().enumerate() {
        let cutoff = tol.hermitian * max_abs(&j.op).max(1.0);
        let support: Vec<(usize, usize)> = (0..nb)
            .flat_map(|to| (0..nb).map(move |from| (to, from)))
            .filter(|&(to, from)| max_abs(&spec.block(&j.op, to, from)) > cutoff)
            .collect();
        if support.len() != 1 {
            let pairs: Vec<String> = support.iter().map(|(to, from)| format!("{from}->{to}")).collect();
            return Err(Error::Structure(format!(
                "jumps[{k}] connects {} block pairs ({}); each jump must map one block into one block",
                support.len(),
                pairs.join(", ")
            )));
        }
        let (to, from) = support[0];
        diagnostics.push(format!("jumps[{k}]: block {from} -> block {to}"));
        jumps.push(BlockJump { term: k, from, to, rate: j.rate, op: spec.block(&j.op, to, from) });
    }

    let edges: Vec<(usize, usize)> =
        jumps.iter().filter(|j| j.from != j.to).map(|j| (j.from, j.to)).collect::<BTreeSet<_>>().into_iter().collect();
    let serial = edges.iter().all(|&(f, t)| f.abs_diff(t) <= 1);
    let irreversible = edges.iter().all(|&(f, t)| t >= f);
    let independent = clockwork_independent(spec, &hamiltonian_blocks, &jumps, tol.hermitian);
    diagnostics.push(format!(
        "register graph: {} edge(s) [{}]",
        edges.len(),
        edges.iter().map(|(f, t)| format!("{f}->{t}")).collect::<Vec<_>>().join(", ")
    ));

    Ok(GeneralValidation {
        flags: PropertyFlags {
            self_timed: true,
            clockwork_independent: independent,
            serial_registers: serial,
            irreversible_ticks: irreversible,
        },
        hamiltonian_blocks,
        jumps,
        edges,
        diagnostics,
    })
}

/// Equal block dimensions, identical block Hamiltonians, and for every shift
/// the same channel `Σ γ conj(L) ⊗ L` out of every block whose target exists.
fn clockwork_independent(spec: &GeneralClockSpec, hb: &[CMatrix], jumps: &[BlockJump], tol: f64) -> bool {
    let b0 = spec.blocks[0];
    if spec.blocks.iter().any(|&b| b != b0) {
        return false;
    }
    if hb.iter().any(|h| max_abs(&(h - &hb[0])) > tol) {
        return false;
    }
    let nb = spec.blocks.len() as i64;
    let shifts: BTreeSet<i64> = jumps.iter().map(|j| j.to as i64 - j.from as i64).collect();
    for &delta in &shifts {
        let channels: Vec<CMatrix> = (0..nb)
            .filter(|&n| (0..nb).contains(&(n + delta)))
            .map(|n| {
                let mut acc = zeros(b0 * b0, b0 * b0);
                for j in jumps.iter().filter(|j| j.from as i64 == n && j.to as i64 == n + delta) {
                    acc += kron(&j.op.map(|z| z.conj()), &j.op) * c(j.rate, 0.0);
                }
                acc
            })
            .collect();
        if channels.iter().any(|ch| max_abs(&(ch - &channels[0])) > tol) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::ket_bra;

    #[test]
    fn single_block_reduces_to_elementary_spec() {
        let spec = GeneralClockSpec {
            blocks: vec![2],
            hamiltonian: zeros(2, 2),
            jumps: vec![GeneralJump { rate: 1.0, op: ket_bra(2, 1, 0) }],
            initial: None,
        };
        let v = validate_general(&spec).unwrap();
        assert!(v.edges.is_empty());
        let elementary = v.to_clock_spec(ket_bra(2, 0, 0)).unwrap();
        assert!(elementary.jumps.iter().all(|j| j.delta == 0));
        assert_eq!(elementary.jumps[0].op, ket_bra(2, 1, 0));
    }

    #[test]
    fn two_blocks_one_edge() {
        // C_1 = span{|0>}, C_2 = span{|1>, |2>}
        let spec = GeneralClockSpec {
            blocks: vec![1, 2],
            hamiltonian: zeros(3, 3),
            jumps: vec![GeneralJump { rate: 0.5, op: ket_bra(3, 1, 0) }],
            initial: None,
        };
        let v = validate_general(&spec).unwrap();
        assert_eq!(v.edges, vec![(0, 1)]);
        assert_eq!(v.jumps[0].op.shape(), (2, 1));
        assert!(!v.flags.clockwork_independent);
        assert!(v.flags.irreversible_ticks);
    }

    #[test]
    fn jump_into_two_targets_is_rejected() {
        let mut op = ket_bra(3, 1, 0);
        op[(2, 0)] = ONE;
        let spec = GeneralClockSpec {
            blocks: vec![1, 1, 1],
            hamiltonian: zeros(3, 3),
            jumps: vec![GeneralJump { rate: 1.0, op: ket_bra(3, 2, 1) }, GeneralJump { rate: 1.0, op }],
            initial: None,
        };
        match validate_general(&spec) {
            Err(Error::Structure(msg)) => assert!(msg.contains("jumps[1]"), "{msg}"),
            other => panic!("expected structure error, got {other:?}"),
        }
    }

    #[test]
    fn off_block_hamiltonian_is_rejected() {
        let mut h = zeros(2, 2);
        h[(0, 1)] = ONE;
        h[(1, 0)] = ONE;
        let spec = GeneralClockSpec { blocks: vec![1, 1], hamiltonian: h, jumps: vec![], initial: None };
        assert!(matches!(validate_general(&spec), Err(Error::Structure(_))));
    }

    #[test]
    fn translation_invariant_chain_is_independent() {
        let spec = GeneralClockSpec {
            blocks: vec![1, 1, 1],
            hamiltonian: zeros(3, 3),
            jumps: vec![
                GeneralJump { rate: 1.0, op: ket_bra(3, 1, 0) },
                GeneralJump { rate: 1.0, op: ket_bra(3, 2, 1) },
            ],
            initial: None,
        };
        let v = validate_general(&spec).unwrap();
        assert!(v.flags.is_elementary());
    }
}
