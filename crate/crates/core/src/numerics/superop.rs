//! Linear maps on operators, stored as matrices over the vectorized space.
//!
//! Vectorization is column stacking: `vec(X)[i + d*j] = X[i, j]`, so that
//! `vec(A X B) = (B^T ⊗ A) vec(X)`. This matches nalgebra's column-major
//! storage, which makes [`vectorize`] a plain copy.

use std::ops::{Add, Mul, Sub};

use super::matrix::{c, identity, kron, CMatrix, CVector, C64, ONE, ZERO};
use crate::error::{Error, Result};

pub fn vectorize(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

pub fn unvectorize(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    matrix: CMatrix,
}

impl SuperOperator {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::Dimension(format!(
                "superoperator on dimension {dim} needs a {0}x{0} matrix, got {1}x{2}",
                dim * dim,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(SuperOperator { dim, matrix })
    }

    pub fn zero(dim: usize) -> Self {
        SuperOperator { dim, matrix: CMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn identity(dim: usize) -> Self {
        SuperOperator { dim, matrix: identity(dim * dim) }
    }

    /// `X -> A X B`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        let dim = a.nrows();
        SuperOperator { dim, matrix: kron(&b.transpose(), a) }
    }

    /// `X -> A X A†`.
    pub fn conjugation(a: &CMatrix) -> Self {
        let dim = a.nrows();
        SuperOperator { dim, matrix: kron(&a.map(|z| z.conj()), a) }
    }

    /// `X -> A X`.
    pub fn left(a: &CMatrix) -> Self {
        let dim = a.nrows();
        SuperOperator { dim, matrix: kron(&identity(dim), a) }
    }

    /// `X -> X B`.
    pub fn right(b: &CMatrix) -> Self {
        let dim = b.nrows();
        SuperOperator { dim, matrix: kron(&b.transpose(), &identity(dim)) }
    }

    /// `X -> -i[H, X]`.
    pub fn hamiltonian(h: &CMatrix) -> Self {
        let mi = c(0.0, -1.0);
        let comm = SuperOperator::left(h) - SuperOperator::right(h);
        comm * mi
    }

    /// `X -> L X L† - ½{L†L, X}`, the standard dissipator.
    pub fn dissipator(l: &CMatrix) -> Self {
        let ldl = l.adjoint() * l;
        SuperOperator::conjugation(l) - (SuperOperator::left(&ldl) + SuperOperator::right(&ldl)) * c(0.5, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        unvectorize(&(&self.matrix * vectorize(x)), self.dim)
    }

    pub fn compose(&self, inner: &SuperOperator) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: &self.matrix * &inner.matrix }
    }

    /// Hilbert–Schmidt adjoint: the Heisenberg-picture map.
    pub fn adjoint(&self) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: self.matrix.adjoint() }
    }

    /// Choi matrix `Σ_ij |i><j| ⊗ S(|i><j|)`.
    pub fn choi(&self) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let col = self.matrix.column(i + d * j);
                for a in 0..d {
                    for b in 0..d {
                        out[(i * d + a, j * d + b)] = col[a + d * b];
                    }
                }
            }
        }
        out
    }

    pub fn is_completely_positive(&self, tol: f64) -> bool {
        super::matrix::is_psd(&self.choi(), tol)
    }

    /// Largest deviation of `Tr S(|i><j|)` from `δ_ij`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let col = self.matrix.column(i + d * j);
                let tr: C64 = (0..d).map(|a| col[a + d * a]).sum();
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((tr - target).norm());
            }
        }
        worst
    }

    /// Largest `|Tr S(|i><j|)|`: zero for generators of trace-preserving semigroups.
    pub fn trace_annihilation_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for col_idx in 0..d * d {
            let col = self.matrix.column(col_idx);
            let tr: C64 = (0..d).map(|a| col[a + d * a]).sum();
            worst = worst.max(tr.norm());
        }
        worst
    }
}

impl Add for SuperOperator {
    type Output = SuperOperator;
    fn add(self, rhs: SuperOperator) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: self.matrix + rhs.matrix }
    }
}

impl Add<&SuperOperator> for &SuperOperator {
    type Output = SuperOperator;
    fn add(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: &self.matrix + &rhs.matrix }
    }
}

impl Sub for SuperOperator {
    type Output = SuperOperator;
    fn sub(self, rhs: SuperOperator) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: self.matrix - rhs.matrix }
    }
}

impl Sub<&SuperOperator> for &SuperOperator {
    type Output = SuperOperator;
    fn sub(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: &self.matrix - &rhs.matrix }
    }
}

impl Mul<C64> for SuperOperator {
    type Output = SuperOperator;
    fn mul(self, rhs: C64) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: self.matrix * rhs }
    }
}

impl Mul<f64> for SuperOperator {
    type Output = SuperOperator;
    fn mul(self, rhs: f64) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: self.matrix * c(rhs, 0.0) }
    }
}

impl Mul<f64> for &SuperOperator {
    type Output = SuperOperator;
    fn mul(self, rhs: f64) -> SuperOperator {
        SuperOperator { dim: self.dim, matrix: &self.matrix * c(rhs, 0.0) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::{from_rows, max_abs};
    use proptest::prelude::*;

    fn mat(d: usize, seed: &[f64]) -> CMatrix {
        CMatrix::from_fn(d, d, |i, j| {
            let k = 2 * (i * d + j);
            c(seed[k % seed.len()], seed[(k + 1) % seed.len()])
        })
    }

    #[test]
    fn column_stacking_convention() {
        let x = from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(3.0, 0.0), c(4.0, 0.0)]]).unwrap();
        let v = vectorize(&x);
        // column stacking: first column (1, 3), then (2, 4)
        assert_eq!(v[0], c(1.0, 0.0));
        assert_eq!(v[1], c(3.0, 0.0));
        assert_eq!(v[2], c(2.0, 0.0));
        assert_eq!(unvectorize(&v, 2), x);
    }

    #[test]
    fn sandwich_matches_direct_product() {
        let a = mat(3, &[0.1, -0.4, 0.7, 0.2, 0.9]);
        let b = mat(3, &[0.3, 0.5, -0.8, 0.6]);
        let x = mat(3, &[1.0, 0.2, -0.3]);
        let s = SuperOperator::sandwich(&a, &b);
        assert!(max_abs(&(s.apply(&x) - &a * &x * &b)) < 1e-13);
        let conj = SuperOperator::conjugation(&a);
        assert!(max_abs(&(conj.apply(&x) - &a * &x * a.adjoint())) < 1e-13);
    }

    #[test]
    fn dissipator_is_trace_annihilating_and_choi_of_channel_psd() {
        let l = mat(2, &[0.4, 0.3, -0.2, 0.9, 0.1]);
        let d = SuperOperator::dissipator(&l);
        assert!(d.trace_annihilation_defect() < 1e-14);
        let ch = SuperOperator::conjugation(&l);
        assert!(ch.is_completely_positive(1e-12));
    }

    proptest! {
        #[test]
        fn superoperator_action_is_linear(
            seed in proptest::collection::vec(-1.0f64..1.0, 40),
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
        ) {
            let l = mat(3, &seed[0..12]);
            let h = mat(3, &seed[12..24]);
            let s = SuperOperator::dissipator(&l) + SuperOperator::hamiltonian(&(&h + h.adjoint()));
            let x = mat(3, &seed[24..32]);
            let y = mat(3, &seed[32..40]);
            let lhs = s.apply(&(&x * c(a, 0.0) + &y * c(b, 0.0)));
            let rhs = s.apply(&x) * c(a, 0.0) + s.apply(&y) * c(b, 0.0);
            prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }
    }
}
