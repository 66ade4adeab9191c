//! Dense complex matrices and the handful of predicates and factorizations
//! the rest of the crate builds on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix.
///
/// Storage is nalgebra's column-major layout; [`from_rows`] and [`to_rows`]
/// convert to and from the row-major nested form used in files.
pub type CMatrix = DMatrix<C64>;

pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// `|i><j|` in dimension `d`.
pub fn ket_bra(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(d, d);
    m[(i, j)] = ONE;
    m
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let d = values.len();
    CMatrix::from_fn(d, d, |i, j| if i == j { c(values[i], 0.0) } else { ZERO })
}

pub fn from_rows(rows: &[Vec<C64>]) -> Result<CMatrix> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Dimension("matrix has no rows".into()));
    }
    let cols = rows[0].len();
    if cols == 0 || rows.iter().any(|row| row.len() != cols) {
        return Err(Error::Dimension("ragged or empty matrix rows".into()));
    }
    Ok(CMatrix::from_fn(r, cols, |i, j| rows[i][j]))
}

pub fn to_rows(m: &CMatrix) -> Vec<Vec<C64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm_one(m: &CMatrix) -> f64 {
    m.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn is_square(m: &CMatrix) -> bool {
    m.nrows() == m.ncols()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    is_square(m) && max_abs(&(m - m.adjoint())) <= tol
}

/// Positive semidefinite: Hermitian to `tol` and smallest eigenvalue `>= -tol`.
pub fn is_psd(m: &CMatrix, tol: f64) -> bool {
    if !is_hermitian(m, tol) {
        return false;
    }
    let (values, _) = hermitian_eigen(m);
    values.first().map_or(true, |&v| v >= -tol)
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    is_square(m) && max_abs(&(m.adjoint() * m - identity(m.nrows()))) <= tol
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Column `k` of the returned matrix is the eigenvector for `values[k]`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let h = hermitian_part(m);
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// All eigenvalues of a general square matrix via complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if !is_square(m) {
        return Err(Error::Dimension(format!("eigenvalues of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 100 * n * n)
        .ok_or_else(|| Error::Conditioning("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)].norm() > 0.0 {
            // unreduced 2x2 block
            let (a, b, cc, d) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k)], t[(k + 1, k + 1)]);
            let half_tr = (a + d) * 0.5;
            let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * cc).sqrt();
            out.push(half_tr + disc);
            out.push(half_tr - disc);
            k += 2;
        } else {
            out.push(t[(k, k)]);
            k += 1;
        }
    }
    Ok(out)
}

/// Orthonormal basis of the numerical null space, as columns.
///
/// Singular values below `rel_tol * max(1, sigma_max)` count as zero.
pub fn null_space(m: &CMatrix, rel_tol: f64) -> CMatrix {
    let n = m.ncols();
    let svd = nalgebra::SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let scale = svd.singular_values.iter().cloned().fold(1.0, f64::max);
    // nalgebra returns min(rows, cols) singular values; any remaining
    // columns of V are null directions of a wide matrix.
    let mut kept = Vec::new();
    for (k, s) in svd.singular_values.iter().enumerate() {
        if *s <= rel_tol * scale {
            kept.push(k);
        }
    }
    let cols: Vec<CVector> = kept.iter().map(|&k| CVector::from_fn(n, |i, _| v_t[(k, i)].conj())).collect();
    if cols.is_empty() {
        return CMatrix::zeros(n, 0);
    }
    CMatrix::from_columns(&cols)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let svd = nalgebra::SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Square root of a positive semidefinite matrix (negative eigenvalues clipped).
pub fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let d = CMatrix::from_fn(
        values.len(),
        values.len(),
        |i, j| {
            if i == j {
                c(values[i].max(0.0).sqrt(), 0.0)
            } else {
                ZERO
            }
        },
    );
    &vectors * d * vectors.adjoint()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Partial trace over the second factor of `C^a ⊗ C^b`.
pub fn partial_trace_second(m: &CMatrix, a: usize, b: usize) -> CMatrix {
    CMatrix::from_fn(a, a, |i, j| (0..b).map(|k| m[(i * b + k, j * b + k)]).sum())
}

/// Partial trace over the first factor of `C^a ⊗ C^b`.
pub fn partial_trace_first(m: &CMatrix, a: usize, b: usize) -> CMatrix {
    CMatrix::from_fn(b, b, |i, j| (0..a).map(|k| m[(k * b + i, k * b + j)]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predicates_on_pauli_matrices() {
        let x = from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let y = from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap();
        assert!(is_hermitian(&x, 1e-12));
        assert!(is_unitary(&y, 1e-12));
        assert!(!is_psd(&x, 1e-12));
        assert!(is_psd(&(identity(2) + &x), 1e-12));
        assert!(!is_hermitian(&(x * I), 1e-12));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(from_rows(&[vec![ONE, ZERO], vec![ONE]]).is_err());
        assert!(from_rows(&[]).is_err());
    }

    #[test]
    fn row_major_round_trip() {
        let m = CMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        let rows = to_rows(&m);
        assert_eq!(rows[1][2], c(1.0, 2.0));
        assert_eq!(from_rows(&rows).unwrap(), m);
    }

    #[test]
    fn eigenvalues_of_triangular_matrix() {
        let m = from_rows(&[
            vec![c(1.0, 0.0), c(3.0, 0.0), ZERO],
            vec![ZERO, c(-2.0, 1.0), c(1.0, 0.0)],
            vec![ZERO, ZERO, c(0.5, 0.0)],
        ])
        .unwrap();
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - c(-2.0, 1.0)).norm() < 1e-12);
        assert!((ev[1] - c(0.5, 0.0)).norm() < 1e-12);
        assert!((ev[2] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotation_has_imaginary_pair() {
        let m = from_rows(&[vec![ZERO, -ONE], vec![ONE, ZERO]]).unwrap();
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] + I).norm() < 1e-12);
        assert!((ev[1] - I).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_rank_one() {
        let v = CVector::from_vec(vec![ONE, c(0.0, 2.0), c(-1.0, 0.0)]);
        let m = &v * v.adjoint();
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!(max_abs(&(&m * &ns)) < 1e-12);
    }

    #[test]
    fn partial_traces() {
        let a = from_rows(&[vec![c(0.3, 0.0), c(0.1, 0.1)], vec![c(0.1, -0.1), c(0.7, 0.0)]]).unwrap();
        let b = diag_real(&[0.2, 0.5, 0.3]);
        let ab = kron(&a, &b);
        assert!(max_abs(&(partial_trace_second(&ab, 2, 3) - &a)) < 1e-15);
        assert!(max_abs(&(partial_trace_first(&ab, 2, 3) - &b)) < 1e-15);
    }
}
