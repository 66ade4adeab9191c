//! Spectral helpers for generators on the vectorized operator space.

use super::matrix::{c, eigenvalues, hermitian_part, is_psd, null_space, CMatrix, CVector, C64};
use super::superop::{unvectorize, SuperOperator};
use crate::error::{Error, Result};

/// Minimum separation of real parts between the two leading eigenvalues.
pub const SPECTRAL_GAP_TOL: f64 = 1e-10;

/// Relative singular-value threshold for null-space membership.
pub const NULL_SPACE_TOL: f64 = 1e-10;

/// Eigenvalues sorted by descending real part.
pub fn sorted_spectrum(s: &SuperOperator) -> Result<Vec<C64>> {
    let mut ev = eigenvalues(s.matrix())?;
    ev.sort_by(|a, b| b.re.total_cmp(&a.re));
    Ok(ev)
}

/// Eigenvalue of `s` with the largest real part.
///
/// The Schur estimate is polished with a few steps of two-sided shifted
/// inverse iteration, which brings it close to working precision even for
/// the strongly non-normal ladder generators clocks produce.
pub fn leading_eigenvalue(s: &SuperOperator) -> Result<C64> {
    let ev = sorted_spectrum(s)?;
    if ev.len() == 1 {
        return Ok(ev[0]);
    }
    let gap = ev[0].re - ev[1].re;
    if gap <= SPECTRAL_GAP_TOL {
        return Err(Error::Degeneracy(format!(
            "leading eigenvalues {} and {} are separated by {gap:e} in real part",
            ev[0], ev[1]
        )));
    }
    Ok(refine_eigenvalue(s.matrix(), ev[0], gap))
}

fn refine_eigenvalue(m: &CMatrix, estimate: C64, gap: f64) -> C64 {
    let n = m.nrows();
    let offset = (1e-9 * (1.0 + estimate.norm())).min(1e-3 * gap);
    let shift = estimate + c(offset, offset);
    let shifted = m - CMatrix::identity(n, n) * shift;
    let lu = shifted.clone().lu();
    let lu_adj = shifted.adjoint().lu();

    let mut right = CVector::from_element(n, c(1.0, 0.3));
    let mut left = CVector::from_element(n, c(1.0, -0.2));
    for _ in 0..4 {
        match (lu.solve(&right), lu_adj.solve(&left)) {
            (Some(r), Some(l)) if r.norm().is_finite() && l.norm().is_finite() => {
                right = &r / c(r.norm(), 0.0);
                left = &l / c(l.norm(), 0.0);
            }
            _ => return estimate,
        }
    }
    let denom = (left.adjoint() * &right)[(0, 0)];
    if denom.norm() < 1e-14 {
        return estimate;
    }
    let refined = (left.adjoint() * m * &right)[(0, 0)] / denom;
    if (refined - estimate).norm() < 0.5 * gap {
        refined
    } else {
        estimate
    }
}

/// Unique steady state of a trace-annihilating generator.
pub fn stationary_state(s: &SuperOperator) -> Result<CMatrix> {
    let d = s.dim();
    let ns = null_space(s.matrix(), NULL_SPACE_TOL);
    match ns.ncols() {
        0 => Err(Error::Degeneracy("generator has no stationary state".into())),
        1 => {
            let v: CVector = ns.column(0).into_owned();
            let rho = unvectorize(&v, d);
            let tr = rho.trace();
            if tr.norm() < 1e-12 {
                return Err(Error::Degeneracy("null vector is traceless; generator is not trace-annihilating".into()));
            }
            let rho = hermitian_part(&(rho / tr));
            if !is_psd(&rho, 1e-10) {
                return Err(Error::Degeneracy("stationary operator is not positive semidefinite".into()));
            }
            Ok(rho)
        }
        k => Err(Error::Degeneracy(format!("stationary subspace has dimension {k}"))),
    }
}
