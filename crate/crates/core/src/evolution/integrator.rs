//! Action of `exp(t G)` on a vector for a linear operator known only through
//! its action, using truncated Taylor series on short substeps with step
//! doubling as the error control.

use crate::error::{Error, Result};
use crate::numerics::matrix::{c, CVector};

/// Substeps are capped so that `h * norm_bound <= STEP_NORM`, which keeps the
/// Taylor terms from growing large enough to lose digits to cancellation.
const STEP_NORM: f64 = 4.0;
const MAX_HALVINGS: u32 = 40;
const MAX_TERMS: usize = 80;
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

fn norm1(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

fn taylor_step<F: Fn(&CVector) -> CVector>(apply: &F, x: &CVector, h: f64) -> Result<CVector> {
    let mut sum = x.clone();
    let mut term = x.clone();
    for k in 1..=MAX_TERMS {
        term = apply(&term) * c(h / k as f64, 0.0);
        sum += &term;
        if norm1(&term) <= 1e-17 * norm1(&sum).max(f64::MIN_POSITIVE) {
            return Ok(sum);
        }
    }
    Err(Error::Integration(format!("Taylor series did not converge in {MAX_TERMS} terms at step {h:e}")))
}

/// `exp(t G) x` where `apply(v) = G v` and `norm_bound >= ||G||_1`.
///
/// Each accepted step of length `h` agrees with two half steps to within
/// `tol * h` in the 1-norm.
pub(crate) fn propagate<F: Fn(&CVector) -> CVector>(
    apply: &F,
    norm_bound: f64,
    x: &CVector,
    t: f64,
    tol: f64,
) -> Result<CVector> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Integration(format!("cannot propagate over time {t}")));
    }
    if t == 0.0 || norm_bound == 0.0 {
        return Ok(x.clone());
    }
    let h_max = STEP_NORM / norm_bound;
    let mut state = x.clone();
    let mut elapsed = 0.0;
    let mut h = h_max.min(t);
    let mut halvings = 0;
    while elapsed < t {
        let step = h.min(t - elapsed);
        let full = taylor_step(apply, &state, step)?;
        let half = taylor_step(apply, &state, 0.5 * step)?;
        let two_halves = taylor_step(apply, &half, 0.5 * step)?;
        let err = norm1(&(&full - &two_halves));
        let scale = norm1(&state).max(1.0);
        // differences at the rounding floor cannot be reduced by halving
        if err <= tol * step * scale || err <= ROUNDING_FLOOR * scale {
            state = two_halves;
            elapsed = if t - elapsed <= step { t } else { elapsed + step };
            h = (2.0 * h).min(h_max);
            halvings = 0;
        } else {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::Integration(format!(
                    "step-doubling error {err:e} above tolerance after {MAX_HALVINGS} consecutive halvings"
                )));
            }
            h = 0.5 * step;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::{from_rows, CMatrix, ONE, ZERO};
    use crate::numerics::matrix_exponential;

    #[test]
    fn matches_dense_exponential() {
        let g = from_rows(&[
            vec![c(-1.0, 0.0), c(0.0, 2.0), ZERO],
            vec![c(0.5, 0.0), c(-0.2, 0.0), ONE],
            vec![ZERO, c(0.3, -0.1), c(-3.0, 0.0)],
        ])
        .unwrap();
        let x = CVector::from_vec(vec![ONE, c(0.2, 0.1), ZERO]);
        let norm = crate::numerics::matrix::norm_one(&g);
        let apply = |v: &CVector| &g * v;
        let ours = propagate(&apply, norm, &x, 2.5, 1e-12).unwrap();
        let reference: CMatrix = matrix_exponential(&g, 2.5).unwrap();
        let want = reference * &x;
        assert!((ours - want).norm() < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let apply = |v: &CVector| v * c(-5.0, 0.0);
        let x = CVector::from_vec(vec![ONE, ONE]);
        assert_eq!(propagate(&apply, 5.0, &x, 0.0, 1e-9).unwrap(), x);
    }
}
