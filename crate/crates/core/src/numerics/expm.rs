//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (degrees 3, 5, 7, 9, 13 selected on the 1-norm).

use super::matrix::{c, identity, is_square, norm_one, CMatrix};
use crate::error::{Error, Result};

/// Inputs whose scaled 1-norm exceeds this are rejected as ill-conditioned.
pub const MAX_EXPONENT_NORM: f64 = 1e4;

const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.539398330063230e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// `exp(scale * m)`.
pub fn matrix_exponential(m: &CMatrix, scale: f64) -> Result<CMatrix> {
    if !is_square(m) {
        return Err(Error::Dimension(format!("matrix exponential of a {}x{} matrix", m.nrows(), m.ncols())));
    }
    if !scale.is_finite() {
        return Err(Error::Conditioning(format!("non-finite scale {scale}")));
    }
    let a = m * c(scale, 0.0);
    let norm = norm_one(&a);
    if !norm.is_finite() || norm > MAX_EXPONENT_NORM {
        return Err(Error::Conditioning(format!("|scale * m|_1 = {norm:e} exceeds {MAX_EXPONENT_NORM:e}")));
    }
    let n = a.nrows();
    if norm == 0.0 {
        return Ok(identity(n));
    }

    for &(degree, theta) in &THETA {
        if norm <= theta {
            return pade(&a, degree);
        }
    }

    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
    let scaled = &a * c(2f64.powi(-s), 0.0);
    let mut r = pade(&scaled, 13)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// `exp(t * m)` for long times: the exponential of a short slice, raised to
/// the required power by repeated squaring.
pub fn propagator(m: &CMatrix, t: f64) -> Result<CMatrix> {
    let norm = norm_one(m) * t.abs();
    if !norm.is_finite() {
        return Err(Error::Conditioning(format!("non-finite propagation time {t}")));
    }
    let slices = (norm / 32.0).ceil().max(1.0);
    if slices > 1e12 {
        return Err(Error::Conditioning(format!("propagation norm {norm:e} too large")));
    }
    let mut k = slices as u64;
    let mut base = matrix_exponential(m, t / slices)?;
    let mut acc = identity(m.nrows());
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    Ok(acc)
}

fn pade(a: &CMatrix, degree: usize) -> Result<CMatrix> {
    let n = a.nrows();
    let id = identity(n);
    let a2 = a * a;
    let (u, v) = match degree {
        3 => odd_even(a, &id, &[&a2], &B3),
        5 => {
            let a4 = &a2 * &a2;
            odd_even(a, &id, &[&a2, &a4], &B5)
        }
        7 => {
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            odd_even(a, &id, &[&a2, &a4, &a6], &B7)
        }
        9 => {
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            let a8 = &a6 * &a2;
            odd_even(a, &id, &[&a2, &a4, &a6, &a8], &B9)
        }
        _ => {
            let b = &B13;
            let a4 = &a2 * &a2;
            let a6 = &a4 * &a2;
            let s = |k: usize| c(b[k], 0.0);
            let inner_u = &a6 * s(13) + &a4 * s(11) + &a2 * s(9);
            let u = a * (&a6 * inner_u + &a6 * s(7) + &a4 * s(5) + &a2 * s(3) + &id * s(1));
            let inner_v = &a6 * s(12) + &a4 * s(10) + &a2 * s(8);
            let v = &a6 * inner_v + &a6 * s(6) + &a4 * s(4) + &a2 * s(2) + &id * s(0);
            (u, v)
        }
    };
    let denom = &v - &u;
    let numer = &v + &u;
    denom.lu().solve(&numer).ok_or_else(|| Error::Conditioning("singular Padé denominator".into()))
}

/// Odd and even parts of a low-degree Padé numerator from precomputed even powers.
fn odd_even(a: &CMatrix, id: &CMatrix, even_powers: &[&CMatrix], b: &[f64]) -> (CMatrix, CMatrix) {
    let mut u_sum = id * c(b[1], 0.0);
    let mut v = id * c(b[0], 0.0);
    for (k, p) in even_powers.iter().enumerate() {
        u_sum += *p * c(b[2 * k + 3], 0.0);
        v += *p * c(b[2 * k + 2], 0.0);
    }
    (a * u_sum, v)
}
