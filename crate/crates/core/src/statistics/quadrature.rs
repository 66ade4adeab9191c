//! Adaptive Gauss–Kronrod (7, 15) quadrature for vector-valued integrands.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Panel nodes on `[a, b]`, in the order `integrate` consumes them.
pub(crate) fn panel_nodes(a: f64, b: f64) -> [f64; 15] {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut x = [0.0; 15];
    for k in 0..7 {
        x[2 * k] = mid - half * XGK[k];
        x[2 * k + 1] = mid + half * XGK[k];
    }
    x[14] = mid;
    x
}

/// `(Kronrod estimate, |Kronrod − Gauss|)` for each component of one panel.
fn panel<const N: usize>(a: f64, b: f64, values: &[[f64; N]; 15]) -> ([f64; N], [f64; N]) {
    let half = 0.5 * (b - a);
    let mut k_sum = [0.0; N];
    let mut g_sum = [0.0; N];
    for c in 0..N {
        let mut kr = WGK[7] * values[14][c];
        let mut ga = WG[3] * values[14][c];
        for k in 0..7 {
            let pair = values[2 * k][c] + values[2 * k + 1][c];
            kr += WGK[k] * pair;
            if k % 2 == 1 {
                ga += WG[k / 2] * pair;
            }
        }
        k_sum[c] = kr * half;
        g_sum[c] = ga * half;
    }
    let mut err = [0.0; N];
    for c in 0..N {
        err[c] = (k_sum[c] - g_sum[c]).abs();
    }
    (k_sum, err)
}

/// Integrates `f` over `[a, b]`, bisecting panels until every component's
/// error estimate is below `rel_tol` times its magnitude (or `abs_tol`).
///
/// `f` receives the 15 panel nodes at once so callers can share work between them.
pub(crate) fn integrate<const N: usize, F>(
    f: F,
    a: f64,
    b: f64,
    initial_panels: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; 15]) -> Result<[[f64; N]; 15]>,
{
    let width = (b - a) / initial_panels as f64;
    let mut panels: Vec<(f64, f64, [f64; N], [f64; N])> = Vec::new();
    for k in 0..initial_panels {
        let (lo, hi) = (a + k as f64 * width, a + (k + 1) as f64 * width);
        let (v, e) = panel(lo, hi, &f(lo, &panel_nodes(lo, hi))?);
        panels.push((lo, hi, v, e));
    }
    for _ in 0..2000 {
        let mut total = [0.0; N];
        let mut err = [0.0; N];
        for p in &panels {
            for c in 0..N {
                total[c] += p.2[c];
                err[c] += p.3[c];
            }
        }
        let converged = (0..N).all(|c| err[c] <= (rel_tol * total[c].abs()).max(abs_tol));
        if converged {
            return Ok(total);
        }
        // split the panel with the largest relative contribution to the error
        let worst = (0..panels.len())
            .max_by(|&i, &j| {
                let score = |p: &(f64, f64, [f64; N], [f64; N])| {
                    (0..N).map(|c| p.3[c] / (rel_tol * total[c].abs()).max(abs_tol)).fold(0.0, f64::max)
                };
                score(&panels[i]).total_cmp(&score(&panels[j]))
            })
            .expect("at least one panel");
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        for (l, h) in [(lo, mid), (mid, hi)] {
            let (v, e) = panel(l, h, &f(l, &panel_nodes(l, h))?);
            panels.push((l, h, v, e));
        }
    }
    Err(Error::Integration("adaptive quadrature did not converge".into()))
}
