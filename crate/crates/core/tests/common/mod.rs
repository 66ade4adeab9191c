#![allow(dead_code)]

use std::path::PathBuf;

use tickwork::clock_model::io::{load_spec, LoadedSpec};
use tickwork::clock_model::ClockSpec;
use tickwork::numerics::{CMatrix, RandomStream, C64};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn elementary_fixture(name: &str) -> ClockSpec {
    match load_spec(fixture(name)).unwrap() {
        LoadedSpec::Elementary(s) => s,
        LoadedSpec::General(_) => panic!("{name} is not an elementary spec"),
    }
}

/// Every elementary fixture on disk with its file name.
pub fn fixture_clocks() -> Vec<(&'static str, ClockSpec)> {
    ["poisson.json", "erlang3.json", "coherent.json", "branching.json"]
        .into_iter()
        .map(|n| (n, elementary_fixture(n)))
        .collect()
}

/// `e^{-λ} λⁿ / n!` by recurrence.
pub fn poisson_pmf(lambda: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut p = (-lambda).exp();
    for n in 0..=n_max {
        out.push(p);
        p *= lambda / (n + 1) as f64;
    }
    out
}

/// Erlang-`d` waiting density with rate `g` per stage.
pub fn erlang_density(d: usize, g: f64, t: f64) -> f64 {
    let mut fact = 1.0;
    for k in 1..d {
        fact *= k as f64;
    }
    g.powi(d as i32) * t.powi(d as i32 - 1) * (-g * t).exp() / fact
}

/// `P(N(t) = n)` for an Erlang-`d` renewal process started at a tick:
/// `n` complete ticks means `nd..nd+d-1` Poisson stage events.
pub fn erlang_count_pmf(d: usize, g: f64, t: f64, n_max: usize) -> Vec<f64> {
    let stages = poisson_pmf(g * t, (n_max + 1) * d);
    (0..=n_max).map(|n| stages[n * d..(n + 1) * d].iter().sum()).collect()
}

/// Random density matrix `G G† / tr`.
pub fn random_density(d: usize, rng: &mut RandomStream) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| C64::new(rng.normal(), rng.normal()));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    rho / tr
}

pub fn random_hermitian_matrix(d: usize, rng: &mut RandomStream) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| C64::new(rng.normal(), rng.normal()));
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}
