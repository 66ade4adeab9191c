//! Generators of clock dynamics and evolution on clockwork ⊗ register.
//!
//! The register is kept as a list of clockwork blocks, one per tick count
//! `n ∈ {0..n_max}`. Mass that would leave the window is clamped to the
//! nearest end, so the top bin absorbs overflow and total trace is conserved.

mod full_space;
mod integrator;

pub use full_space::FullSpaceModel;
pub(crate) use integrator::propagate;

use crate::clock_model::{validate_elementary, ClockSpec};
use crate::error::{Error, Result};
use crate::numerics::matrix::{hermitian_part, norm_one, zeros, CMatrix, CVector, C64};
use crate::numerics::{unvectorize, vectorize, SuperOperator};

/// Per-unit-time absolute tolerance of the register integrator.
pub const INTEGRATOR_TOL: f64 = 1e-9;

/// Top-bin mass above which moments are considered truncated.
pub const LEAK_TOL: f64 = 1e-8;

/// The generator split by register shift: `𝓛(χ) = 𝓛₀ + Σ_{Δ≠0} e^{iΔχ} 𝓛_Δ`.
#[derive(Debug, Clone)]
pub struct ShiftDecomposition {
    pub l0: SuperOperator,
    /// Completely positive parts `Σ γ L · L†` for each nonzero shift, sorted by shift.
    pub shifted: Vec<(i32, SuperOperator)>,
}

impl ShiftDecomposition {
    pub fn new(spec: &ClockSpec) -> Self {
        let mut l0 = SuperOperator::hamiltonian(&spec.hamiltonian);
        let mut shifted: Vec<(i32, SuperOperator)> = Vec::new();
        for j in &spec.jumps {
            let l = j.scaled_op();
            let ldl = l.adjoint() * &l;
            l0 = l0 - (SuperOperator::left(&ldl) + SuperOperator::right(&ldl)) * 0.5;
            let cp = SuperOperator::conjugation(&l);
            if j.delta == 0 {
                l0 = l0 + cp;
            } else {
                match shifted.iter_mut().find(|(delta, _)| *delta == j.delta) {
                    Some((_, s)) => *s = &*s + &cp,
                    None => shifted.push((j.delta, cp)),
                }
            }
        }
        shifted.sort_by_key(|(delta, _)| *delta);
        ShiftDecomposition { l0, shifted }
    }

    pub fn dim(&self) -> usize {
        self.l0.dim()
    }

    /// `𝓛_Δ` for a nonzero shift, or the zero map if no term has that shift.
    pub fn part(&self, delta: i32) -> SuperOperator {
        if delta == 0 {
            return self.l0.clone();
        }
        self.shifted
            .iter()
            .find(|(d, _)| *d == delta)
            .map(|(_, s)| s.clone())
            .unwrap_or_else(|| SuperOperator::zero(self.dim()))
    }

    pub fn tilted(&self, chi: f64) -> SuperOperator {
        let mut g = self.l0.clone();
        for (delta, s) in &self.shifted {
            g = g + s.clone() * C64::from_polar(1.0, *delta as f64 * chi);
        }
        g
    }
}

/// Tilted clockwork generator `𝓛(χ)`; at `χ = 0` the reduced generator.
pub fn build_generator(spec: &ClockSpec, chi: f64) -> Result<SuperOperator> {
    validate_elementary(spec)?;
    Ok(ShiftDecomposition::new(spec).tilted(chi))
}

/// Finite tick-count window with an absorbing top bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedRegister {
    pub n_max: usize,
}

impl TruncatedRegister {
    pub fn new(n_max: usize) -> Self {
        TruncatedRegister { n_max }
    }

    /// Where a shift of `delta` from `n` lands.
    pub fn route(&self, n: usize, delta: i32) -> usize {
        (n as i64 + delta as i64).clamp(0, self.n_max as i64) as usize
    }
}

/// Sub-normalized clockwork states `p_{n|t} ρ_{n|t}` for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockState {
    pub components: Vec<CMatrix>,
    pub time: f64,
}

impl ClockState {
    /// All mass in register bin 0 with clockwork state `rho`.
    pub fn initial(rho: &CMatrix, n_max: usize) -> Self {
        let d = rho.nrows();
        let mut components = vec![zeros(d, d); n_max + 1];
        components[0] = rho.clone();
        ClockState { components, time: 0.0 }
    }

    pub fn from_spec(spec: &ClockSpec, n_max: usize) -> Self {
        ClockState::initial(&spec.initial, n_max)
    }

    pub fn n_max(&self) -> usize {
        self.components.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.components[0].nrows()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.components.iter().map(|m| m.trace().re).collect()
    }

    pub fn distribution(&self) -> TickNumberDistribution {
        TickNumberDistribution { time: self.time, probabilities: self.probabilities() }
    }

    pub fn total_trace(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    fn to_vector(&self) -> CVector {
        let d2 = self.dim() * self.dim();
        let mut v = CVector::zeros(d2 * self.components.len());
        for (n, m) in self.components.iter().enumerate() {
            v.rows_mut(n * d2, d2).copy_from(&vectorize(m));
        }
        v
    }

    fn from_vector(v: &CVector, d: usize, time: f64) -> Self {
        let d2 = d * d;
        let blocks = v.len() / d2;
        let components =
            (0..blocks).map(|n| hermitian_part(&unvectorize(&v.rows(n * d2, d2).into_owned(), d))).collect();
        ClockState { components, time }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickNumberDistribution {
    pub time: f64,
    pub probabilities: Vec<f64>,
}

impl TickNumberDistribution {
    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.probabilities.iter().enumerate().map(|(n, p)| (n as f64 - m).powi(2) * p).sum()
    }
}

/// The register-routed generator acting on stacked block vectors.
#[derive(Debug, Clone)]
pub struct Evolver {
    dim: usize,
    register: TruncatedRegister,
    l0: CMatrix,
    shifted: Vec<(i32, CMatrix)>,
    norm_bound: f64,
}

impl Evolver {
    pub fn new(spec: &ClockSpec, n_max: usize) -> Result<Self> {
        validate_elementary(spec)?;
        let dec = ShiftDecomposition::new(spec);
        let l0 = dec.l0.matrix().clone();
        let shifted: Vec<(i32, CMatrix)> = dec.shifted.iter().map(|(d, s)| (*d, s.matrix().clone())).collect();
        let norm_bound = norm_one(&l0) + shifted.iter().map(|(_, m)| norm_one(m)).sum::<f64>();
        Ok(Evolver { dim: spec.dim, register: TruncatedRegister::new(n_max), l0, shifted, norm_bound })
    }

    pub fn register(&self) -> TruncatedRegister {
        self.register
    }

    fn apply(&self, x: &CVector) -> CVector {
        let d2 = self.dim * self.dim;
        let blocks = self.register.n_max + 1;
        let mut out = CVector::zeros(d2 * blocks);
        for n in 0..blocks {
            let xn = x.rows(n * d2, d2);
            let mut target = out.rows_mut(n * d2, d2);
            target += &self.l0 * xn;
            for (delta, m) in &self.shifted {
                let to = self.register.route(n, *delta);
                let mut target = out.rows_mut(to * d2, d2);
                target += m * xn;
            }
        }
        out
    }

    /// Generator action on a register state, blockwise.
    pub fn derivative(&self, state: &ClockState) -> Vec<CMatrix> {
        let v = self.apply(&state.to_vector());
        let d2 = self.dim * self.dim;
        (0..=self.register.n_max).map(|n| unvectorize(&v.rows(n * d2, d2).into_owned(), self.dim)).collect()
    }

    pub fn evolve(&self, state: &ClockState, dt: f64) -> Result<ClockState> {
        if !(dt >= 0.0) {
            return Err(Error::Precondition(format!("time step {dt} must be >= 0")));
        }
        if state.n_max() != self.register.n_max || state.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "state has {} blocks of dimension {}, evolver expects {} of dimension {}",
                state.components.len(),
                state.dim(),
                self.register.n_max + 1,
                self.dim
            )));
        }
        if dt == 0.0 {
            return Ok(state.clone());
        }
        let apply = |v: &CVector| self.apply(v);
        let v = propagate(&apply, self.norm_bound, &state.to_vector(), dt, INTEGRATOR_TOL)?;
        Ok(ClockState::from_vector(&v, self.dim, state.time + dt))
    }

    /// States at each of `times` (absolute, any order), starting from `state0`.
    pub fn trajectory(&self, state0: &ClockState, times: &[f64]) -> Result<Vec<ClockState>> {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut out: Vec<Option<ClockState>> = vec![None; times.len()];
        let mut current = state0.clone();
        for &k in &order {
            let dt = times[k] - current.time;
            if dt < 0.0 {
                return Err(Error::Precondition(format!(
                    "time {} precedes the initial time {}",
                    times[k], state0.time
                )));
            }
            current = self.evolve(&current, dt)?;
            out[k] = Some(current.clone());
        }
        Ok(out.into_iter().map(|s| s.expect("every time visited")).collect())
    }
}

pub fn evolve(spec: &ClockSpec, state: &ClockState, dt: f64) -> Result<ClockState> {
    Evolver::new(spec, state.n_max())?.evolve(state, dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentPoint {
    pub time: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Mean and variance of the tick count at each time.
///
/// Fails with a truncation-leak error if the top register bin holds more than
/// [`LEAK_TOL`] at any requested time.
pub fn tick_number_moments(spec: &ClockSpec, state0: &ClockState, times: &[f64]) -> Result<Vec<MomentPoint>> {
    let ev = Evolver::new(spec, state0.n_max())?;
    let states = ev.trajectory(state0, times)?;
    let mut worst: Option<(f64, f64, f64)> = None;
    let mut out = Vec::with_capacity(states.len());
    for s in &states {
        let dist = s.distribution();
        let top = *dist.probabilities.last().expect("nonempty register");
        if top > LEAK_TOL && worst.map_or(true, |(w, _, _)| top > w) {
            worst = Some((top, dist.mean(), dist.variance()));
        }
        out.push(MomentPoint { time: s.time, mean: dist.mean(), variance: dist.variance() });
    }
    if let Some((top_mass, mean, var)) = worst {
        let n_max = state0.n_max();
        let suggested = (2 * n_max).max((mean + 12.0 * var.sqrt() + 16.0).ceil() as usize);
        return Err(Error::TruncationLeak { top_mass, suggested_n_max: suggested });
    }
    Ok(out)
}

/// Density of the arrival time of tick `n`, `-d/dt Σ_{m<n} p_{m|t}`, evaluated
/// through the generator action at each grid point.
pub fn time_of_arrival_density(spec: &ClockSpec, state0: &ClockState, n: usize, grid: &[f64]) -> Result<Vec<f64>> {
    let flags = validate_elementary(spec)?;
    if !flags.irreversible_ticks {
        return Err(Error::Precondition("arrival times need irreversible ticks".into()));
    }
    if n == 0 || n > state0.n_max() {
        return Err(Error::Precondition(format!("tick index {n} must lie in 1..={}", state0.n_max())));
    }
    let ev = Evolver::new(spec, state0.n_max())?;
    let states = ev.trajectory(state0, grid)?;
    Ok(states
        .iter()
        .map(|s| {
            let deriv = ev.derivative(s);
            -deriv[..n].iter().map(|m| m.trace().re).sum::<f64>()
        })
        .collect())
}

/// Largest 1-norm column sum of the no-tick generator, used as the clock's rate scale.
pub fn max_rate(spec: &ClockSpec) -> f64 {
    norm_one(ShiftDecomposition::new(spec).l0.matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock_model::JumpTerm;
    use crate::numerics::matrix::{ket_bra, max_abs};

    fn poisson_pmf(lambda: f64, n: usize) -> f64 {
        let mut p = (-lambda).exp();
        for k in 1..=n {
            p *= lambda / k as f64;
        }
        p
    }

    #[test]
    fn poisson_tilted_generator_is_scalar() {
        let g = build_generator(&ClockSpec::poisson(0.8), 0.4).unwrap();
        let want = C64::from_polar(1.0, 0.4) * 0.8 - 0.8;
        assert!((g.matrix()[(0, 0)] - want).norm() < 1e-15);
    }

    #[test]
    fn tilt_by_pi_flips_tick_part() {
        let spec = ClockSpec::erlang(3, 1.0);
        let dec = ShiftDecomposition::new(&spec);
        let lhs = build_generator(&spec, std::f64::consts::PI).unwrap();
        let rhs = &dec.l0 - &dec.part(1);
        assert!(max_abs(&(lhs.matrix() - rhs.matrix())) < 1e-15);
    }

    #[test]
    fn zero_step_is_identity() {
        let spec = ClockSpec::erlang(2, 1.0);
        let s = ClockState::from_spec(&spec, 4);
        assert_eq!(evolve(&spec, &s, 0.0).unwrap(), s);
    }

    #[test]
    fn poisson_register_matches_pmf() {
        let spec = ClockSpec::poisson(1.0);
        let s = evolve(&spec, &ClockState::from_spec(&spec, 64), 2.0).unwrap();
        let p = s.probabilities();
        for (n, pn) in p.iter().enumerate() {
            assert!((pn - poisson_pmf(2.0, n)).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn absorbing_top_bin_conserves_trace() {
        let spec = ClockSpec::poisson(3.0);
        let s = evolve(&spec, &ClockState::from_spec(&spec, 3), 5.0).unwrap();
        assert!((s.total_trace() - 1.0).abs() < 1e-10);
        assert!(s.probabilities()[3] > 0.9);
    }

    #[test]
    fn backward_jumps_clamp_at_zero() {
        let mut spec = ClockSpec::poisson(1.0);
        spec.jumps.push(JumpTerm::new(-1, 1.0, ket_bra(1, 0, 0)));
        let s = evolve(&spec, &ClockState::from_spec(&spec, 10), 1.0).unwrap();
        assert!((s.total_trace() - 1.0).abs() < 1e-10);
        assert!(time_of_arrival_density(&spec, &ClockState::from_spec(&spec, 10), 1, &[1.0]).is_err());
    }

    #[test]
    fn leak_is_reported() {
        let spec = ClockSpec::poisson(1.0);
        match tick_number_moments(&spec, &ClockState::from_spec(&spec, 5), &[1.0, 10.0]) {
            Err(Error::TruncationLeak { suggested_n_max, .. }) => assert!(suggested_n_max > 10),
            other => panic!("expected leak, got {other:?}"),
        }
    }

    #[test]
    fn poisson_first_arrival_is_exponential() {
        let spec = ClockSpec::poisson(1.5);
        let grid = [0.0, 0.3, 1.0, 2.0];
        let dens = time_of_arrival_density(&spec, &ClockState::from_spec(&spec, 30), 1, &grid).unwrap();
        for (t, w) in grid.iter().zip(dens) {
            assert!((w - 1.5 * (-1.5 * t).exp()).abs() < 1e-8);
        }
    }
}
