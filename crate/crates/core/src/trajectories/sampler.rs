//! Norm-decay unraveling of a Lindblad generator.
//!
//! Between jumps the unnormalized state follows `exp(-i H_eff t)` with
//! `H_eff = H - (i/2) Σ L†L`. A jump happens when `‖ψ(t)‖²` falls to a
//! uniform draw `r`. The crossing time is located by marching with a fixed
//! step `h` and then refining with precomputed propagators for `h / 2^k`,
//! which pins it down to `h · 2^-40`.

use crate::error::{Error, Result};
use crate::numerics::matrix::{c, hermitian_eigen, norm_one, CMatrix, CVector};
use crate::numerics::{matrix_exponential, RandomStream};

const REFINE_LEVELS: usize = 40;

/// One jump channel: the (rate-scaled) operator and what it writes, if anything.
#[derive(Debug, Clone)]
pub(crate) struct Channel<T> {
    pub op: CMatrix,
    pub mark: Option<T>,
}

#[derive(Debug, Clone)]
pub(crate) struct Sampler<T> {
    channels: Vec<Channel<T>>,
    step: f64,
    propagators: Vec<CMatrix>,
    initial: CMatrix,
}

pub(crate) struct Realization<T> {
    pub events: Vec<(T, f64)>,
    pub final_state: CVector,
}

fn norm_sqr(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

impl<T: Copy> Sampler<T> {
    pub fn new(hamiltonian: &CMatrix, channels: Vec<Channel<T>>, initial: &CMatrix) -> Result<Self> {
        let d = hamiltonian.nrows();
        let mut decay = CMatrix::zeros(d, d);
        for ch in &channels {
            decay += ch.op.adjoint() * &ch.op;
        }
        let h_eff = hamiltonian - &decay * c(0.0, 0.5);
        let scale = norm_one(&h_eff);
        let step = if scale > 0.0 { 0.5 / scale } else { 1.0 };
        let generator = &h_eff * c(0.0, -1.0);
        let propagators = (0..=REFINE_LEVELS)
            .map(|k| matrix_exponential(&generator, step * 0.5f64.powi(k as i32)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Sampler { channels, step, propagators, initial: initial.clone() })
    }

    fn initial_state(&self, rng: &mut RandomStream) -> CVector {
        let (values, vectors) = hermitian_eigen(&self.initial);
        let weights: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
        let k = rng.choose_weighted(&weights);
        vectors.column(k).into_owned()
    }

    /// Advances `psi` until its squared norm would drop to `r` or `t` reaches
    /// `horizon`. Returns `true` if a jump is due.
    fn advance(&self, psi: &mut CVector, t: &mut f64, r: f64, horizon: f64) -> bool {
        loop {
            if *t + self.step <= horizon {
                let cand = &self.propagators[0] * &*psi;
                if norm_sqr(&cand) > r {
                    *psi = cand;
                    *t += self.step;
                    continue;
                }
            }
            for k in 1..=REFINE_LEVELS {
                let dt = self.step * 0.5f64.powi(k as i32);
                if *t + dt > horizon {
                    continue;
                }
                let cand = &self.propagators[k] * &*psi;
                if norm_sqr(&cand) > r {
                    *psi = cand;
                    *t += dt;
                }
            }
            let resolution = self.step * 0.5f64.powi(REFINE_LEVELS as i32 - 1);
            if horizon - *t < resolution {
                *t = horizon;
                return false;
            }
            return true;
        }
    }

    pub fn run(&self, horizon: f64, rng: &mut RandomStream) -> Result<Realization<T>> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::Precondition(format!("horizon {horizon} must be finite and >= 0")));
        }
        let mut psi = self.initial_state(rng);
        let mut t = 0.0;
        let mut events = Vec::new();
        loop {
            let r = rng.uniform_open_low();
            let jump = self.advance(&mut psi, &mut t, r, horizon);
            if !jump {
                break;
            }
            let weights: Vec<f64> = self.channels.iter().map(|ch| norm_sqr(&(&ch.op * &psi))).collect();
            if weights.iter().sum::<f64>() <= 0.0 {
                // no channel can fire from here; nothing more will happen
                break;
            }
            let k = rng.choose_weighted(&weights);
            let next = &self.channels[k].op * &psi;
            let norm = norm_sqr(&next).sqrt();
            psi = next / c(norm, 0.0);
            if let Some(mark) = self.channels[k].mark {
                events.push((mark, t));
            }
        }
        let norm = norm_sqr(&psi).sqrt();
        let final_state = if norm > 0.0 { psi / c(norm, 0.0) } else { psi };
        Ok(Realization { events, final_state })
    }
}
