//! Reproducible random streams.
//!
//! A stream is ChaCha20 keyed by a 64-bit seed. Independent sub-streams for
//! parallel work are selected with the cipher's stream counter, so the draws of
//! sub-stream `i` depend only on `(seed, i)` and never on scheduling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::matrix::{CMatrix, C64};

#[derive(Debug, Clone)]
pub struct RandomStream {
    inner: ChaCha20Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream { inner: ChaCha20Rng::seed_from_u64(seed) }
    }

    /// Sub-stream `index` of the master `seed`.
    pub fn split(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(index);
        RandomStream { inner }
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open_low(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open_low();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Index drawn with probability proportional to `weights`.
    pub fn choose_weighted(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut target = self.uniform() * total;
        for (k, w) in weights.iter().enumerate() {
            if target < *w {
                return k;
            }
            target -= w;
        }
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

pub fn seeded_rng(seed: u64) -> RandomStream {
    RandomStream::new(seed)
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn random_unitary(d: usize, rng: &mut RandomStream) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| C64::new(rng.normal(), rng.normal()));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random Hermitian matrix with independent Gaussian entries.
pub fn random_hermitian(d: usize, rng: &mut RandomStream) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| C64::new(rng.normal(), rng.normal()));
    (&g + g.adjoint()) * C64::new(0.5, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_identical_streams() {
        let mut a = seeded_rng(0);
        let mut b = seeded_rng(0);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn different_seeds_differ() {
        let mut a = seeded_rng(0);
        let mut b = seeded_rng(1);
        let same = (0..100).filter(|_| a.uniform() == b.uniform()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn sub_streams_are_distinct_and_reproducible() {
        let x: Vec<f64> = {
            let mut s = RandomStream::split(7, 3);
            (0..10).map(|_| s.uniform()).collect()
        };
        let y: Vec<f64> = {
            let mut s = RandomStream::split(7, 3);
            (0..10).map(|_| s.uniform()).collect()
        };
        let z: Vec<f64> = {
            let mut s = RandomStream::split(7, 4);
            (0..10).map(|_| s.uniform()).collect()
        };
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = seeded_rng(3);
        let u = random_unitary(5, &mut rng);
        assert!(super::super::matrix::is_unitary(&u, 1e-12));
    }

    #[test]
    fn uniform_mean_law_of_large_numbers() {
        // sd of the mean is 1/sqrt(12 n) ~ 2.9e-4; 0.002 is ~7 sd
        let mut s = seeded_rng(42);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.uniform()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean {mean}");
    }
}
