//! Quantum-jump sampling of tick records, for one clock or for two clocks
//! writing to a shared register.
//!
//! Trajectory `i` of a batch draws from sub-stream `i` of the master seed
//! (pairs use sub-streams `2i` and `2i + 1`), so a batch is the same whether it
//! runs on one thread or many.

mod sampler;

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::clock_model::{require_elementary, ClockSpec};
use crate::error::{Error, Result};
use crate::numerics::matrix::{identity, kron, max_abs, CMatrix, CVector};
use crate::numerics::RandomStream;
use sampler::{Channel, Sampler};

/// Arrival times of one clock's ticks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickRecord {
    pub clock_id: usize,
    pub tick_times: Vec<f64>,
    pub horizon: f64,
}

impl TickRecord {
    /// Number of ticks at or before `t`.
    pub fn count_at(&self, t: f64) -> usize {
        self.tick_times.partition_point(|&x| x <= t)
    }

    pub fn gaps(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.tick_times
            .iter()
            .map(|&t| {
                let g = t - prev;
                prev = t;
                g
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    A,
    B,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::A => "A",
            Label::B => "B",
        })
    }
}

/// Ticks of two clocks in the order they were written to the shared register.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TickSequence {
    pub entries: Vec<(Label, f64)>,
    pub horizon: f64,
}

impl TickSequence {
    /// Time-ordered merge. Equal times put `A` first.
    pub fn merge(a: &TickRecord, b: &TickRecord) -> Self {
        let mut entries: Vec<(Label, f64)> =
            a.tick_times.iter().map(|&t| (Label::A, t)).chain(b.tick_times.iter().map(|&t| (Label::B, t))).collect();
        entries.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        TickSequence { entries, horizon: a.horizon.min(b.horizon) }
    }

    pub fn times_of(&self, label: Label) -> Vec<f64> {
        self.entries.iter().filter(|e| e.0 == label).map(|e| e.1).collect()
    }

    /// `N_label(t)`: ticks of `label` at or before `t`.
    pub fn count(&self, label: Label, t: f64) -> usize {
        self.entries.iter().filter(|e| e.0 == label && e.1 <= t).count()
    }

    pub fn record_of(&self, label: Label) -> TickRecord {
        TickRecord {
            clock_id: match label {
                Label::A => 0,
                Label::B => 1,
            },
            tick_times: self.times_of(label),
            horizon: self.horizon,
        }
    }
}

/// Final conditional clockwork state together with its tick record.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub record: TickRecord,
    pub final_state: CVector,
}

fn clock_sampler(spec: &ClockSpec) -> Result<Sampler<()>> {
    require_elementary(spec, "trajectory sampling")?;
    let channels =
        spec.jumps.iter().map(|j| Channel { op: j.scaled_op(), mark: (j.delta == 1).then_some(()) }).collect();
    Sampler::new(&spec.hamiltonian, channels, &spec.initial)
}

fn run_clock(sampler: &Sampler<()>, id: usize, horizon: f64, mut rng: RandomStream) -> Result<TrajectoryOutcome> {
    let r = sampler.run(horizon, &mut rng)?;
    Ok(TrajectoryOutcome {
        record: TickRecord { clock_id: id, tick_times: r.events.iter().map(|e| e.1).collect(), horizon },
        final_state: r.final_state,
    })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))
}

pub fn sample_trajectory(spec: &ClockSpec, horizon: f64, seed: u64) -> Result<TickRecord> {
    let sampler = clock_sampler(spec)?;
    Ok(run_clock(&sampler, 0, horizon, RandomStream::split(seed, 0))?.record)
}

/// `n` independent trajectories; `threads = 0` uses all cores.
pub fn sample_trajectories(
    spec: &ClockSpec,
    horizon: f64,
    n: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<TickRecord>> {
    Ok(sample_outcomes(spec, horizon, n, seed, threads)?.into_iter().map(|o| o.record).collect())
}

/// Like [`sample_trajectories`], also returning each trajectory's clockwork state at the horizon.
pub fn sample_outcomes(
    spec: &ClockSpec,
    horizon: f64,
    n: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<TrajectoryOutcome>> {
    let sampler = clock_sampler(spec)?;
    pool(threads)?.install(|| {
        (0..n).into_par_iter().map(|i| run_clock(&sampler, i, horizon, RandomStream::split(seed, i as u64))).collect()
    })
}

pub fn sample_pair(spec_a: &ClockSpec, spec_b: &ClockSpec, horizon: f64, seed: u64) -> Result<TickSequence> {
    Ok(sample_pairs(spec_a, spec_b, horizon, 1, seed, 1)?.remove(0))
}

pub fn sample_pairs(
    spec_a: &ClockSpec,
    spec_b: &ClockSpec,
    horizon: f64,
    n: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<TickSequence>> {
    let sa = clock_sampler(spec_a)?;
    let sb = clock_sampler(spec_b)?;
    pool(threads)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let a = run_clock(&sa, 0, horizon, RandomStream::split(seed, 2 * i as u64))?;
                let b = run_clock(&sb, 1, horizon, RandomStream::split(seed, 2 * i as u64 + 1))?;
                Ok(TickSequence::merge(&a.record, &b.record))
            })
            .collect()
    })
}

/// Two clocks on a joint clockwork `C_A ⊗ C_B`, optionally coupled by an
/// interaction Hamiltonian.
#[derive(Debug, Clone)]
pub struct JointSpec {
    pub a: ClockSpec,
    pub b: ClockSpec,
    pub interaction: Option<CMatrix>,
}

impl JointSpec {
    pub fn independent(a: ClockSpec, b: ClockSpec) -> Self {
        JointSpec { a, b, interaction: None }
    }

    fn is_interacting(&self) -> bool {
        self.interaction.as_ref().is_some_and(|h| max_abs(h) > 0.0)
    }

    /// Samples by merging independent trajectories; interacting clocks are rejected.
    pub fn sample(&self, horizon: f64, n: usize, seed: u64, threads: usize) -> Result<Vec<TickSequence>> {
        if self.is_interacting() {
            return Err(Error::Unsupported("clocks coupled by an interaction Hamiltonian".into()));
        }
        sample_pairs(&self.a, &self.b, horizon, n, seed, threads)
    }

    /// Samples one trajectory of the joint generator directly on `C_A ⊗ C_B`.
    /// Only small joint clockworks are accepted.
    pub fn sample_direct(&self, horizon: f64, seed: u64) -> Result<TickSequence> {
        require_elementary(&self.a, "joint sampling")?;
        require_elementary(&self.b, "joint sampling")?;
        let (da, db) = (self.a.dim, self.b.dim);
        if da * db > 9 {
            return Err(Error::Unsupported(format!("joint clockwork dimension {} exceeds 9", da * db)));
        }
        let (ia, ib) = (identity(da), identity(db));
        let mut h = kron(&self.a.hamiltonian, &ib) + kron(&ia, &self.b.hamiltonian);
        if let Some(v) = &self.interaction {
            if v.shape() != h.shape() {
                return Err(Error::Dimension(format!("interaction is {:?}, expected {:?}", v.shape(), h.shape())));
            }
            h += v;
        }
        let mut channels = Vec::new();
        for j in &self.a.jumps {
            channels.push(Channel { op: kron(&j.scaled_op(), &ib), mark: (j.delta == 1).then_some(Label::A) });
        }
        for j in &self.b.jumps {
            channels.push(Channel { op: kron(&ia, &j.scaled_op()), mark: (j.delta == 1).then_some(Label::B) });
        }
        let sampler = Sampler::new(&h, channels, &kron(&self.a.initial, &self.b.initial))?;
        let mut rng = RandomStream::split(seed, 0);
        let r = sampler.run(horizon, &mut rng)?;
        Ok(TickSequence { entries: r.events, horizon })
    }
}

/// Empirical `P(N_B = m)` at the moment of A's `n`-th tick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelativeCountDistribution {
    pub n: usize,
    pub pmf: Vec<f64>,
    /// 95% Wilson score interval per bin.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub samples: usize,
}

pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn relative_counts(seqs: &[TickSequence], n: usize) -> Result<RelativeCountDistribution> {
    if n == 0 {
        return Err(Error::Precondition("tick index starts at 1".into()));
    }
    let mut counts: Vec<usize> = Vec::new();
    let mut deficient = Vec::new();
    for (i, s) in seqs.iter().enumerate() {
        let mut seen_a = 0;
        let mut seen_b = 0;
        let mut hit = None;
        for (label, _) in &s.entries {
            match label {
                Label::A => {
                    seen_a += 1;
                    if seen_a == n {
                        hit = Some(seen_b);
                        break;
                    }
                }
                Label::B => seen_b += 1,
            }
        }
        match hit {
            Some(m) => {
                if counts.len() <= m {
                    counts.resize(m + 1, 0);
                }
                counts[m] += 1;
            }
            None => deficient.push(i),
        }
    }
    if !deficient.is_empty() {
        let shown: Vec<String> = deficient.iter().take(10).map(|i| i.to_string()).collect();
        return Err(Error::Data(format!(
            "{} sequence(s) have fewer than {n} ticks of A: indices {}{}",
            deficient.len(),
            shown.join(", "),
            if deficient.len() > 10 { ", ..." } else { "" }
        )));
    }
    let total = seqs.len();
    if total == 0 {
        return Err(Error::Data("no sequences".into()));
    }
    let pmf = counts.iter().map(|&k| k as f64 / total as f64).collect();
    let (lower, upper) = counts.iter().map(|&k| wilson_interval(k, total, 1.96)).unzip();
    Ok(RelativeCountDistribution { n, pmf, lower, upper, samples: total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_is_time_ordered_with_a_first_on_ties() {
        let a = TickRecord { clock_id: 0, tick_times: vec![1.0, 2.0], horizon: 3.0 };
        let b = TickRecord { clock_id: 1, tick_times: vec![0.5, 2.0], horizon: 3.0 };
        let s = TickSequence::merge(&a, &b);
        let labels: Vec<Label> = s.entries.iter().map(|e| e.0).collect();
        assert_eq!(labels, vec![Label::B, Label::A, Label::A, Label::B]);
        assert_eq!(s.record_of(Label::A).tick_times, a.tick_times);
        assert_eq!(s.count(Label::B, 2.0), 2);
    }

    #[test]
    fn interleaved_deterministic_clocks() {
        let a = TickRecord { clock_id: 0, tick_times: vec![1.0, 2.0, 3.0], horizon: 4.0 };
        let b = TickRecord { clock_id: 1, tick_times: vec![0.5, 1.5, 2.5], horizon: 4.0 };
        let d = relative_counts(&[TickSequence::merge(&a, &b)], 1).unwrap();
        assert_eq!(d.pmf, vec![0.0, 1.0]);
    }

    #[test]
    fn deficient_sequences_are_named() {
        let a = TickRecord { clock_id: 0, tick_times: vec![1.0], horizon: 4.0 };
        let b = TickRecord { clock_id: 1, tick_times: vec![], horizon: 4.0 };
        let s = TickSequence::merge(&a, &b);
        match relative_counts(&[s.clone(), s], 2) {
            Err(Error::Data(msg)) => assert!(msg.contains("0, 1"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn records_are_strictly_increasing_and_reproducible() {
        let spec = ClockSpec::erlang(2, 1.0);
        let r1 = sample_trajectory(&spec, 50.0, 9).unwrap();
        let r2 = sample_trajectory(&spec, 50.0, 9).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.tick_times.windows(2).all(|w| w[0] < w[1]));
        assert!(r1.tick_times.iter().all(|&t| t <= 50.0));
        assert!(!r1.tick_times.is_empty());
    }

    #[test]
    fn interacting_clocks_are_unsupported() {
        let mut v = CMatrix::zeros(1, 1);
        v[(0, 0)] = crate::numerics::matrix::ONE;
        let joint = JointSpec { a: ClockSpec::poisson(1.0), b: ClockSpec::poisson(1.0), interaction: Some(v) };
        assert!(matches!(joint.sample(1.0, 1, 0, 1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
    }
}
