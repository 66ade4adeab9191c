mod common;

use tickwork::clock_model::ClockSpec;
use tickwork::evolution::{ClockState, Evolver};
use tickwork::statistics::waiting_time;
use tickwork::trajectories::{
    relative_counts, sample_outcomes, sample_pairs, sample_trajectories, JointSpec, Label, TickRecord, TickSequence,
};

#[test]
fn records_do_not_depend_on_thread_count() {
    let spec = ClockSpec::coherent_two_level(1.0, 0.8);
    let one = sample_trajectories(&spec, 20.0, 64, 99, 1).unwrap();
    for threads in [2, 4] {
        assert_eq!(one, sample_trajectories(&spec, 20.0, 64, 99, threads).unwrap());
    }
    let pairs = sample_pairs(&spec, &ClockSpec::poisson(1.0), 10.0, 32, 5, 1).unwrap();
    assert_eq!(pairs, sample_pairs(&spec, &ClockSpec::poisson(1.0), 10.0, 32, 5, 3).unwrap());
}

/// Bin-wise comparison of `Σ_traj |ψ⟩⟨ψ| [N = n] / N_traj` with the
/// register components of the master equation.
#[test]
fn averaged_conditional_states_match_master_equation() {
    let spec = ClockSpec::coherent_two_level(1.0, 0.8);
    let mu = waiting_time(&spec, &spec.initial, &[]).unwrap().mu;
    let horizon = 5.0 * mu;
    let n_traj = 10_000;
    let outcomes = sample_outcomes(&spec, horizon, n_traj, 2024, 0).unwrap();
    let n_max = 40;
    let exact = Evolver::new(&spec, n_max).unwrap().evolve(&ClockState::from_spec(&spec, n_max), horizon).unwrap();
    let d = spec.dim;
    let mut sums = vec![vec![0.0f64; 2 * d * d]; n_max + 1];
    let mut squares = sums.clone();
    for o in &outcomes {
        let n = o.record.tick_times.len().min(n_max);
        let rho = &o.final_state * o.final_state.adjoint();
        for (k, z) in rho.iter().enumerate() {
            for (part, v) in [(0, z.re), (1, z.im)] {
                sums[n][2 * k + part] += v;
                squares[n][2 * k + part] += v * v;
            }
        }
    }
    let total = n_traj as f64;
    for n in 0..=n_max {
        for (k, z) in exact.components[n].iter().enumerate() {
            for (part, target) in [(0, z.re), (1, z.im)] {
                let mean = sums[n][2 * k + part] / total;
                let var = (squares[n][2 * k + part] / total - mean * mean).max(0.0);
                let sigma = (var / total).sqrt().max(1e-4);
                assert!((mean - target).abs() < 5.0 * sigma, "bin {n}, entry {k}: {mean} vs {target}");
            }
        }
    }
}

#[test]
fn poisson_pair_first_tick_is_a_fair_race() {
    let p = ClockSpec::poisson(1.0);
    let seqs = sample_pairs(&p, &p, 40.0, 20_000, 3, 0).unwrap();
    let dist = relative_counts(&seqs, 1).unwrap();
    for (m, q) in dist.pmf.iter().enumerate() {
        let exact = 0.5f64.powi(m as i32 + 1);
        let sigma = (exact * (1.0 - exact) / dist.samples as f64).sqrt();
        assert!((q - exact).abs() < 5.0 * sigma + 1e-12, "m = {m}");
    }
}

#[test]
fn joint_sampler_agrees_with_merged_clocks() {
    let joint = JointSpec::independent(ClockSpec::poisson(1.0), ClockSpec::erlang(2, 2.0));
    let n = 4000;
    let direct: Vec<TickSequence> = (0..n).map(|s| joint.sample_direct(30.0, s).unwrap()).collect();
    let merged = joint.sample(30.0, n as usize, 77, 0).unwrap();
    let a = relative_counts(&direct, 1).unwrap();
    let b = relative_counts(&merged, 1).unwrap();
    for m in 0..3 {
        let pa = a.pmf.get(m).copied().unwrap_or(0.0);
        let pb = b.pmf.get(m).copied().unwrap_or(0.0);
        let sigma = ((pa * (1.0 - pa) + pb * (1.0 - pb)) / n as f64).sqrt();
        assert!((pa - pb).abs() < 5.0 * sigma + 1e-3, "m = {m}: {pa} vs {pb}");
    }
}

#[test]
fn merged_sequence_is_sorted_and_complete() {
    let a = TickRecord { clock_id: 0, tick_times: vec![0.3, 1.0, 1.0, 4.0], horizon: 5.0 };
    let b = TickRecord { clock_id: 1, tick_times: vec![1.0, 2.0], horizon: 5.0 };
    let s = TickSequence::merge(&a, &b);
    assert_eq!(s.entries.len(), 6);
    for w in s.entries.windows(2) {
        assert!(w[0].1 < w[1].1 || (w[0].1 == w[1].1 && (w[0].0 == w[1].0 || w[0].0 == Label::A)));
    }
    assert_eq!(s.times_of(Label::A), a.tick_times);
    assert_eq!(s.times_of(Label::B), b.tick_times);
}
