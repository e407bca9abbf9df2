//! Batch collection and gradient estimation through the `par` helpers
//! (rayon unless built with `--no-default-features`) against plain
//! sequential loops over the same work.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use commitment_lab::dcl::estimators::{batch_gradients, EntropyBonus, Target, Terms, View};
use commitment_lab::envs::{grid_game, prisoners_dilemma, repeated_conflict};
use commitment_lab::mcg::{rollout_batch, rollout_seeded, GameSpec, Protocol, RolloutOptions};
use commitment_lab::models::critic::CriticTable;
use commitment_lab::models::PolicySet;
use commitment_lab::par;

const OPTIONS: RolloutOptions = RolloutOptions { temperature: 1.0, protocol: Protocol::Commitment };

fn games() -> Vec<(&'static str, GameSpec, usize)> {
    vec![
        ("pd", prisoners_dilemma(), 128),
        ("grid4", grid_game(4, 16, 0.99).unwrap(), 512),
        ("rpc-k2", repeated_conflict(16, 2, 0.99).unwrap(), 512),
    ]
}

fn rollouts(c: &mut Criterion) {
    let mut g = c.benchmark_group("rollout_batch");
    g.sample_size(20);
    let mode = if par::PARALLEL { "rayon" } else { "par-disabled" };
    for (name, spec, batch) in games() {
        let p = PolicySet::uniform(&spec);
        g.bench_with_input(BenchmarkId::new(mode, name), &batch, |b, &n| {
            b.iter(|| black_box(rollout_batch(&spec, &p, &OPTIONS, 7, 0, n).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("sequential", name), &batch, |b, &n| {
            b.iter(|| {
                let v: Vec<_> = (0..n).map(|k| rollout_seeded(&spec, &p, &OPTIONS, 7, k as u64).unwrap()).collect();
                black_box(v)
            })
        });
    }
    g.finish();
}

fn gradients(c: &mut Criterion) {
    let mut g = c.benchmark_group("agent_gradients");
    g.sample_size(20);
    let mode = if par::PARALLEL { "rayon" } else { "par-disabled" };
    let entropy = EntropyBonus { coefficient: 1.0, proposal: true, commitment: true, action: false };
    for (name, spec, n) in games() {
        let p = PolicySet::uniform(&spec);
        let batch = rollout_batch(&spec, &p, &OPTIONS, 3, 0, n).unwrap();
        let critics: Vec<CriticTable> = (0..spec.n_agents()).map(|i| CriticTable::immediate_rewards(&spec, i)).collect();
        let view = View { commitments: p.agents.iter().map(|a| &a.commitment).collect(), critics: critics.iter().collect() };
        let grad = |i: usize| {
            let target = Target { agent: i, proposal: &p.agents[i].proposal, action: &p.agents[i].action };
            batch_gradients(&spec, &view, target, &batch, None, Terms::ALL, entropy, false)
        };
        g.bench_function(BenchmarkId::new(mode, name), |b| b.iter(|| black_box(par::map_collect(spec.n_agents(), grad))));
        g.bench_function(BenchmarkId::new("sequential", name), |b| {
            b.iter(|| black_box((0..spec.n_agents()).map(grad).collect::<Vec<_>>()))
        });
    }
    g.finish();
}

criterion_group!(benches, rollouts, gradients);
criterion_main!(benches);
