//! Randomized single-step instances and frozen-noise surrogates shared by
//! the estimator tests and the acceptance suite.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use commitment_lab::dcl::estimators::{batch_gradients, EntropyBonus, GradientAccumulator, Target, Terms, View};
use commitment_lab::mcg::{rollout_seeded, GameBuilder, GameSpec, Protocol, RolloutOptions, StepRecord, Trajectory};
use commitment_lab::models::relaxed::{sigmoid, tempered_softmax};
use commitment_lab::models::{multilinear, CriticTable, LogitTable, PolicySet};
use commitment_lab::oracle::finite_difference_grad;

pub struct Instance {
    pub spec: GameSpec,
    pub policies: PolicySet,
    pub critics: Vec<CriticTable>,
    pub batch: Vec<Trajectory>,
    pub agent: usize,
}

impl Instance {
    pub fn step(&self) -> &StepRecord {
        &self.batch[0].steps[0]
    }

    pub fn gradients(&self, terms: Terms) -> GradientAccumulator {
        let view = View {
            commitments: self.policies.agents.iter().map(|a| &a.commitment).collect(),
            critics: self.critics.iter().collect(),
        };
        let a = &self.policies.agents[self.agent];
        let target = Target { agent: self.agent, proposal: &a.proposal, action: &a.action };
        batch_gradients(&self.spec, &view, target, &self.batch, None, terms, EntropyBonus::OFF, false)
    }
}

pub fn one_state_game(action_counts: &[usize], rng: &mut ChaCha8Rng) -> GameSpec {
    let n = action_counts.len();
    let nj: usize = action_counts.iter().product();
    GameBuilder {
        name: "random".into(),
        action_counts: action_counts.to_vec(),
        n_states: 1,
        initial_state: 0,
        rewards: (0..nj * n).map(|_| rng.random_range(-3.0..3.0)).collect(),
        undiscounted_rewards: None,
        transitions: vec![vec![(0, 1.0)]; nj],
        gamma: 0.99,
        horizon: 1,
        base_steps_per_decision: 1,
        state_labels: vec!["s0".into()],
        action_labels: action_counts.iter().map(|&k| (0..k).map(|a| format!("a{a}")).collect()).collect(),
    }
    .build()
    .unwrap()
}

fn randomize(t: &mut LogitTable, scale: f64, rng: &mut ChaCha8Rng) {
    t.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-scale..scale));
}

/// A random game, policies and critics with one recorded step. Instances
/// whose IC hinges sit within 1e-3 of their kink are redrawn.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(2..=3);
        let counts: Vec<usize> = (0..n).map(|_| rng.random_range(2..=3)).collect();
        let spec = one_state_game(&counts, &mut rng);
        let mut policies = PolicySet::uniform(&spec);
        for a in &mut policies.agents {
            randomize(&mut a.proposal.logits, 1.5, &mut rng);
            randomize(&mut a.commitment.logits, 1.5, &mut rng);
            randomize(&mut a.action.logits, 1.5, &mut rng);
        }
        let nj = spec.joint().len();
        let critics: Vec<CriticTable> = (0..n)
            .map(|_| CriticTable::from_values(&spec, (0..nj).map(|_| rng.random_range(-3.0..3.0)).collect(), Default::default()).unwrap())
            .collect();
        let temperature = rng.random_range(0.5..3.0);
        let options = RolloutOptions { temperature, protocol: Protocol::Commitment };
        let traj = rollout_seeded(&spec, &policies, &options, rng.random(), 0).unwrap();
        let s = &traj.steps[0];
        let near_kink = critics.iter().any(|q| (q.value(0, s.joint_proposal) - q.value(0, s.joint_counterfactual)).abs() < 1e-3);
        if near_kink {
            continue;
        }
        let agent = rng.random_range(0..n);
        return Instance { spec, policies, critics, batch: vec![traj], agent };
    }
}

/// Relative error check: `|est - fd| <= tol * |fd| + 1e-8` for every entry.
pub fn agree(est: &[f64], fd: &[f64], tol: f64) -> Result<(), String> {
    for (k, (e, f)) in est.iter().zip(fd).enumerate() {
        if (e - f).abs() > tol * f.abs() + 1e-8 {
            return Err(format!("entry {k}: estimate {e} vs finite difference {f}"));
        }
    }
    Ok(())
}

fn all_commit(s: &StepRecord) -> bool {
    s.commits.iter().all(|&c| c)
}

fn indicator(b: bool) -> f64 {
    if b { 1.0 } else { 0.0 }
}

/// Commitment gradient of the target at the recorded step against central
/// differences of `G log psi_i(c_i) + [Q(m) - Q(a)] prod_{k!=i} c_k c_soft_i`.
pub fn check_commitment(inst: &Instance, tol: f64) -> Result<(), String> {
    let s = inst.step();
    let i = inst.agent;
    let q = &inst.critics[i];
    let (qm, qa) = (q.value(0, s.joint_proposal), q.value(0, s.joint_counterfactual));
    let coef = if all_commit(s) { qm } else { qa };
    let others: f64 = (0..s.commits.len()).filter(|&k| k != i).map(|k| indicator(s.commits[k])).product();
    let tau = s.temperature;
    let noise = s.commit_noise[i];
    let c = indicator(s.commits[i]);
    let surrogate = |row: &[f64]| {
        let lo = row[1] - row[0];
        let log_psi = c * sigmoid(lo).ln() + (1.0 - c) * sigmoid(-lo).ln();
        coef * log_psi + (qm - qa) * others * sigmoid((lo + noise[1] - noise[0]) / tau)
    };
    let cp = &inst.policies.agents[i].commitment;
    let r = cp.row_index(0, s.joint_proposal);
    let fd = finite_difference_grad(surrogate, cp.logits.row(r), 1e-5);
    let g = inst.gradients(Terms { commitment_score: true, commitment_pathwise: true, ..Terms::NONE });
    agree(g.commitment.row(r), &fd, tol)?;
    let elsewhere = (0..g.commitment.rows()).filter(|&k| k != r).flat_map(|k| g.commitment.row(k).to_vec());
    if elsewhere.into_iter().any(|v| v != 0.0) {
        return Err("gradient on a commitment row that was not visited".into());
    }
    Ok(())
}

/// The target's proposal vector on the straight-through path: the hard
/// one-hot plus the change of the relaxed sample away from `eta0`.
fn st_proposal(eta: &[f64], eta0: &[f64], noise: &[f64], tau: f64, hard: usize) -> Vec<f64> {
    let y = tempered_softmax(eta, noise, tau);
    let y0 = tempered_softmax(eta0, noise, tau);
    (0..eta.len()).map(|k| indicator(k == hard) + y[k] - y0[k]).collect()
}

fn soft_profile(spec: &GameSpec, s: &StepRecord, agent: usize, own: Vec<f64>) -> Vec<Vec<f64>> {
    (0..spec.n_agents())
        .map(|j| if j == agent { own.clone() } else { (0..spec.n_actions(j)).map(|k| indicator(k == s.proposals[j])).collect() })
        .collect()
}

/// Full proposal gradient (score and pathwise parts) against central
/// differences of `G log phi(m_i) + sum_j [G log psi_j(c_j | l_j) +
/// prod_{k!=j} c_k [Q(m) - Q(a)] c_soft_j(l_j)]`, `l_j` the contracted
/// log-odds under the straight-through proposal.
pub fn check_proposal(inst: &Instance, tol: f64) -> Result<(), String> {
    let spec = &inst.spec;
    let s = inst.step();
    let i = inst.agent;
    let q = &inst.critics[i];
    let (qm, qa) = (q.value(0, s.joint_proposal), q.value(0, s.joint_counterfactual));
    let coef = if all_commit(s) { qm } else { qa };
    let tau = s.temperature;
    let eta0 = inst.policies.agents[i].proposal.logits.row(0).to_vec();
    let rows: Vec<Vec<f64>> = inst.policies.agents.iter().map(|a| a.commitment.log_odds_row(0)).collect();
    let surrogate = |eta: &[f64]| {
        let own = st_proposal(eta, &eta0, &s.proposal_noise[i], tau, s.proposals[i]);
        let profile = soft_profile(spec, s, i, own);
        let refs: Vec<&[f64]> = profile.iter().map(Vec::as_slice).collect();
        let mut total = coef * (tempered_softmax(eta, &vec![0.0; eta.len()], 1.0)[s.proposals[i]]).ln();
        for (j, row) in rows.iter().enumerate() {
            let (l, _) = multilinear(row, spec.joint(), &refs).unwrap();
            let c = indicator(s.commits[j]);
            total += coef * (c * sigmoid(l).ln() + (1.0 - c) * sigmoid(-l).ln());
            let others: f64 = (0..spec.n_agents()).filter(|&k| k != j).map(|k| indicator(s.commits[k])).product();
            let nz = s.commit_noise[j];
            total += others * (qm - qa) * sigmoid((l + nz[1] - nz[0]) / tau);
        }
        total
    };
    let fd = finite_difference_grad(surrogate, &eta0, 1e-5);
    let g = inst.gradients(Terms { proposal_score: true, proposal_commit_score: true, proposal_pathwise: true, ..Terms::NONE });
    agree(g.proposal.row(0), &fd, tol)
}

/// IC gradient against central differences of
/// `sum_j min{0, Q_j(m_st) - Q_j(a)}` through the straight-through proposal.
pub fn check_ic(inst: &Instance, tol: f64) -> Result<(), String> {
    let spec = &inst.spec;
    let s = inst.step();
    let i = inst.agent;
    let tau = s.temperature;
    let eta0 = inst.policies.agents[i].proposal.logits.row(0).to_vec();
    let surrogate = |eta: &[f64]| {
        let own = st_proposal(eta, &eta0, &s.proposal_noise[i], tau, s.proposals[i]);
        let profile = soft_profile(spec, s, i, own);
        let refs: Vec<&[f64]> = profile.iter().map(Vec::as_slice).collect();
        inst.critics
            .iter()
            .map(|q| {
                let (v, _) = multilinear(q.row(0), spec.joint(), &refs).unwrap();
                (v - q.value(0, s.joint_counterfactual)).min(0.0)
            })
            .sum::<f64>()
    };
    let fd = finite_difference_grad(surrogate, &eta0, 1e-5);
    let g = inst.gradients(Terms { ic: true, ..Terms::NONE });
    agree(g.ic.row(0), &fd, tol)
}
