use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::run::Checkpoint;
use crate::dcl::MetricsRow;
use crate::envs::DEFECT;
use crate::error::{contract, Result};
use crate::mcg::{rollout, GameSpec, Protocol, RolloutOptions, Trajectory};
use crate::models::PolicySet;

/// Scripted opponents for behavioral checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Probe {
    /// Always proposes D, never commits, plays D.
    DefectProposer,
}

/// How the learned `agent` behaves against the probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub probe: Probe,
    pub agent: usize,
    pub episodes: usize,
    pub commit_rate: f64,
    /// Empirical distribution of the agent's executed actions.
    pub action_freq: Vec<f64>,
    pub defect_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub metrics: Option<MetricsRow>,
    pub probes: Vec<ProbeReport>,
}

const SCRIPTED: f64 = 1e3;

/// `policies` with `opponent` replaced by the defect proposer.
pub fn with_defect_proposer(spec: &GameSpec, policies: &PolicySet, opponent: usize) -> Result<PolicySet> {
    if spec.n_agents() != 2 || spec.n_actions(opponent) != 2 {
        return Err(contract("the defect-proposer probe needs a two-agent, two-action game"));
    }
    let mut p = policies.clone();
    let a = &mut p.agents[opponent];
    for s in 0..spec.n_states() {
        a.proposal.logits.row_mut(s).copy_from_slice(&[-SCRIPTED, SCRIPTED]);
        a.action.logits.row_mut(s).copy_from_slice(&[-SCRIPTED, SCRIPTED]);
    }
    a.commitment.logits.data_mut().chunks_mut(2).for_each(|c| c.copy_from_slice(&[SCRIPTED, -SCRIPTED]));
    Ok(p)
}

fn episodes(spec: &GameSpec, policies: &PolicySet, n: usize, seed: u64) -> Result<Vec<Trajectory>> {
    let options = RolloutOptions { temperature: 1.0, protocol: Protocol::Commitment };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rollout(spec, policies, &options, &mut rng)).collect()
}

pub fn probe_report(spec: &GameSpec, policies: &PolicySet, agent: usize, n: usize, seed: u64) -> Result<ProbeReport> {
    let probed = with_defect_proposer(spec, policies, 1 - agent)?;
    let batch = episodes(spec, &probed, n, seed)?;
    let mut commits = 0usize;
    let mut actions = vec![0.0; spec.n_actions(agent)];
    let mut steps = 0usize;
    for s in batch.iter().flat_map(|t| &t.steps) {
        steps += 1;
        commits += s.commits[agent] as usize;
        actions[s.executed[agent]] += 1.0;
    }
    let steps_f = steps.max(1) as f64;
    actions.iter_mut().for_each(|a| *a /= steps_f);
    Ok(ProbeReport {
        probe: Probe::DefectProposer,
        agent,
        episodes: n,
        commit_rate: commits as f64 / steps_f,
        defect_rate: actions[DEFECT],
        action_freq: actions,
    })
}

/// Plays the checkpoint's frozen policies for `n_episodes` and, if asked,
/// each agent against the probe.
pub fn evaluate(checkpoint: &Checkpoint, spec: &GameSpec, n_episodes: usize, seed: u64, probe: Option<Probe>) -> Result<EvalReport> {
    let policies = checkpoint.policies(spec)?;
    if n_episodes == 0 {
        return Ok(EvalReport { episodes: 0, metrics: None, probes: Vec::new() });
    }
    let batch = episodes(spec, &policies, n_episodes, seed)?;
    let metrics = MetricsRow::from_batch(spec, &batch, checkpoint.iterations, seed);
    let probes = match probe {
        Some(Probe::DefectProposer) => (0..spec.n_agents())
            .map(|i| probe_report(spec, &policies, i, n_episodes, seed.wrapping_add(1 + i as u64)))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    Ok(EvalReport { episodes: n_episodes, metrics: Some(metrics), probes })
}
