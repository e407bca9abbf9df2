//! Tabular joint-action value functions fit to Monte-Carlo returns.

use crate::error::{contract, Result};
use crate::mcg::{GameSpec, JointSpace, Trajectory};
use crate::models::optim::{Optimizer, OptimizerKind};

/// `Q(state, joint action)` for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticTable {
    joint: JointSpace,
    n_states: usize,
    w: Vec<f64>,
    optimizer: Optimizer,
}

/// Visit counts and return sums per (state, joint action) cell: everything
/// the squared-error gradient of a tabular critic depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnStats {
    pub counts: Vec<f64>,
    pub sums: Vec<f64>,
    /// Number of (episode, timestep) samples.
    pub samples: usize,
}

impl ReturnStats {
    /// Statistics of `agent`'s returns over the executed joint actions.
    pub fn collect(spec: &GameSpec, batch: &[Trajectory], agent: usize) -> Self {
        let cells = spec.n_states() * spec.joint().len();
        let mut counts = vec![0.0; cells];
        let mut sums = vec![0.0; cells];
        let mut samples = 0;
        for traj in batch {
            for (step, ret) in traj.steps.iter().zip(&traj.returns) {
                let c = step.state * spec.joint().len() + step.joint_executed;
                counts[c] += 1.0;
                sums[c] += ret[agent];
                samples += 1;
            }
        }
        Self { counts, sums, samples }
    }

    pub fn empirical_mean(&self, cell: usize) -> Option<f64> {
        (self.counts[cell] > 0.0).then(|| self.sums[cell] / self.counts[cell])
    }
}

impl CriticTable {
    pub fn zeros(spec: &GameSpec, optimizer: OptimizerKind) -> Self {
        let len = spec.n_states() * spec.joint().len();
        Self {
            joint: spec.joint().clone(),
            n_states: spec.n_states(),
            w: vec![0.0; len],
            optimizer: Optimizer::new(optimizer, len),
        }
    }

    /// A critic with given values, e.g. the exact one-step reward table.
    pub fn from_values(spec: &GameSpec, values: Vec<f64>, optimizer: OptimizerKind) -> Result<Self> {
        let mut c = Self::zeros(spec, optimizer);
        if values.len() != c.w.len() {
            return Err(contract("critic value table shape mismatch"));
        }
        c.w = values;
        Ok(c)
    }

    /// Critic equal to each agent's immediate reward; exact for horizon 1.
    pub fn immediate_rewards(spec: &GameSpec, agent: usize) -> Self {
        let nj = spec.joint().len();
        let mut values = vec![0.0; spec.n_states() * nj];
        for s in 0..spec.n_states() {
            for j in 0..nj {
                values[s * nj + j] = spec.reward_of(s, j)[agent];
            }
        }
        Self::from_values(spec, values, OptimizerKind::Sgd).expect("shape matches by construction")
    }

    pub fn joint(&self) -> &JointSpace {
        &self.joint
    }

    pub fn value(&self, state: usize, joint_action: usize) -> f64 {
        self.w[state * self.joint.len() + joint_action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        let nj = self.joint.len();
        &self.w[state * nj..(state + 1) * nj]
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|v| v.is_finite())
    }

    /// d Q(state, m) / d soft proposal of `agent`, at the hard joint proposal.
    pub fn vertex_partials(&self, state: usize, joint_proposal: usize, agent: usize) -> Vec<f64> {
        crate::models::vertex_partials(self.row(state), &self.joint, joint_proposal, agent)
    }

    /// `(1 / samples) * sum (Q - G)^2` over the batch described by `stats`.
    pub fn batch_mse(&self, batch: &[Trajectory], agent: usize) -> f64 {
        let mut total = 0.0;
        let mut n = 0usize;
        for traj in batch {
            for (step, ret) in traj.steps.iter().zip(&traj.returns) {
                let d = self.value(step.state, step.joint_executed) - ret[agent];
                total += d * d;
                n += 1;
            }
        }
        total / n.max(1) as f64
    }

    /// Runs `n_updates` gradient steps on the batch mean squared error. The
    /// gradient on a cell is `2 (count * Q - sum G) / samples`; cells the
    /// batch never visits get a zero gradient.
    pub fn fit(&mut self, stats: &ReturnStats, learning_rate: f64, n_updates: usize) -> Result<()> {
        if stats.samples == 0 {
            return Err(contract("critic fit needs a non-empty batch"));
        }
        if stats.counts.len() != self.w.len() {
            return Err(contract("return statistics do not match the critic shape"));
        }
        let scale = 2.0 / stats.samples as f64;
        let mut grad = vec![0.0; self.w.len()];
        for _ in 0..n_updates {
            for (k, g) in grad.iter_mut().enumerate() {
                *g = scale * (stats.counts[k] * self.w[k] - stats.sums[k]);
            }
            self.optimizer.descend(&mut self.w, &grad, learning_rate);
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }
}

/// Fits `critic` for `agent` on a batch of trajectories.
pub fn fit_critic(
    spec: &GameSpec,
    critic: &mut CriticTable,
    batch: &[Trajectory],
    agent: usize,
    learning_rate: f64,
    n_updates: usize,
) -> Result<()> {
    if batch.is_empty() {
        return Err(contract("critic fit needs a non-empty batch"));
    }
    let stats = ReturnStats::collect(spec, batch, agent);
    critic.fit(&stats, learning_rate, n_updates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::prisoners_dilemma;
    use crate::mcg::{rollout_batch, RolloutOptions, Protocol};
    use crate::models::PolicySet;

    fn batch(n: usize) -> (GameSpec, Vec<Trajectory>) {
        let spec = prisoners_dilemma();
        let opts = RolloutOptions { temperature: 1.0, protocol: Protocol::Commitment };
        let b = rollout_batch(&spec, &PolicySet::uniform(&spec), &opts, 5, 0, n).unwrap();
        (spec, b)
    }

    #[test]
    fn converges_to_cell_means() {
        let (spec, b) = batch(400);
        let stats = ReturnStats::collect(&spec, &b, 0);
        let mut critic = CriticTable::zeros(&spec, OptimizerKind::Sgd);
        critic.fit(&stats, 1.0, 2000).unwrap();
        for cell in 0..4 {
            let target = stats.empirical_mean(cell).unwrap();
            assert!((critic.values()[cell] - target).abs() < 1e-3);
        }
        // deterministic rewards in a one-shot game: every cell mean is the payoff
        for cell in 0..4 {
            assert!((critic.value(0, cell) - spec.reward_of(0, cell)[0]).abs() < 1e-3);
        }
    }

    #[test]
    fn identical_returns_are_fit_exactly() {
        let spec = prisoners_dilemma();
        let stats = ReturnStats { counts: vec![0.0, 5.0, 0.0, 0.0], sums: vec![0.0, 15.0, 0.0, 0.0], samples: 5 };
        let mut critic = CriticTable::zeros(&spec, OptimizerKind::Adam);
        critic.fit(&stats, 0.05, 3000).unwrap();
        assert!((critic.value(0, 1) - 3.0).abs() < 1e-4);
        assert_eq!(critic.value(0, 0), 0.0);
        assert_eq!(critic.value(0, 3), 0.0);
    }

    #[test]
    fn small_step_lowers_mse() {
        let (spec, b) = batch(64);
        let mut critic = CriticTable::zeros(&spec, OptimizerKind::Sgd);
        let before = critic.batch_mse(&b, 1);
        fit_critic(&spec, &mut critic, &b, 1, 1e-3, 1).unwrap();
        assert!(critic.batch_mse(&b, 1) < before);
    }

    #[test]
    fn empty_batch_is_rejected() {
        let spec = prisoners_dilemma();
        let mut critic = CriticTable::zeros(&spec, OptimizerKind::Sgd);
        assert!(fit_critic(&spec, &mut critic, &[], 0, 0.1, 1).is_err());
    }
}
