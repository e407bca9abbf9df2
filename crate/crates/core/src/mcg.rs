//! The Markov commitment game protocol.
//!
//! Every timestep has three stages: each agent announces a proposal, each
//! agent accepts or rejects the joint proposal, and then either the joint
//! proposal is executed (everyone accepted) or every agent plays the action
//! it drew independently from its action policy. Transitions and rewards only
//! ever see the executed joint action.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use crate::error::{contract, Error, Result};
use crate::models::relaxed::{gumbel, perturbed_argmax};

/// Mixed-radix index over per-agent choices. Agent 0 is the most significant
/// digit, so for two agents the index is `row * n_cols + col`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointSpace {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl JointSpace {
    pub fn new(sizes: &[usize]) -> Self {
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let len = sizes.iter().product();
        Self { sizes: sizes.to_vec(), strides, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn n_agents(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, agent: usize) -> usize {
        self.sizes[agent]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn stride(&self, agent: usize) -> usize {
        self.strides[agent]
    }

    pub fn encode(&self, joint: &[usize]) -> usize {
        debug_assert_eq!(joint.len(), self.sizes.len());
        joint.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn checked_encode(&self, joint: &[usize]) -> Result<usize> {
        if joint.len() != self.sizes.len() {
            return Err(contract(format!(
                "joint choice has {} entries for {} agents",
                joint.len(),
                self.sizes.len()
            )));
        }
        for (agent, (&a, &n)) in joint.iter().zip(&self.sizes).enumerate() {
            if a >= n {
                return Err(contract(format!("agent {agent} choice {a} outside 0..{n}")));
            }
        }
        Ok(self.encode(joint))
    }

    pub fn component(&self, index: usize, agent: usize) -> usize {
        (index / self.strides[agent]) % self.sizes[agent]
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        (0..self.sizes.len()).map(|i| self.component(index, i)).collect()
    }

    /// Index of the joint choice obtained by overriding one agent's entry.
    pub fn with_component(&self, index: usize, agent: usize, value: usize) -> usize {
        let current = self.component(index, agent);
        index - current * self.strides[agent] + value * self.strides[agent]
    }
}

/// Parts used to assemble a [`GameSpec`]; validated by [`GameBuilder::build`].
#[derive(Debug, Clone)]
pub struct GameBuilder {
    pub name: String,
    pub action_counts: Vec<usize>,
    pub n_states: usize,
    pub initial_state: usize,
    /// Flat `[state][joint action][agent]`.
    pub rewards: Vec<f64>,
    /// Undiscounted per-decision rewards when one decision spans several base
    /// steps. Same layout as `rewards`.
    pub undiscounted_rewards: Option<Vec<f64>>,
    /// `[state * n_joint + joint action]` -> distribution over next states.
    pub transitions: Vec<Vec<(usize, f64)>>,
    pub gamma: f64,
    pub horizon: usize,
    pub base_steps_per_decision: usize,
    pub state_labels: Vec<String>,
    pub action_labels: Vec<Vec<String>>,
}

impl GameBuilder {
    pub fn build(self) -> Result<GameSpec> {
        let n_agents = self.action_counts.len();
        if n_agents == 0 || self.action_counts.contains(&0) {
            return Err(contract("every agent needs at least one action"));
        }
        if self.n_states == 0 || self.initial_state >= self.n_states {
            return Err(contract("initial state outside the state set"));
        }
        let joint = JointSpace::new(&self.action_counts);
        let cells = self.n_states * joint.len();
        if self.rewards.len() != cells * n_agents {
            return Err(contract(format!(
                "reward table has {} entries, expected {}",
                self.rewards.len(),
                cells * n_agents
            )));
        }
        if self.rewards.iter().any(|r| !r.is_finite()) {
            return Err(contract("rewards must be finite"));
        }
        if let Some(raw) = &self.undiscounted_rewards {
            if raw.len() != self.rewards.len() {
                return Err(contract("undiscounted reward table shape mismatch"));
            }
        }
        if self.transitions.len() != cells {
            return Err(contract("transition table shape mismatch"));
        }
        for (cell, dist) in self.transitions.iter().enumerate() {
            let total: f64 = dist.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-9 || dist.iter().any(|&(s, p)| s >= self.n_states || p < 0.0) {
                return Err(contract(format!("transition row {cell} is not a distribution")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(contract(format!("discount {} outside [0, 1]", self.gamma)));
        }
        if self.horizon == 0 || self.base_steps_per_decision == 0 {
            return Err(contract("horizon must be positive"));
        }
        if self.state_labels.len() != self.n_states
            || self.action_labels.len() != n_agents
            || self.action_labels.iter().zip(&self.action_counts).any(|(l, &n)| l.len() != n)
        {
            return Err(contract("label tables do not match the game shape"));
        }
        Ok(GameSpec {
            name: self.name,
            joint,
            n_states: self.n_states,
            initial_state: self.initial_state,
            rewards: self.rewards,
            undiscounted_rewards: self.undiscounted_rewards,
            transitions: self.transitions,
            gamma: self.gamma,
            horizon: self.horizon,
            base_steps_per_decision: self.base_steps_per_decision,
            state_labels: self.state_labels,
            action_labels: self.action_labels,
        })
    }
}

/// A finite, fully tabulated Markov commitment game. Proposal spaces are the
/// action spaces, so there is no separate proposal table.
#[derive(Debug, Clone)]
pub struct GameSpec {
    name: String,
    joint: JointSpace,
    n_states: usize,
    initial_state: usize,
    rewards: Vec<f64>,
    undiscounted_rewards: Option<Vec<f64>>,
    transitions: Vec<Vec<(usize, f64)>>,
    gamma: f64,
    horizon: usize,
    base_steps_per_decision: usize,
    state_labels: Vec<String>,
    action_labels: Vec<Vec<String>>,
}

impl GameSpec {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn n_agents(&self) -> usize {
        self.joint.n_agents()
    }
    pub fn n_states(&self) -> usize {
        self.n_states
    }
    pub fn initial_state(&self) -> usize {
        self.initial_state
    }
    pub fn n_actions(&self, agent: usize) -> usize {
        self.joint.size(agent)
    }
    pub fn n_proposals(&self, agent: usize) -> usize {
        self.joint.size(agent)
    }
    pub fn joint(&self) -> &JointSpace {
        &self.joint
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    /// Base environment steps bound by a single decision (mega-step length).
    pub fn base_steps_per_decision(&self) -> usize {
        self.base_steps_per_decision
    }
    pub fn state_label(&self, state: usize) -> &str {
        &self.state_labels[state]
    }
    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }
    pub fn action_label(&self, agent: usize, action: usize) -> &str {
        &self.action_labels[agent][action]
    }
    pub fn joint_label(&self, joint_index: usize) -> String {
        let parts: Vec<&str> = (0..self.n_agents())
            .map(|i| self.action_label(i, self.joint.component(joint_index, i)))
            .collect();
        format!("({})", parts.join(","))
    }

    fn cell(&self, state: usize, joint_index: usize) -> usize {
        state * self.joint.len() + joint_index
    }

    /// Per-agent rewards for a joint action given by its index.
    pub fn reward_of(&self, state: usize, joint_index: usize) -> &[f64] {
        let n = self.n_agents();
        let base = self.cell(state, joint_index) * n;
        &self.rewards[base..base + n]
    }

    pub fn undiscounted_reward_of(&self, state: usize, joint_index: usize) -> &[f64] {
        match &self.undiscounted_rewards {
            Some(raw) => {
                let n = self.n_agents();
                let base = self.cell(state, joint_index) * n;
                &raw[base..base + n]
            }
            None => self.reward_of(state, joint_index),
        }
    }

    pub fn reward(&self, state: usize, joint_action: &[usize]) -> Result<Vec<f64>> {
        self.check_state(state)?;
        let j = self.joint.checked_encode(joint_action)?;
        Ok(self.reward_of(state, j).to_vec())
    }

    pub fn transition_of(&self, state: usize, joint_index: usize) -> &[(usize, f64)] {
        &self.transitions[self.cell(state, joint_index)]
    }

    pub fn transition(&self, state: usize, joint_action: &[usize]) -> Result<&[(usize, f64)]> {
        self.check_state(state)?;
        let j = self.joint.checked_encode(joint_action)?;
        Ok(self.transition_of(state, j))
    }

    pub fn check_state(&self, state: usize) -> Result<()> {
        if state >= self.n_states {
            return Err(contract(format!("state {state} outside 0..{}", self.n_states)));
        }
        Ok(())
    }

    pub fn sample_next_state<R: Rng + ?Sized>(&self, state: usize, joint_index: usize, rng: &mut R) -> usize {
        let dist = self.transition_of(state, joint_index);
        if dist.len() == 1 {
            return dist[0].0;
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(next, p) in dist {
            acc += p;
            if u < acc {
                return next;
            }
        }
        dist[dist.len() - 1].0
    }
}

/// Per-agent values, stored inline for small games.
pub type PerAgent<T> = SmallVec<[T; 4]>;
/// Gumbel noise over one agent's choices.
pub type Noise = SmallVec<[f64; 4]>;

/// Result of executing one protocol step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub executed: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_state: usize,
}

/// Executes the act stage: the joint proposal is played iff every agent
/// committed, otherwise the independently drawn actions are played.
pub fn step<R: Rng + ?Sized>(
    spec: &GameSpec,
    state: usize,
    joint_proposal: &[usize],
    joint_commit: &[bool],
    counterfactual_action: &[usize],
    rng: &mut R,
) -> Result<StepOutcome> {
    spec.check_state(state)?;
    spec.joint().checked_encode(joint_proposal)?;
    spec.joint().checked_encode(counterfactual_action)?;
    if joint_commit.len() != spec.n_agents() {
        return Err(contract("one commitment bit per agent required"));
    }
    let executed = if joint_commit.iter().all(|&c| c) {
        joint_proposal.to_vec()
    } else {
        counterfactual_action.to_vec()
    };
    let j = spec.joint().encode(&executed);
    let rewards = spec.reward_of(state, j).to_vec();
    let next_state = spec.sample_next_state(state, j, rng);
    Ok(StepOutcome { executed, rewards, next_state })
}

/// Read access to the logits of every agent's three policies.
pub trait JointPolicy: Sync {
    fn proposal_logits(&self, agent: usize, state: usize) -> &[f64];
    /// `[reject, commit]` logits for the given joint proposal index.
    fn commitment_logits(&self, agent: usize, state: usize, joint_proposal: usize) -> &[f64];
    fn action_logits(&self, agent: usize, state: usize) -> &[f64];
}

/// Whether agents go through the propose/commit stages at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Commitment,
    /// No proposals or commitments; every step plays the independent actions.
    Independent,
}

#[derive(Debug, Clone, Copy)]
pub struct RolloutOptions {
    pub temperature: f64,
    pub protocol: Protocol,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub state: usize,
    /// Empty under [`Protocol::Independent`].
    pub proposals: PerAgent<usize>,
    pub commits: PerAgent<bool>,
    pub counterfactual: PerAgent<usize>,
    pub executed: PerAgent<usize>,
    pub rewards: PerAgent<f64>,
    pub proposal_noise: PerAgent<Noise>,
    /// Noise on the `[reject, commit]` logits. Only the difference matters;
    /// rollouts store `[0, d]` with `d` standard logistic.
    pub commit_noise: PerAgent<[f64; 2]>,
    pub action_noise: PerAgent<Noise>,
    pub temperature: f64,
    pub joint_proposal: usize,
    pub joint_counterfactual: usize,
    pub joint_executed: usize,
}

impl StepRecord {
    pub fn all_commit(&self) -> bool {
        !self.commits.is_empty() && self.commits.iter().all(|&c| c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    /// `returns[t][agent]`
    pub returns: Vec<PerAgent<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Sum of undiscounted base-step rewards per agent.
    pub fn undiscounted_return(&self, spec: &GameSpec) -> Vec<f64> {
        let mut total = vec![0.0; spec.n_agents()];
        for s in &self.steps {
            for (t, r) in total.iter_mut().zip(spec.undiscounted_reward_of(s.state, s.joint_executed)) {
                *t += r;
            }
        }
        total
    }
}

/// Discounted reward-to-go for every timestep and agent.
pub fn compute_returns(steps: &[StepRecord], gamma: f64) -> Result<Vec<PerAgent<f64>>> {
    let last = steps.last().ok_or(Error::EmptyTrajectory)?;
    let n = last.rewards.len();
    let mut returns: Vec<PerAgent<f64>> = vec![SmallVec::from_elem(0.0, n); steps.len()];
    let mut next: PerAgent<f64> = SmallVec::from_elem(0.0, n);
    for (t, s) in steps.iter().enumerate().rev() {
        for i in 0..n {
            next[i] = s.rewards[i] + gamma * next[i];
        }
        returns[t].copy_from_slice(&next);
    }
    Ok(returns)
}

fn draw<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> (usize, Noise) {
    let noise: Noise = (0..logits.len()).map(|_| gumbel(rng)).collect();
    (perturbed_argmax(logits, &noise), noise)
}

/// Plays one full episode. A counterfactual action is drawn at every step,
/// committed or not, and all Gumbel noise is kept for replay.
pub fn rollout<P: JointPolicy + ?Sized, R: Rng + ?Sized>(
    spec: &GameSpec,
    policies: &P,
    options: &RolloutOptions,
    rng: &mut R,
) -> Result<Trajectory> {
    if options.temperature <= 0.0 {
        return Err(Error::Temperature(options.temperature));
    }
    let n = spec.n_agents();
    let joint = spec.joint();
    let mut state = spec.initial_state();
    let mut steps = Vec::with_capacity(spec.horizon());
    for _ in 0..spec.horizon() {
        let mut proposals = PerAgent::new();
        let mut proposal_noise = PerAgent::new();
        let mut commits = PerAgent::new();
        let mut commit_noise = PerAgent::new();
        let mut joint_proposal = 0;
        if options.protocol == Protocol::Commitment {
            for i in 0..n {
                let (hard, noise) = draw(policies.proposal_logits(i, state), rng);
                proposals.push(hard);
                proposal_noise.push(noise);
            }
            joint_proposal = joint.encode(&proposals);
            for i in 0..n {
                let logits = policies.commitment_logits(i, state, joint_proposal);
                // only the difference of the two Gumbel draws matters, and
                // that difference is standard logistic
                let g = [0.0, logistic(rng)];
                commits.push(logits[1] + g[1] > logits[0] + g[0]);
                commit_noise.push(g);
            }
        }
        let mut counterfactual = PerAgent::new();
        let mut action_noise = PerAgent::new();
        for i in 0..n {
            let (hard, noise) = draw(policies.action_logits(i, state), rng);
            counterfactual.push(hard);
            action_noise.push(noise);
        }
        let joint_counterfactual = joint.encode(&counterfactual);
        let all_commit = !commits.is_empty() && commits.iter().all(|&c| c);
        let (executed, joint_executed) = if all_commit {
            (proposals.clone(), joint_proposal)
        } else {
            (counterfactual.clone(), joint_counterfactual)
        };
        let rewards = PerAgent::from_slice(spec.reward_of(state, joint_executed));
        let next = spec.sample_next_state(state, joint_executed, rng);
        steps.push(StepRecord {
            state,
            proposals,
            commits,
            counterfactual,
            executed,
            rewards,
            proposal_noise,
            commit_noise,
            action_noise,
            temperature: options.temperature,
            joint_proposal,
            joint_counterfactual,
            joint_executed,
        });
        state = next;
    }
    let returns = compute_returns(&steps, spec.gamma())?;
    Ok(Trajectory { steps, returns })
}

fn logistic<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    (u / (1.0 - u)).ln()
}

/// Deterministic generator for episode `stream` of a run seeded with `seed`.
pub fn episode_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Rollout driven by a fresh generator, so the result depends only on the
/// policy snapshot, the seed and the stream.
pub fn rollout_seeded<P: JointPolicy + ?Sized>(
    spec: &GameSpec,
    policies: &P,
    options: &RolloutOptions,
    seed: u64,
    stream: u64,
) -> Result<Trajectory> {
    let mut rng = episode_rng(seed, stream);
    rollout(spec, policies, options, &mut rng)
}

/// A batch of `n` episodes. Each episode owns its own generator stream, so
/// the batch is identical whether it is collected in parallel or not.
pub fn rollout_batch<P: JointPolicy + ?Sized>(
    spec: &GameSpec,
    policies: &P,
    options: &RolloutOptions,
    seed: u64,
    first_stream: u64,
    n: usize,
) -> Result<Vec<Trajectory>> {
    crate::par::map_collect(n, |k| rollout_seeded(spec, policies, options, seed, first_stream + k as u64))
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{grid_game, prisoners_dilemma, COOPERATE, DEFECT};
    use crate::models::PolicySet;
    use proptest::prelude::*;

    fn opts() -> RolloutOptions {
        RolloutOptions { temperature: 1.0, protocol: Protocol::Commitment }
    }

    #[test]
    fn joint_proposal_runs_only_when_everyone_commits() {
        let spec = prisoners_dilemma();
        let mut rng = episode_rng(0, 0);
        let cc = [COOPERATE, COOPERATE];
        let dd = [DEFECT, DEFECT];
        let out = step(&spec, 0, &cc, &[true, true], &dd, &mut rng).unwrap();
        assert_eq!(out.executed, cc);
        assert_eq!(out.rewards, vec![-1.0, -1.0]);
        for commits in [[true, false], [false, true], [false, false]] {
            let out = step(&spec, 0, &cc, &commits, &dd, &mut rng).unwrap();
            assert_eq!(out.executed, dd);
            assert_eq!(out.rewards, vec![-2.0, -2.0]);
        }
    }

    #[test]
    fn step_contract_violations() {
        let spec = prisoners_dilemma();
        let mut rng = episode_rng(0, 0);
        assert!(step(&spec, 0, &[0, 2], &[true, true], &[0, 0], &mut rng).is_err());
        assert!(step(&spec, 0, &[0], &[true, true], &[0, 0], &mut rng).is_err());
        assert!(step(&spec, 0, &[0, 0], &[true], &[0, 0], &mut rng).is_err());
        assert!(step(&spec, 3, &[0, 0], &[true, true], &[0, 0], &mut rng).is_err());
    }

    #[test]
    fn non_positive_temperature_is_rejected() {
        let spec = prisoners_dilemma();
        let o = RolloutOptions { temperature: 0.0, protocol: Protocol::Commitment };
        assert!(matches!(
            rollout_seeded(&spec, &PolicySet::uniform(&spec), &o, 0, 0),
            Err(Error::Temperature(_))
        ));
    }

    #[test]
    fn empty_returns_error() {
        assert!(matches!(compute_returns(&[], 0.9), Err(Error::EmptyTrajectory)));
    }

    #[test]
    fn rollouts_are_reproducible() {
        let spec = grid_game(4, 16, 0.99).unwrap();
        let p = PolicySet::uniform(&spec);
        let a = rollout_batch(&spec, &p, &opts(), 9, 0, 8).unwrap();
        let b = rollout_batch(&spec, &p, &opts(), 9, 0, 8).unwrap();
        assert_eq!(a, b);
        let c = rollout_batch(&spec, &p, &opts(), 10, 0, 8).unwrap();
        assert_ne!(a, c);
        // a batch is the concatenation of its episodes' streams
        assert_eq!(a[3], rollout_seeded(&spec, &p, &opts(), 9, 3).unwrap());
    }

    #[test]
    fn counterfactual_actions_drawn_every_step() {
        let spec = grid_game(4, 16, 0.99).unwrap();
        let t = rollout_seeded(&spec, &PolicySet::uniform(&spec), &opts(), 1, 0).unwrap();
        assert_eq!(t.len(), 16);
        for s in &t.steps {
            assert_eq!(s.counterfactual.len(), 2);
            assert_eq!(s.action_noise.len(), 2);
            let expected = if s.all_commit() { s.joint_proposal } else { s.joint_counterfactual };
            assert_eq!(s.joint_executed, expected);
        }
    }

    #[test]
    fn independent_protocol_has_no_proposals() {
        let spec = prisoners_dilemma();
        let o = RolloutOptions { temperature: 1.0, protocol: Protocol::Independent };
        let t = rollout_seeded(&spec, &PolicySet::uniform(&spec), &o, 1, 0).unwrap();
        assert!(t.steps[0].proposals.is_empty() && t.steps[0].commits.is_empty());
        assert_eq!(t.steps[0].joint_executed, t.steps[0].joint_counterfactual);
    }

    fn record(rewards: Vec<f64>) -> StepRecord {
        StepRecord {
            state: 0,
            proposals: PerAgent::new(),
            commits: PerAgent::new(),
            counterfactual: PerAgent::new(),
            executed: PerAgent::new(),
            rewards: PerAgent::from_vec(rewards),
            proposal_noise: PerAgent::new(),
            commit_noise: PerAgent::new(),
            action_noise: PerAgent::new(),
            temperature: 1.0,
            joint_proposal: 0,
            joint_counterfactual: 0,
            joint_executed: 0,
        }
    }

    #[test]
    fn zero_discount_returns_rewards_and_constant_rewards_sum_geometrically() {
        let steps: Vec<_> = (0..5).map(|t| record(vec![t as f64, 1.0])).collect();
        let g = compute_returns(&steps, 0.0).unwrap();
        for (t, row) in g.iter().enumerate() {
            assert_eq!(row[0], t as f64);
        }
        let g = compute_returns(&steps, 0.5).unwrap();
        assert!((g[0][1] - (1.0 - 0.5f64.powi(5)) / 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn returns_match_direct_sums(rewards in prop::collection::vec(-5.0f64..5.0, 1..30), gamma in 0.0f64..=1.0) {
            let steps: Vec<_> = rewards.iter().map(|&r| record(vec![r])).collect();
            let g = compute_returns(&steps, gamma).unwrap();
            for t in 0..rewards.len() {
                let direct: f64 = rewards[t..].iter().enumerate().map(|(k, r)| gamma.powi(k as i32) * r).sum();
                prop_assert!((g[t][0] - direct).abs() < 1e-12);
            }
        }

        #[test]
        fn joint_index_round_trips(sizes in prop::collection::vec(1usize..5, 1..5), seed in any::<u64>()) {
            let space = JointSpace::new(&sizes);
            let idx = (seed as usize) % space.len();
            prop_assert_eq!(space.encode(&space.decode(idx)), idx);
        }
    }
}
