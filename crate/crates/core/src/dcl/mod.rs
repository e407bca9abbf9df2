//! Differentiable commitment learning: joint training of proposal,
//! commitment and action policies from sampled trajectories.

pub mod estimators;

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::mcg::{rollout_batch, GameSpec, Protocol, RolloutOptions, Trajectory};
use crate::models::critic::ReturnStats;
use crate::models::optim::{Optimizer, OptimizerKind};
use crate::models::{AgentPolicy, CriticTable, LogitTable, PolicySet};

pub use estimators::{
    estimate_action_grad, estimate_commitment_grad, estimate_ic_grad, estimate_proposal_grad, EntropyBonus,
    GradientAccumulator, Target, Terms, View,
};

/// Linear decay clipped from below: `max(min, start - decay * iteration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub start: f64,
    #[serde(default)]
    pub decay: f64,
    #[serde(default)]
    pub min: f64,
}

impl Schedule {
    pub const fn constant(value: f64) -> Self {
        Self { start: value, decay: 0.0, min: value }
    }

    pub fn at(&self, iteration: usize) -> f64 {
        (self.start - self.decay * iteration as f64).max(self.min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Centralized,
    /// Each agent keeps its own estimates of the other agents' policies and
    /// critics and never reads their true parameters.
    Decentralized,
}

/// How the incentive-compatibility gradient enters the proposal update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcStep {
    /// One optimizer step on `g + lambda * g_ic`.
    #[default]
    Objective,
    /// Optimizer step on `g`, then `eta += lambda * g_ic` added raw.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyTargets {
    pub proposal: bool,
    pub commitment: bool,
    pub action: bool,
}

impl Default for EntropyTargets {
    fn default() -> Self {
        Self { proposal: true, commitment: true, action: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub policy_lr: f64,
    pub value_lr: f64,
    /// Critic gradient steps per iteration.
    pub updates_per_iteration: usize,
    pub gamma: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub ic_enabled: bool,
    #[serde(default = "default_lambda")]
    pub ic_lambda: f64,
    #[serde(default)]
    pub ic_step: IcStep,
    pub entropy: Schedule,
    #[serde(default)]
    pub entropy_targets: EntropyTargets,
    pub temperature: Schedule,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub discounted_state_weighting: bool,
    /// Rescales each gradient table to at most this L2 norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_clip: Option<f64>,
    /// Record a metrics row every this many iterations (and at the last one).
    #[serde(default = "default_metric_every")]
    pub metric_every: usize,
    /// Let decentralized learners replay the other agents' recorded Gumbel
    /// noise instead of drawing it from the posterior given their choices.
    #[serde(default)]
    pub shared_noise: bool,
    /// Standard deviation of the random initial logits of opponent estimates.
    #[serde(default)]
    pub opponent_init_scale: f64,
}

const NOISE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn default_lambda() -> f64 {
    1.0
}

fn default_metric_every() -> usize {
    1
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.metric_every == 0 {
            return bad("metric_every must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(self.policy_lr >= 0.0 && self.value_lr >= 0.0 && self.ic_lambda >= 0.0) {
            return bad("learning rates and lambda must be non-negative");
        }
        if !(self.temperature.start > 0.0 && self.temperature.min > 0.0) {
            return bad("temperature must stay positive");
        }
        if self.entropy.start < 0.0 || self.entropy.min < 0.0 {
            return bad("entropy coefficient must be non-negative");
        }
        if let Some(c) = self.grad_clip {
            if c.is_nan() || c <= 0.0 {
                return bad("grad_clip must be positive");
            }
        }
        Ok(())
    }
}

/// One row of the training log. Returns are batch means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub iteration: usize,
    pub seed: u64,
    /// Undiscounted base-step return per agent.
    pub returns: Vec<f64>,
    pub discounted_returns: Vec<f64>,
    pub welfare: f64,
    /// Fraction of steps on which every agent committed.
    pub agreement_rate: f64,
    /// `proposal_freq[agent][k]`: fraction of steps on which `agent` proposed `k`.
    pub proposal_freq: Vec<Vec<f64>>,
    pub entropy_coef: f64,
    pub temperature: f64,
}

impl MetricsRow {
    pub fn from_batch(spec: &GameSpec, batch: &[Trajectory], iteration: usize, seed: u64) -> Self {
        let n = spec.n_agents();
        let episodes = batch.len().max(1) as f64;
        let mut returns = vec![0.0; n];
        let mut discounted = vec![0.0; n];
        let mut proposal_freq: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; spec.n_proposals(i)]).collect();
        let mut steps = 0usize;
        let mut agreed = 0usize;
        for traj in batch {
            for (r, u) in returns.iter_mut().zip(traj.undiscounted_return(spec)) {
                *r += u / episodes;
            }
            if let Some(first) = traj.returns.first() {
                for (d, g) in discounted.iter_mut().zip(first) {
                    *d += g / episodes;
                }
            }
            for s in &traj.steps {
                steps += 1;
                if s.all_commit() {
                    agreed += 1;
                }
                for (i, &m) in s.proposals.iter().enumerate() {
                    proposal_freq[i][m] += 1.0;
                }
            }
        }
        let steps_f = steps.max(1) as f64;
        proposal_freq.iter_mut().flatten().for_each(|f| *f /= steps_f);
        Self {
            iteration,
            seed,
            welfare: returns.iter().sum(),
            returns,
            discounted_returns: discounted,
            agreement_rate: agreed as f64 / steps_f,
            proposal_freq,
            entropy_coef: 0.0,
            temperature: 0.0,
        }
    }
}

/// Optimizer state for the three tables of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentOptimizers {
    proposal: Optimizer,
    commitment: Optimizer,
    action: Optimizer,
}

impl AgentOptimizers {
    pub fn new(kind: OptimizerKind, policy: &AgentPolicy) -> Self {
        Self {
            proposal: Optimizer::new(kind, policy.proposal.logits.data().len()),
            commitment: Optimizer::new(kind, policy.commitment.logits.data().len()),
            action: Optimizer::new(kind, policy.action.logits.data().len()),
        }
    }
}

/// Agent `owner`'s estimate of another agent's policies and critic.
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentModel {
    pub policy: AgentPolicy,
    pub critic: CriticTable,
    optimizers: AgentOptimizers,
}

impl OpponentModel {
    /// Random normal logits with standard deviation `scale`; a zero critic.
    pub fn random(spec: &GameSpec, agent: usize, cfg: &TrainerConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut policy = AgentPolicy::uniform(spec, agent);
        for t in [&mut policy.proposal.logits, &mut policy.commitment.logits, &mut policy.action.logits] {
            t.data_mut().iter_mut().for_each(|v| *v = cfg.opponent_init_scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng));
        }
        let optimizers = AgentOptimizers::new(cfg.optimizer, &policy);
        Self { policy, critic: CriticTable::zeros(spec, cfg.optimizer), optimizers }
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub policies: PolicySet,
    pub critics: Vec<CriticTable>,
    /// `opponent_models[i][b]` is agent `i`'s model of agent `b` (`None` at `b == i`).
    pub opponent_models: Option<Vec<Vec<Option<OpponentModel>>>>,
    pub metrics: Vec<MetricsRow>,
}

/// Trainer state; exposed so that tests can step through single iterations.
#[derive(Debug, Clone)]
pub struct Trainer {
    spec: GameSpec,
    cfg: TrainerConfig,
    seed: u64,
    protocol: Protocol,
    terms: Terms,
    pub policies: PolicySet,
    pub critics: Vec<CriticTable>,
    optimizers: Vec<AgentOptimizers>,
    pub opponent_models: Option<Vec<Vec<Option<OpponentModel>>>>,
    iteration: usize,
}

impl Trainer {
    pub fn new(spec: &GameSpec, cfg: &TrainerConfig, seed: u64) -> Result<Self> {
        Self::with_policies(spec, cfg, seed, PolicySet::uniform(spec))
    }

    pub fn with_policies(spec: &GameSpec, cfg: &TrainerConfig, seed: u64, policies: PolicySet) -> Result<Self> {
        Self::build(spec, cfg, seed, policies, Protocol::Commitment, Terms::ALL)
    }

    pub(crate) fn build(
        spec: &GameSpec,
        cfg: &TrainerConfig,
        seed: u64,
        policies: PolicySet,
        protocol: Protocol,
        terms: Terms,
    ) -> Result<Self> {
        cfg.validate()?;
        policies.check_shape(spec)?;
        let macro_gamma = cfg.gamma.powi(spec.base_steps_per_decision() as i32);
        if (macro_gamma - spec.gamma()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "trainer gamma {} does not match the environment's {}",
                cfg.gamma,
                spec.gamma()
            )));
        }
        let n = spec.n_agents();
        let critics = (0..n).map(|_| CriticTable::zeros(spec, cfg.optimizer)).collect();
        let optimizers = policies.agents.iter().map(|p| AgentOptimizers::new(cfg.optimizer, p)).collect();
        let opponent_models = (cfg.mode == Mode::Decentralized && protocol == Protocol::Commitment).then(|| {
            (0..n)
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(u64::MAX - i as u64);
                    (0..n)
                        .map(|b| (b != i).then(|| OpponentModel::random(spec, b, cfg, &mut rng)))
                        .collect()
                })
                .collect()
        });
        Ok(Self {
            spec: spec.clone(),
            cfg: cfg.clone(),
            seed,
            protocol,
            terms,
            policies,
            critics,
            optimizers,
            opponent_models,
            iteration: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn config(&self) -> &TrainerConfig {
        &self.cfg
    }

    fn rollout_options(&self) -> RolloutOptions {
        RolloutOptions { temperature: self.cfg.temperature.at(self.iteration), protocol: self.protocol }
    }

    /// Collects the batch for the current iteration without changing state.
    pub fn sample_batch(&self) -> Result<Vec<Trajectory>> {
        let b = self.cfg.batch_size;
        rollout_batch(
            &self.spec,
            &self.policies,
            &self.rollout_options(),
            self.seed,
            (self.iteration * b) as u64,
            b,
        )
    }

    fn entropy_bonus(&self) -> EntropyBonus {
        let t = self.cfg.entropy_targets;
        let committed = self.protocol == Protocol::Commitment;
        EntropyBonus {
            coefficient: self.cfg.entropy.at(self.iteration),
            proposal: t.proposal && committed,
            commitment: t.commitment && committed,
            action: t.action,
        }
    }

    /// Gradients agent `i` computes for itself and, when decentralized, for
    /// its estimates of every other agent: `(target, gradient)` pairs.
    fn agent_gradients(&self, i: usize, batch: &[Trajectory]) -> Vec<(usize, GradientAccumulator)> {
        let n = self.spec.n_agents();
        let entropy = self.entropy_bonus();
        let discounted = self.cfg.discounted_state_weighting;
        let view = match &self.opponent_models {
            None => View {
                commitments: self.policies.agents.iter().map(|a| &a.commitment).collect(),
                critics: self.critics.iter().collect(),
            },
            Some(models) => {
                let mine = &models[i];
                View {
                    commitments: (0..n)
                        .map(|j| match &mine[j] {
                            Some(m) => &m.policy.commitment,
                            None => &self.policies.agents[i].commitment,
                        })
                        .collect(),
                    critics: (0..n)
                        .map(|j| match &mine[j] {
                            Some(m) => &m.critic,
                            None => &self.critics[i],
                        })
                        .collect(),
                }
            }
        };
        let own = &self.policies.agents[i];
        let noise = match &self.opponent_models {
            Some(models) if !self.cfg.shared_noise => {
                let proposals: Vec<_> = (0..n)
                    .map(|j| match &models[i][j] {
                        Some(m) => &m.policy.proposal,
                        None => &own.proposal,
                    })
                    .collect();
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ NOISE_SALT);
                rng.set_stream((self.iteration * n + i) as u64);
                Some(estimators::NoiseTable::reconstruct(batch, i, &view, &proposals, &mut rng))
            }
            _ => None,
        };
        let noise = noise.as_ref();
        let mut out = Vec::with_capacity(n);
        let target = Target { agent: i, proposal: &own.proposal, action: &own.action };
        out.push((i, estimators::batch_gradients(&self.spec, &view, target, batch, noise, self.terms, entropy, discounted)));
        if let Some(models) = &self.opponent_models {
            for (b, model) in models[i].iter().enumerate() {
                if let Some(m) = model {
                    let target = Target { agent: b, proposal: &m.policy.proposal, action: &m.policy.action };
                    out.push((
                        b,
                        estimators::batch_gradients(&self.spec, &view, target, batch, noise, self.terms, entropy, discounted),
                    ));
                }
            }
        }
        out
    }

    /// Gradients agent `i` would apply to its own tables on `batch`, using
    /// the current critics (exposed for tests).
    pub fn own_gradients(&self, i: usize, batch: &[Trajectory]) -> GradientAccumulator {
        self.agent_gradients(i, batch).swap_remove(0).1
    }

    fn fit_critics(&mut self, batch: &[Trajectory]) -> Result<()> {
        let n = self.spec.n_agents();
        let stats: Vec<ReturnStats> = (0..n).map(|i| ReturnStats::collect(&self.spec, batch, i)).collect();
        let (lr, k) = (self.cfg.value_lr, self.cfg.updates_per_iteration);
        for (critic, s) in self.critics.iter_mut().zip(&stats) {
            critic.fit(s, lr, k)?;
        }
        if let Some(models) = &mut self.opponent_models {
            for row in models.iter_mut() {
                for (b, m) in row.iter_mut().enumerate() {
                    if let Some(m) = m {
                        m.critic.fit(&stats[b], lr, k)?;
                    }
                }
            }
        }
        Ok(())
    }

    /// One iteration: collect a batch, fit critics, update every policy.
    pub fn step(&mut self) -> Result<MetricsRow> {
        let batch = self.sample_batch()?;
        if batch.iter().all(|t| t.is_empty()) {
            return Err(Error::EmptyTrajectory);
        }
        self.fit_critics(&batch)?;
        let n = self.spec.n_agents();
        let grads = crate::par::map_collect(n, |i| self.agent_gradients(i, &batch));
        let cfg = self.cfg.clone();
        let it = self.iteration;
        for (i, list) in grads.into_iter().enumerate() {
            for (b, g) in list {
                let (policy, opt, label) = if b == i {
                    (&mut self.policies.agents[i], &mut self.optimizers[i], format!("agent{i}"))
                } else {
                    let m = self.opponent_models.as_mut().and_then(|m| m[i][b].as_mut()).ok_or_else(|| {
                        contract("opponent model missing")
                    })?;
                    (&mut m.policy, &mut m.optimizers, format!("agent{i}/model{b}"))
                };
                apply_update(policy, opt, g, &cfg).map_err(|t| Error::NonFinite {
                    table: format!("{label}/{t}"),
                    iteration: it,
                })?;
            }
        }
        for (i, c) in self.critics.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::NonFinite { table: format!("agent{i}/critic"), iteration: it });
            }
        }
        let mut row = MetricsRow::from_batch(&self.spec, &batch, it, self.seed);
        row.entropy_coef = cfg.entropy.at(it);
        row.temperature = cfg.temperature.at(it);
        self.iteration += 1;
        Ok(row)
    }

    /// Runs the remaining iterations, keeping every `metric_every`-th row and
    /// the last one.
    pub fn run(mut self) -> Result<TrainResult> {
        let total = self.cfg.iterations;
        let every = self.cfg.metric_every;
        let mut metrics = Vec::new();
        while self.iteration < total {
            let it = self.iteration;
            let row = self.step()?;
            if it.is_multiple_of(every) || it + 1 == total {
                debug!("iteration {it}: welfare {:.4} agreement {:.3}", row.welfare, row.agreement_rate);
                metrics.push(row);
            }
            if (it + 1).is_multiple_of(1000) {
                info!("seed {} iteration {}/{}", self.seed, it + 1, total);
            }
        }
        Ok(TrainResult {
            policies: self.policies,
            critics: self.critics,
            opponent_models: self.opponent_models,
            metrics,
        })
    }
}

fn clip(grad: &mut LogitTable, limit: Option<f64>) {
    if let Some(limit) = limit {
        let norm = grad.data().iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > limit {
            let s = limit / norm;
            grad.data_mut().iter_mut().for_each(|g| *g *= s);
        }
    }
}

/// Gradient ascent on one agent's tables. Returns the name of the first
/// table that is no longer finite.
fn apply_update(
    policy: &mut AgentPolicy,
    opt: &mut AgentOptimizers,
    mut g: GradientAccumulator,
    cfg: &TrainerConfig,
) -> std::result::Result<(), &'static str> {
    let lr = cfg.policy_lr;
    let ic = cfg.ic_enabled && cfg.ic_lambda != 0.0;
    if ic && cfg.ic_step == IcStep::Objective {
        g.proposal.add_scaled(&g.ic, cfg.ic_lambda);
    }
    for t in [&mut g.proposal, &mut g.commitment, &mut g.action] {
        clip(t, cfg.grad_clip);
    }
    for (name, t) in [("proposal", &g.proposal), ("commitment", &g.commitment), ("action", &g.action), ("ic", &g.ic)] {
        if !t.is_finite() {
            return Err(name);
        }
    }
    opt.proposal.ascend(policy.proposal.logits.data_mut(), g.proposal.data(), lr);
    opt.commitment.ascend(policy.commitment.logits.data_mut(), g.commitment.data(), lr);
    opt.action.ascend(policy.action.logits.data_mut(), g.action.data(), lr);
    if ic && cfg.ic_step == IcStep::Literal {
        policy.proposal.logits.add_scaled(&g.ic, cfg.ic_lambda);
    }
    for (name, t) in policy.tables() {
        if !t.is_finite() {
            return Err(name);
        }
    }
    Ok(())
}

/// Trains from uniform policies and returns the final policies and log.
pub fn train(spec: &GameSpec, cfg: &TrainerConfig, seed: u64) -> Result<TrainResult> {
    Trainer::new(spec, cfg, seed)?.run()
}

/// Centralized training regardless of `cfg.mode`.
pub fn train_centralized(spec: &GameSpec, cfg: &TrainerConfig, seed: u64) -> Result<TrainResult> {
    let cfg = TrainerConfig { mode: Mode::Centralized, ..cfg.clone() };
    train(spec, &cfg, seed)
}

/// Decentralized training regardless of `cfg.mode`.
pub fn train_decentralized(spec: &GameSpec, cfg: &TrainerConfig, seed: u64) -> Result<TrainResult> {
    let cfg = TrainerConfig { mode: Mode::Decentralized, ..cfg.clone() };
    train(spec, &cfg, seed)
}
