//! Sample-based policy gradients for the three policies of one agent.
//!
//! Each recorded step contributes
//!
//! * action: `(1 - 1(c=1)) Q(x,a) d log pi(a|x)`
//! * commitment: `G d log psi(c|x,m) + [Q(x,m) - Q(x,a)] prod_{k!=i} 1(c_k=1) d c_soft`
//! * proposal: `G (d log phi(m|x) + sum_j d log psi_j(c_j|x,m))
//!   + sum_j prod_{k!=j} 1(c_k=1) [Q(x,m) - Q(x,a)] d c_soft_j`
//! * incentive compatibility: `sum_j d min{0, Q_j(x,m) - Q_j(x,a)}`
//!
//! where `G = 1(c=1) Q(x,m) + (1 - 1(c=1)) Q(x,a)`. Derivatives through the
//! hard proposal and commitment samples use the straight-through Gumbel-softmax
//! rule with the noise recorded at sampling time. Critic values are constants.

use rand::Rng;

use crate::mcg::{GameSpec, Noise, PerAgent, StepRecord, Trajectory};
use crate::models::relaxed::{conditional_commit_noise, conditional_gumbel, sigmoid, soft_commit, softmax};
use crate::models::{entropy_and_grad, ActionPolicy, CommitmentPolicy, CriticTable, LogitTable, ProposalPolicy};

/// Which parts of the estimators to accumulate. Everything is on by default;
/// tests switch individual terms on to check them in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub action: bool,
    pub commitment_score: bool,
    pub commitment_pathwise: bool,
    pub proposal_score: bool,
    /// `sum_j d log psi_j` through the relaxed proposal.
    pub proposal_commit_score: bool,
    pub proposal_pathwise: bool,
    pub ic: bool,
}

impl Terms {
    pub const ALL: Terms = Terms {
        action: true,
        commitment_score: true,
        commitment_pathwise: true,
        proposal_score: true,
        proposal_commit_score: true,
        proposal_pathwise: true,
        ic: true,
    };
    pub const NONE: Terms = Terms {
        action: false,
        commitment_score: false,
        commitment_pathwise: false,
        proposal_score: false,
        proposal_commit_score: false,
        proposal_pathwise: false,
        ic: false,
    };
    pub const ACTION_ONLY: Terms = Terms { action: true, ..Terms::NONE };
}

impl Default for Terms {
    fn default() -> Self {
        Terms::ALL
    }
}

/// Gradient tables for one agent, aligned with its logit tables. The
/// incentive-compatibility gradient on the proposal logits is kept apart so
/// the trainer can weight it with the Lagrange multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientAccumulator {
    pub proposal: LogitTable,
    pub commitment: LogitTable,
    pub action: LogitTable,
    pub ic: LogitTable,
}

impl GradientAccumulator {
    pub fn zeros(spec: &GameSpec, agent: usize) -> Self {
        let n = spec.n_actions(agent);
        let s = spec.n_states();
        Self {
            proposal: LogitTable::zeros(s, n),
            commitment: LogitTable::zeros(s * spec.joint().len(), 2),
            action: LogitTable::zeros(s, n),
            ic: LogitTable::zeros(s, n),
        }
    }

    pub fn add(&mut self, other: &Self) {
        self.proposal.add_scaled(&other.proposal, 1.0);
        self.commitment.add_scaled(&other.commitment, 1.0);
        self.action.add_scaled(&other.action, 1.0);
        self.ic.add_scaled(&other.ic, 1.0);
    }

    pub fn scale(&mut self, factor: f64) {
        for t in [&mut self.proposal, &mut self.commitment, &mut self.action, &mut self.ic] {
            t.data_mut().iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// What a learner sees of every agent: a commitment policy and a critic per
/// agent. Centrally these are the true ones; a decentralized learner puts its
/// own estimates in the other agents' slots.
#[derive(Debug, Clone)]
pub struct View<'a> {
    pub commitments: Vec<&'a CommitmentPolicy>,
    pub critics: Vec<&'a CriticTable>,
}

/// The agent whose parameters receive the gradient. Its commitment policy and
/// critic are the ones in the view's `agent` slot.
#[derive(Debug, Clone, Copy)]
pub struct Target<'a> {
    pub agent: usize,
    pub proposal: &'a ProposalPolicy,
    pub action: &'a ActionPolicy,
}

/// Per-policy entropy bonus switches and the current coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBonus {
    pub coefficient: f64,
    pub proposal: bool,
    pub commitment: bool,
    pub action: bool,
}

impl EntropyBonus {
    pub const OFF: EntropyBonus = EntropyBonus { coefficient: 0.0, proposal: false, commitment: false, action: false };
}

/// Gumbel noise behind every agent's proposal and commitment at one step.
#[derive(Debug, Clone, Copy)]
pub struct StepNoise<'a> {
    pub proposal: &'a [Noise],
    pub commit: &'a [[f64; 2]],
}

impl<'a> StepNoise<'a> {
    pub fn recorded(step: &'a StepRecord) -> Self {
        Self { proposal: &step.proposal_noise, commit: &step.commit_noise }
    }
}

type StepDraws = (PerAgent<Noise>, PerAgent<[f64; 2]>);

/// Noise as one learner sees it, `[episode][t]`. The learner knows its own
/// draws; for every other agent it only observed the proposal and the
/// decision, so it draws noise from the posterior given those choices under
/// its estimates of that agent.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTable {
    steps: Vec<Vec<StepDraws>>,
}

impl NoiseTable {
    pub fn reconstruct<R: Rng + ?Sized>(
        batch: &[Trajectory],
        learner: usize,
        view: &View<'_>,
        proposals: &[&ProposalPolicy],
        rng: &mut R,
    ) -> Self {
        let steps = batch
            .iter()
            .map(|traj| {
                traj.steps
                    .iter()
                    .map(|s| {
                        let mut prop = s.proposal_noise.clone();
                        let mut commit = s.commit_noise.clone();
                        for j in (0..s.commits.len()).filter(|&j| j != learner) {
                            prop[j] = conditional_gumbel(proposals[j].logits.row(s.state), s.proposals[j], rng);
                            let lo = view.commitments[j].log_odds(s.state, s.joint_proposal);
                            commit[j] = conditional_commit_noise(lo, s.commits[j], rng);
                        }
                        (prop, commit)
                    })
                    .collect()
            })
            .collect();
        Self { steps }
    }

    pub fn at(&self, episode: usize, t: usize) -> StepNoise<'_> {
        let (p, c) = &self.steps[episode][t];
        StepNoise { proposal: p, commit: c }
    }
}

fn others_commit(commits: &[bool], except: usize) -> bool {
    commits.iter().enumerate().all(|(k, &c)| k == except || c)
}

/// Step-independent lookups for one target: probabilities and entropy
/// gradients of its rows and every viewed agent's commit log-odds.
struct Prepared {
    action_probs: Vec<f64>,
    proposal_probs: Vec<f64>,
    action_entropy: Vec<f64>,
    proposal_entropy: Vec<f64>,
    commitment_entropy: Vec<f64>,
    /// `[agent][state * n_joint + joint]`
    log_odds: Vec<Vec<f64>>,
    commit_prob: Vec<Vec<f64>>,
}

fn row_map(table: &LogitTable, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    (0..table.rows()).flat_map(|r| f(table.row(r))).collect()
}

impl Prepared {
    fn new(view: &View<'_>, target: Target<'_>, entropy: EntropyBonus) -> Self {
        let grad_h = |l: &[f64]| entropy_and_grad(l).1;
        let own = view.commitments[target.agent];
        let rows = own.logits.rows();
        let log_odds: Vec<Vec<f64>> = view
            .commitments
            .iter()
            .map(|c| (0..rows).map(|r| c.logits.row(r)[1] - c.logits.row(r)[0]).collect())
            .collect();
        let commit_prob = log_odds.iter().map(|lo| lo.iter().map(|&l| sigmoid(l)).collect()).collect();
        let on = entropy.coefficient != 0.0;
        Self {
            action_probs: row_map(&target.action.logits, softmax),
            proposal_probs: row_map(&target.proposal.logits, softmax),
            action_entropy: if on && entropy.action { row_map(&target.action.logits, grad_h) } else { Vec::new() },
            proposal_entropy: if on && entropy.proposal { row_map(&target.proposal.logits, grad_h) } else { Vec::new() },
            commitment_entropy: if on && entropy.commitment { row_map(&own.logits, grad_h) } else { Vec::new() },
            log_odds,
            commit_prob,
        }
    }
}

/// Accumulates per-step contributions for one target agent.
pub struct StepEstimator<'a> {
    spec: &'a GameSpec,
    view: &'a View<'a>,
    target: Target<'a>,
    terms: Terms,
    entropy: EntropyBonus,
    prepared: Prepared,
    cot: Vec<f64>,
    ic_cot: Vec<f64>,
    soft: Vec<f64>,
}

impl<'a> StepEstimator<'a> {
    pub fn new(spec: &'a GameSpec, view: &'a View<'a>, target: Target<'a>, terms: Terms, entropy: EntropyBonus) -> Self {
        let width = spec.n_actions(target.agent);
        Self {
            spec,
            view,
            target,
            terms,
            entropy,
            prepared: Prepared::new(view, target, entropy),
            cot: vec![0.0; width],
            ic_cot: vec![0.0; width],
            soft: vec![0.0; width],
        }
    }

    /// Adds one step's contributions, scaled by `weight`, into `acc`.
    pub fn add(&mut self, step: &StepRecord, noise: StepNoise<'_>, weight: f64, acc: &mut GradientAccumulator) {
        let Self { spec, view, target, terms, entropy, prepared: pre, .. } = self;
        let i = target.agent;
        let x = step.state;
        let ja = step.joint_counterfactual;
        let critic = view.critics[i];
        let qa = critic.value(x, ja);
        let all = step.all_commit();
        let width = spec.n_actions(i);
        let base = x * width;
        let ent = weight * entropy.coefficient;

        if terms.action && !all {
            let chosen = step.counterfactual[i];
            let probs = &pre.action_probs[base..base + width];
            for (k, (g, p)) in acc.action.row_mut(x).iter_mut().zip(probs).enumerate() {
                let indicator = if k == chosen { 1.0 } else { 0.0 };
                *g += weight * qa * (indicator - p);
            }
        }
        if !pre.action_entropy.is_empty() {
            for (g, d) in acc.action.row_mut(x).iter_mut().zip(&pre.action_entropy[base..base + width]) {
                *g += ent * d;
            }
        }
        if step.commits.is_empty() {
            return;
        }

        let jm = step.joint_proposal;
        let tau = step.temperature;
        let qm = critic.value(x, jm);
        let coef = if all { qm } else { qa };
        let gap = qm - qa;
        let row_idx = x * spec.joint().len() + jm;

        // commitment logits of the target at (x, m)
        let mut d_log_odds = 0.0;
        if terms.commitment_score {
            let c = if step.commits[i] { 1.0 } else { 0.0 };
            d_log_odds += coef * (c - pre.commit_prob[i][row_idx]);
        }
        if terms.commitment_pathwise && others_commit(&step.commits, i) {
            let s = soft_commit(pre.log_odds[i][row_idx], &noise.commit[i], tau);
            d_log_odds += gap * s * (1.0 - s) / tau;
        }
        if d_log_odds != 0.0 {
            let row = acc.commitment.row_mut(row_idx);
            row[0] -= weight * d_log_odds;
            row[1] += weight * d_log_odds;
        }
        if !pre.commitment_entropy.is_empty() {
            let h = &pre.commitment_entropy[2 * row_idx..2 * row_idx + 2];
            for (g, d) in acc.commitment.row_mut(row_idx).iter_mut().zip(h) {
                *g += ent * d;
            }
        }

        // proposal logits of the target at x
        if terms.proposal_score {
            let chosen = step.proposals[i];
            let probs = &pre.proposal_probs[base..base + width];
            for (k, (g, p)) in acc.proposal.row_mut(x).iter_mut().zip(probs).enumerate() {
                let indicator = if k == chosen { 1.0 } else { 0.0 };
                *g += weight * coef * (indicator - p);
            }
        }
        if !pre.proposal_entropy.is_empty() {
            for (g, d) in acc.proposal.row_mut(x).iter_mut().zip(&pre.proposal_entropy[base..base + width]) {
                *g += ent * d;
            }
        }

        let joint = spec.joint();
        let row0 = x * joint.len();
        let cot = &mut self.cot;
        cot.iter_mut().for_each(|v| *v = 0.0);
        let mut path_active = false;
        if terms.proposal_commit_score || terms.proposal_pathwise {
            for j in 0..spec.n_agents() {
                let mut factor = 0.0;
                if terms.proposal_commit_score {
                    let c = if step.commits[j] { 1.0 } else { 0.0 };
                    factor += coef * (c - pre.commit_prob[j][row_idx]);
                }
                if terms.proposal_pathwise && others_commit(&step.commits, j) {
                    let s = soft_commit(pre.log_odds[j][row_idx], &noise.commit[j], tau);
                    factor += gap * s * (1.0 - s) / tau;
                }
                if factor != 0.0 {
                    path_active = true;
                    // d log-odds_j / d soft proposal of i, at the hard proposal
                    for (v, c) in cot.iter_mut().enumerate() {
                        *c += factor * pre.log_odds[j][row0 + joint.with_component(jm, i, v)];
                    }
                }
            }
        }
        let ic_cot = &mut self.ic_cot;
        let mut ic_active = false;
        if terms.ic {
            ic_cot.iter_mut().for_each(|v| *v = 0.0);
            for q in &view.critics {
                if q.value(x, jm) < q.value(x, ja) {
                    ic_active = true;
                    for (v, c) in ic_cot.iter_mut().enumerate() {
                        *c += q.value(x, joint.with_component(jm, i, v));
                    }
                }
            }
        }
        if path_active || ic_active {
            let eta = target.proposal.logits.row(x);
            let noise_i = &noise.proposal[i];
            let soft = &mut self.soft;
            let max = eta.iter().zip(noise_i).map(|(l, g)| (l + g) / tau).fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (y, (l, g)) in soft.iter_mut().zip(eta.iter().zip(noise_i)) {
                *y = ((l + g) / tau - max).exp();
                z += *y;
            }
            soft.iter_mut().for_each(|y| *y /= z);
            let pull = |cot: &[f64], out: &mut [f64]| {
                let dot: f64 = soft.iter().zip(cot).map(|(y, v)| y * v).sum();
                for (o, (y, v)) in out.iter_mut().zip(soft.iter().zip(cot)) {
                    *o += weight * y * (v - dot) / tau;
                }
            };
            if path_active {
                pull(cot, acc.proposal.row_mut(x));
            }
            if ic_active {
                pull(ic_cot, acc.ic.row_mut(x));
            }
        }
    }
}

/// Adds one step's contributions, scaled by `weight`, into `acc`.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_step(
    spec: &GameSpec,
    view: &View<'_>,
    target: Target<'_>,
    step: &StepRecord,
    noise: StepNoise<'_>,
    weight: f64,
    terms: Terms,
    entropy: EntropyBonus,
    acc: &mut GradientAccumulator,
) {
    StepEstimator::new(spec, view, target, terms, entropy).add(step, noise, weight, acc);
}

/// Per-step weights: `1/|D|`, times `gamma^t` when discounted state
/// weighting is on.
pub fn step_weight(batch_len: usize, gamma: f64, t: usize, discounted: bool) -> f64 {
    let base = 1.0 / batch_len as f64;
    if discounted {
        base * gamma.powi(t as i32)
    } else {
        base
    }
}

/// Batch-mean gradients for one target agent.
#[allow(clippy::too_many_arguments)]
pub fn batch_gradients(
    spec: &GameSpec,
    view: &View<'_>,
    target: Target<'_>,
    batch: &[Trajectory],
    noise: Option<&NoiseTable>,
    terms: Terms,
    entropy: EntropyBonus,
    discounted_state_weighting: bool,
) -> GradientAccumulator {
    let mut acc = GradientAccumulator::zeros(spec, target.agent);
    let mut est = StepEstimator::new(spec, view, target, terms, entropy);
    for (e, traj) in batch.iter().enumerate() {
        for (t, step) in traj.steps.iter().enumerate() {
            let w = step_weight(batch.len(), spec.gamma(), t, discounted_state_weighting);
            let n = noise.map_or_else(|| StepNoise::recorded(step), |table| table.at(e, t));
            est.add(step, n, w, &mut acc);
        }
    }
    acc
}

fn central_view<'a>(policies: &'a crate::models::PolicySet, critics: &'a [CriticTable]) -> View<'a> {
    View {
        commitments: policies.agents.iter().map(|a| &a.commitment).collect(),
        critics: critics.iter().collect(),
    }
}

fn central_target(policies: &crate::models::PolicySet, agent: usize) -> Target<'_> {
    let a = &policies.agents[agent];
    Target { agent, proposal: &a.proposal, action: &a.action }
}

fn only(
    spec: &GameSpec,
    batch: &[Trajectory],
    critics: &[CriticTable],
    policies: &crate::models::PolicySet,
    agent: usize,
    terms: Terms,
) -> GradientAccumulator {
    batch_gradients(
        spec,
        &central_view(policies, critics),
        central_target(policies, agent),
        batch,
        None,
        terms,
        EntropyBonus::OFF,
        false,
    )
}

/// Action-policy gradient of `agent` with every agent's true policies.
pub fn estimate_action_grad(
    spec: &GameSpec,
    batch: &[Trajectory],
    critics: &[CriticTable],
    policies: &crate::models::PolicySet,
    agent: usize,
) -> LogitTable {
    only(spec, batch, critics, policies, agent, Terms::ACTION_ONLY).action
}

pub fn estimate_commitment_grad(
    spec: &GameSpec,
    batch: &[Trajectory],
    critics: &[CriticTable],
    policies: &crate::models::PolicySet,
    agent: usize,
) -> LogitTable {
    let terms = Terms { commitment_score: true, commitment_pathwise: true, ..Terms::NONE };
    only(spec, batch, critics, policies, agent, terms).commitment
}

pub fn estimate_proposal_grad(
    spec: &GameSpec,
    batch: &[Trajectory],
    critics: &[CriticTable],
    policies: &crate::models::PolicySet,
    agent: usize,
) -> LogitTable {
    let terms = Terms { proposal_score: true, proposal_commit_score: true, proposal_pathwise: true, ..Terms::NONE };
    only(spec, batch, critics, policies, agent, terms).proposal
}

/// Gradient of `sum_j min{0, Q_j(x,m) - Q_j(x,a)}` with respect to `agent`'s
/// proposal logits.
pub fn estimate_ic_grad(
    spec: &GameSpec,
    batch: &[Trajectory],
    critics: &[CriticTable],
    policies: &crate::models::PolicySet,
    agent: usize,
) -> LogitTable {
    let terms = Terms { ic: true, ..Terms::NONE };
    only(spec, batch, critics, policies, agent, terms).ic
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{prisoners_dilemma, COOPERATE, DEFECT};
    use crate::mcg::{rollout_batch, Protocol, RolloutOptions};
    use crate::models::{multilinear, PolicySet};
    use crate::oracle::finite_difference_grad;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const OPTIONS: RolloutOptions = RolloutOptions { temperature: 1.0, protocol: Protocol::Commitment };

    fn pd_critics(spec: &GameSpec) -> Vec<CriticTable> {
        (0..2).map(|i| CriticTable::immediate_rewards(spec, i)).collect()
    }

    #[test]
    fn action_gradient_vanishes_when_everyone_commits() {
        let spec = prisoners_dilemma();
        let mut p = PolicySet::uniform(&spec);
        for a in &mut p.agents {
            a.commitment.logits.data_mut().chunks_mut(2).for_each(|c| c.copy_from_slice(&[0.0, 60.0]));
        }
        let batch = rollout_batch(&spec, &p, &OPTIONS, 1, 0, 256).unwrap();
        assert!(batch.iter().all(|t| t.steps[0].all_commit()));
        for i in 0..2 {
            let g = estimate_action_grad(&spec, &batch, &pd_critics(&spec), &p, i);
            assert!(g.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn ic_gradient_vanishes_without_violations() {
        // a critic that prefers every joint action to (D, D) is never violated
        // when the counterfactual is (D, D)
        let spec = prisoners_dilemma();
        let mut p = PolicySet::uniform(&spec);
        for a in &mut p.agents {
            a.action.logits.row_mut(0).copy_from_slice(&[-60.0, 0.0]);
        }
        let critics: Vec<CriticTable> =
            (0..2).map(|_| CriticTable::from_values(&spec, vec![1.0, 0.5, 0.5, 0.0], Default::default()).unwrap()).collect();
        let batch = rollout_batch(&spec, &p, &OPTIONS, 2, 0, 256).unwrap();
        for i in 0..2 {
            assert!(estimate_ic_grad(&spec, &batch, &critics, &p, i).data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_violated_constraint_matches_finite_differences() {
        let spec = prisoners_dilemma();
        let mut p = PolicySet::uniform(&spec);
        p.agents[0].proposal.logits.row_mut(0).copy_from_slice(&[0.3, -0.4]);
        let critics = pd_critics(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // agent 0 proposes D, agent 1 C: the pair (D, C) against fallback (D, D)
        // violates only agent 1's constraint (-3 < -2)
        let batch = loop {
            let b = rollout_batch(&spec, &p, &OPTIONS, rng.random(), 0, 1).unwrap();
            let s = &b[0].steps[0];
            if s.proposals.as_slice() == [DEFECT, COOPERATE] && s.counterfactual.as_slice() == [DEFECT, DEFECT] {
                break b;
            }
        };
        let s = &batch[0].steps[0];
        let g = estimate_ic_grad(&spec, &batch, &critics, &p, 0);
        let tau = s.temperature;
        let hard = [0.0, 1.0];
        let other = [1.0, 0.0];
        let y0 = crate::models::relaxed::tempered_softmax(p.agents[0].proposal.logits.row(0), &s.proposal_noise[0], tau);
        let surrogate = |eta: &[f64]| {
            let y = crate::models::relaxed::tempered_softmax(eta, &s.proposal_noise[0], tau);
            let soft: Vec<f64> = (0..2).map(|k| hard[k] + y[k] - y0[k]).collect();
            critics
                .iter()
                .map(|q| {
                    let (qm, _) = multilinear(q.row(0), spec.joint(), &[&soft, &other]).unwrap();
                    (qm - q.value(0, s.joint_counterfactual)).min(0.0)
                })
                .sum::<f64>()
        };
        let fd = finite_difference_grad(surrogate, p.agents[0].proposal.logits.row(0), 1e-6);
        for (a, b) in g.row(0).iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!(g.row(0).iter().any(|v| v.abs() > 1e-3));
    }

    #[test]
    fn reconstructed_noise_keeps_the_learners_own_draws() {
        let spec = prisoners_dilemma();
        let p = PolicySet::uniform(&spec);
        let batch = rollout_batch(&spec, &p, &OPTIONS, 4, 0, 64).unwrap();
        let critics = pd_critics(&spec);
        let view = View { commitments: p.agents.iter().map(|a| &a.commitment).collect(), critics: critics.iter().collect() };
        let proposals: Vec<&ProposalPolicy> = p.agents.iter().map(|a| &a.proposal).collect();
        let table = NoiseTable::reconstruct(&batch, 0, &view, &proposals, &mut ChaCha8Rng::seed_from_u64(0));
        for (e, t) in batch.iter().enumerate() {
            let s = &t.steps[0];
            let n = table.at(e, 0);
            assert_eq!(n.proposal[0], s.proposal_noise[0]);
            assert_eq!(n.commit[0], s.commit_noise[0]);
            assert_ne!(n.proposal[1], s.proposal_noise[1]);
            let lo = p.agents[1].commitment.log_odds(0, s.joint_proposal);
            assert_eq!(lo + n.commit[1][1] - n.commit[1][0] > 0.0, s.commits[1]);
        }
    }
}
