//! Exact values by enumeration, finite-difference gradients, and an
//! exhaustive equilibrium check over deterministic strategies.

use serde::Serialize;

use crate::envs::{COOPERATE, DEFECT};
use crate::error::{contract, Error, Result};
use crate::mcg::GameSpec;
use crate::models::relaxed::softmax;
use crate::models::PolicySet;
use crate::par;

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Choice probabilities of every agent, as needed for exact evaluation.
pub trait ChoiceProbabilities {
    fn proposal_probs(&self, agent: usize, state: usize) -> Vec<f64>;
    fn commit_prob(&self, agent: usize, state: usize, joint_proposal: usize) -> f64;
    fn action_probs(&self, agent: usize, state: usize) -> Vec<f64>;
}

impl ChoiceProbabilities for PolicySet {
    fn proposal_probs(&self, agent: usize, state: usize) -> Vec<f64> {
        softmax(self.agents[agent].proposal.logits.row(state))
    }
    fn commit_prob(&self, agent: usize, state: usize, joint_proposal: usize) -> f64 {
        self.agents[agent].commitment.commit_prob(state, joint_proposal)
    }
    fn action_probs(&self, agent: usize, state: usize) -> Vec<f64> {
        softmax(self.agents[agent].action.logits.row(state))
    }
}

/// One agent's pure strategy: a proposal and a fallback action per state and
/// a commit decision per (state, joint proposal).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DeterministicStrategy {
    pub proposal: Vec<usize>,
    /// `[state * n_joint + joint_proposal]`
    pub commit: Vec<bool>,
    pub action: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn new(spec: &GameSpec, agent: usize, proposal: Vec<usize>, commit: Vec<bool>, action: Vec<usize>) -> Result<Self> {
        let s = Self { proposal, commit, action };
        s.check(spec, agent)?;
        Ok(s)
    }

    /// Same choice in every state.
    pub fn stationary(spec: &GameSpec, agent: usize, proposal: usize, commit: impl Fn(usize) -> bool, action: usize) -> Result<Self> {
        let n = spec.n_states();
        let commit = (0..n * spec.joint().len()).map(|k| commit(k % spec.joint().len())).collect();
        Self::new(spec, agent, vec![proposal; n], commit, vec![action; n])
    }

    pub fn check(&self, spec: &GameSpec, agent: usize) -> Result<()> {
        let n = spec.n_states();
        if self.proposal.len() != n || self.action.len() != n || self.commit.len() != n * spec.joint().len() {
            return Err(contract("strategy must cover every state and joint proposal"));
        }
        if self.proposal.iter().any(|&m| m >= spec.n_proposals(agent)) || self.action.iter().any(|&a| a >= spec.n_actions(agent)) {
            return Err(contract(format!("strategy choice out of range for agent {agent}")));
        }
        Ok(())
    }

    /// Number of pure strategies for one agent, or `None` past `usize`.
    pub fn count(spec: &GameSpec, agent: usize) -> Option<usize> {
        let per_state = spec
            .n_proposals(agent)
            .checked_mul(spec.n_actions(agent))?
            .checked_mul(1usize.checked_shl(u32::try_from(spec.joint().len()).ok()?)?)?;
        (0..spec.n_states()).try_fold(1usize, |acc, _| acc.checked_mul(per_state))
    }

    /// Every pure strategy of `agent`; refuses more than `cap`.
    pub fn enumerate(spec: &GameSpec, agent: usize, cap: usize) -> Result<Vec<Self>> {
        let total = within_cap(Self::count(spec, agent), cap)?;
        let nj = spec.joint().len();
        let (np, na) = (spec.n_proposals(agent), spec.n_actions(agent));
        let per_state = (np * na) << nj;
        let n = spec.n_states();
        Ok((0..total)
            .map(|mut code| {
                let mut s = Self { proposal: vec![0; n], commit: vec![false; n * nj], action: vec![0; n] };
                for st in 0..n {
                    let mut c = code % per_state;
                    code /= per_state;
                    s.proposal[st] = c % np;
                    c /= np;
                    s.action[st] = c % na;
                    c /= na;
                    for j in 0..nj {
                        s.commit[st * nj + j] = (c >> j) & 1 == 1;
                    }
                }
                s
            })
            .collect())
    }
}

/// Passes `required` through if it fits under `cap`.
fn within_cap(required: Option<usize>, cap: usize) -> Result<usize> {
    match required {
        Some(r) if r <= cap => Ok(r),
        _ => Err(Error::EnumerationCap { required: required.map_or(u128::MAX, |r| r as u128), cap: cap as u128 }),
    }
}

fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// A full tuple, one strategy per agent.
#[derive(Debug, Clone, Copy)]
pub struct StrategyTuple<'a> {
    spec: &'a GameSpec,
    strategies: &'a [DeterministicStrategy],
}

impl<'a> StrategyTuple<'a> {
    pub fn new(spec: &'a GameSpec, strategies: &'a [DeterministicStrategy]) -> Result<Self> {
        if strategies.len() != spec.n_agents() {
            return Err(contract("one strategy per agent required"));
        }
        for (i, s) in strategies.iter().enumerate() {
            s.check(spec, i)?;
        }
        Ok(Self { spec, strategies })
    }
}

impl ChoiceProbabilities for StrategyTuple<'_> {
    fn proposal_probs(&self, agent: usize, state: usize) -> Vec<f64> {
        one_hot(self.spec.n_proposals(agent), self.strategies[agent].proposal[state])
    }
    fn commit_prob(&self, agent: usize, state: usize, joint_proposal: usize) -> f64 {
        let c = self.strategies[agent].commit[state * self.spec.joint().len() + joint_proposal];
        if c { 1.0 } else { 0.0 }
    }
    fn action_probs(&self, agent: usize, state: usize) -> Vec<f64> {
        one_hot(self.spec.n_actions(agent), self.strategies[agent].action[state])
    }
}

/// Joint probabilities as a product of marginals over the joint index.
fn product(spec: &GameSpec, marginals: &[Vec<f64>]) -> Vec<f64> {
    let joint = spec.joint();
    (0..joint.len())
        .map(|j| marginals.iter().enumerate().map(|(i, p)| p[joint.component(j, i)]).product())
        .collect()
}

/// Exact expected discounted return of every agent from the initial state,
/// by backward induction over the decision clock.
pub fn exact_value<P: ChoiceProbabilities + ?Sized>(spec: &GameSpec, policies: &P) -> Result<Vec<f64>> {
    exact_value_capped(spec, policies, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_value_capped<P: ChoiceProbabilities + ?Sized>(spec: &GameSpec, policies: &P, cap: usize) -> Result<Vec<f64>> {
    let (n, ns, nj) = (spec.n_agents(), spec.n_states(), spec.joint().len());
    let work = spec.horizon().checked_mul(ns).and_then(|w| w.checked_mul(nj)).and_then(|w| w.checked_mul(nj));
    within_cap(work, cap)?;
    let mut next = vec![vec![0.0; n]; ns];
    for _ in 0..spec.horizon() {
        let mut current = vec![vec![0.0; n]; ns];
        for (s, v) in current.iter_mut().enumerate() {
            // q[j][i]: reward plus continuation when joint action j is played
            let q: Vec<Vec<f64>> = (0..nj)
                .map(|j| {
                    let r = spec.reward_of(s, j);
                    (0..n)
                        .map(|i| r[i] + spec.gamma() * spec.transition_of(s, j).iter().map(|&(s2, p)| p * next[s2][i]).sum::<f64>())
                        .collect()
                })
                .collect();
            let proposals = product(spec, &(0..n).map(|i| policies.proposal_probs(i, s)).collect::<Vec<_>>());
            let actions = product(spec, &(0..n).map(|i| policies.action_probs(i, s)).collect::<Vec<_>>());
            let fallback: Vec<f64> = (0..n).map(|i| actions.iter().zip(&q).map(|(p, qj)| p * qj[i]).sum()).collect();
            for (m, &pm) in proposals.iter().enumerate().filter(|(_, p)| **p > 0.0) {
                let agree: f64 = (0..n).map(|i| policies.commit_prob(i, s, m)).product();
                for i in 0..n {
                    v[i] += pm * (agree * q[m][i] + (1.0 - agree) * fallback[i]);
                }
            }
        }
        next = current;
    }
    Ok(next.swap_remove(spec.initial_state()))
}

/// Central differences of `objective` at `params`, one coordinate at a time.
pub fn finite_difference_grad(mut objective: impl FnMut(&[f64]) -> f64, params: &[f64], epsilon: f64) -> Vec<f64> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let mut x = params.to_vec();
    (0..x.len())
        .map(|k| {
            let orig = x[k];
            x[k] = orig + epsilon;
            let up = objective(&x);
            x[k] = orig - epsilon;
            let down = objective(&x);
            x[k] = orig;
            (up - down) / (2.0 * epsilon)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub agent: usize,
    pub strategy: DeterministicStrategy,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub tuple: Vec<DeterministicStrategy>,
    pub value: Vec<f64>,
    pub is_nash: bool,
    pub is_pareto_optimal: bool,
    /// Every unilateral deviation scanned, including the strategy itself.
    pub deviations: Vec<Deviation>,
    /// A value vector from another pure tuple that Pareto-dominates `value`.
    pub dominated_by: Option<Vec<f64>>,
}

impl EquilibriumReport {
    pub fn scanned(&self, agent: usize) -> usize {
        self.deviations.iter().filter(|d| d.agent == agent).count()
    }

    pub fn best_deviation(&self) -> Option<&Deviation> {
        self.deviations.iter().max_by(|a, b| a.gain.total_cmp(&b.gain))
    }
}

const GAIN_TOL: f64 = 1e-9;

pub fn verify_equilibrium(spec: &GameSpec, tuple: &[DeterministicStrategy]) -> Result<EquilibriumReport> {
    verify_equilibrium_capped(spec, tuple, DEFAULT_ENUMERATION_CAP)
}

/// Scans every unilateral pure deviation for the Nash check and every pure
/// tuple for the Pareto check. `cap` bounds the number of tuple evaluations.
pub fn verify_equilibrium_capped(spec: &GameSpec, tuple: &[DeterministicStrategy], cap: usize) -> Result<EquilibriumReport> {
    let value = exact_value_capped(spec, &StrategyTuple::new(spec, tuple)?, cap)?;
    let n = spec.n_agents();
    let strategies: Vec<Vec<DeterministicStrategy>> =
        (0..n).map(|i| DeterministicStrategy::enumerate(spec, i, cap)).collect::<Result<_>>()?;
    let unilateral: usize = strategies.iter().map(Vec::len).sum();
    let joint_count = strategies.iter().try_fold(1usize, |acc, s| acc.checked_mul(s.len()));
    within_cap(joint_count.and_then(|j| j.checked_add(unilateral)), cap)?;
    let joint_count = joint_count.unwrap_or_default();

    let mut candidates = Vec::with_capacity(unilateral);
    for (i, alts) in strategies.iter().enumerate() {
        candidates.extend(alts.iter().map(|s| (i, s)));
    }
    let deviations = par::map_slice(&candidates, |&(agent, s)| {
        let mut t = tuple.to_vec();
        t[agent] = s.clone();
        let v = exact_value_capped(spec, &StrategyTuple::new(spec, &t)?, cap)?;
        Ok(Deviation { agent, strategy: s.clone(), gain: v[agent] - value[agent] })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let is_nash = deviations.iter().all(|d| d.gain <= GAIN_TOL);

    let dominators = par::map_collect(joint_count, |mut code| {
        let t: Vec<DeterministicStrategy> = strategies
            .iter()
            .map(|alts| {
                let s = alts[code % alts.len()].clone();
                code /= alts.len();
                s
            })
            .collect();
        let v = exact_value_capped(spec, &StrategyTuple::new(spec, &t)?, cap)?;
        let dominates = v.iter().zip(&value).all(|(a, b)| *a >= b - GAIN_TOL)
            && v.iter().zip(&value).any(|(a, b)| *a > b + GAIN_TOL);
        Ok(dominates.then_some(v))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let dominated_by = dominators.into_iter().flatten().next();

    Ok(EquilibriumReport {
        tuple: tuple.to_vec(),
        value,
        is_nash,
        is_pareto_optimal: dominated_by.is_none(),
        deviations,
        dominated_by,
    })
}

fn check_two_by_two(spec: &GameSpec) -> Result<()> {
    if spec.n_agents() != 2 || (0..2).any(|i| spec.n_actions(i) != 2) {
        return Err(contract("expected a two-agent, two-action game"));
    }
    Ok(())
}

/// Propose C, commit iff the co-player proposes C (on (D, D) as given by
/// `commit_on_mutual_defect`), fall back to D.
pub fn cooperative_tuple(spec: &GameSpec, commit_on_mutual_defect: bool) -> Result<Vec<DeterministicStrategy>> {
    check_two_by_two(spec)?;
    (0..2)
        .map(|i| {
            let other = 1 - i;
            DeterministicStrategy::stationary(
                spec,
                i,
                COOPERATE,
                |j| {
                    let joint = spec.joint();
                    if joint.component(j, i) == DEFECT && joint.component(j, other) == DEFECT {
                        commit_on_mutual_defect
                    } else {
                        joint.component(j, other) == COOPERATE
                    }
                },
                DEFECT,
            )
        })
        .collect()
}

/// Propose D, never commit, play D.
pub fn mutual_defection_tuple(spec: &GameSpec) -> Result<Vec<DeterministicStrategy>> {
    check_two_by_two(spec)?;
    (0..2).map(|i| DeterministicStrategy::stationary(spec, i, DEFECT, |_| false, DEFECT)).collect()
}
