//! Tabular softmax policies, critics and the derivative primitives the
//! gradient estimators are assembled from.

pub mod critic;
pub mod optim;
pub mod relaxed;

use std::collections::BTreeMap;

use crate::error::{contract, Result};
use crate::mcg::{GameSpec, JointPolicy, JointSpace};
use relaxed::{log_softmax, sigmoid, softmax};

pub use critic::CriticTable;

/// Dense row-major table of logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl LogitTable {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(contract(format!("{} values for a {rows}x{cols} table", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn probs(&self, r: usize) -> Vec<f64> {
        softmax(self.row(r))
    }
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// `log p(chosen | row)` and its gradient over the whole table, which is
    /// `one_hot(chosen) - softmax(row)` on that row and zero elsewhere.
    pub fn log_prob_and_grad(&self, r: usize, chosen: usize) -> (f64, LogitTable) {
        let (lp, g) = log_prob_row_grad(self.row(r), chosen);
        let mut full = LogitTable::zeros(self.rows, self.cols);
        full.row_mut(r).copy_from_slice(&g);
        (lp, full)
    }

    pub fn add_scaled(&mut self, other: &LogitTable, scale: f64) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }
}

/// Log-probability of `chosen` under `softmax(logits)` and its gradient.
pub fn log_prob_row_grad(logits: &[f64], chosen: usize) -> (f64, Vec<f64>) {
    let lp = log_softmax(logits);
    let mut g: Vec<f64> = lp.iter().map(|l| -l.exp()).collect();
    g[chosen] += 1.0;
    (lp[chosen], g)
}

/// Shannon entropy of `softmax(logits)` and its gradient with respect to the
/// logits, `-p_k (log p_k + H)`.
pub fn entropy_and_grad(logits: &[f64]) -> (f64, Vec<f64>) {
    let lp = log_softmax(logits);
    let h: f64 = -lp.iter().map(|l| l.exp() * l).sum::<f64>();
    let g = lp.iter().map(|l| -l.exp() * (l + h)).collect();
    (h, g)
}

/// Full multilinear contraction of a joint-indexed row with one soft vector
/// per agent, plus the partial derivatives with respect to every agent's
/// soft vector. At one-hot inputs this is a table lookup.
pub fn multilinear(row: &[f64], joint: &JointSpace, soft: &[&[f64]]) -> Result<(f64, Vec<Vec<f64>>)> {
    if soft.len() != joint.n_agents() {
        return Err(contract(format!("{} soft vectors for {} agents", soft.len(), joint.n_agents())));
    }
    for (i, s) in soft.iter().enumerate() {
        if s.len() != joint.size(i) {
            return Err(contract(format!("agent {i} soft vector has arity {}, expected {}", s.len(), joint.size(i))));
        }
    }
    if row.len() != joint.len() {
        return Err(contract("table row does not match the joint space"));
    }
    let n = joint.n_agents();
    let mut value = 0.0;
    let mut partials: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; joint.size(i)]).collect();
    let mut comps = vec![0usize; n];
    for (j, &entry) in row.iter().enumerate() {
        for (i, c) in comps.iter_mut().enumerate() {
            *c = joint.component(j, i);
        }
        let mut weight = entry;
        for i in 0..n {
            weight *= soft[i][comps[i]];
        }
        value += weight;
        for i in 0..n {
            let mut others = entry;
            for k in 0..n {
                if k != i {
                    others *= soft[k][comps[k]];
                }
            }
            partials[i][comps[i]] += others;
        }
    }
    Ok((value, partials))
}

/// Partial derivative of the contraction with respect to `agent`'s soft
/// vector, evaluated at the vertex `joint_index`.
pub fn vertex_partials(row: &[f64], joint: &JointSpace, joint_index: usize, agent: usize) -> Vec<f64> {
    (0..joint.size(agent)).map(|v| row[joint.with_component(joint_index, agent, v)]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProposalPolicy {
    pub logits: LogitTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionPolicy {
    pub logits: LogitTable,
}

/// Accept/reject logits for every (state, joint proposal). Row
/// `state * n_joint + joint` holds `[reject, commit]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitmentPolicy {
    pub logits: LogitTable,
    joint: JointSpace,
}

/// Commit log-odds evaluated at relaxed proposals.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedLogit {
    pub value: f64,
    /// `partials[agent][k]` = d value / d soft[agent][k]
    pub partials: Vec<Vec<f64>>,
}

impl CommitmentPolicy {
    pub fn zeros(n_states: usize, joint: JointSpace) -> Self {
        Self { logits: LogitTable::zeros(n_states * joint.len(), 2), joint }
    }

    pub fn joint(&self) -> &JointSpace {
        &self.joint
    }

    pub fn row_index(&self, state: usize, joint_proposal: usize) -> usize {
        state * self.joint.len() + joint_proposal
    }

    pub fn pair(&self, state: usize, joint_proposal: usize) -> &[f64] {
        self.logits.row(self.row_index(state, joint_proposal))
    }

    /// `logit(commit) - logit(reject)`
    pub fn log_odds(&self, state: usize, joint_proposal: usize) -> f64 {
        let p = self.pair(state, joint_proposal);
        p[1] - p[0]
    }

    pub fn commit_prob(&self, state: usize, joint_proposal: usize) -> f64 {
        sigmoid(self.log_odds(state, joint_proposal))
    }

    /// Log-odds table for one state, indexed by joint proposal.
    pub fn log_odds_row(&self, state: usize) -> Vec<f64> {
        (0..self.joint.len()).map(|j| self.log_odds(state, j)).collect()
    }

    pub fn commit_logit_relaxed(&self, state: usize, relaxed_proposals: &[&[f64]]) -> Result<RelaxedLogit> {
        let (value, partials) = multilinear(&self.log_odds_row(state), &self.joint, relaxed_proposals)?;
        Ok(RelaxedLogit { value, partials })
    }

    /// d log-odds / d soft proposal of `agent`, at the hard joint proposal.
    pub fn vertex_partials(&self, state: usize, joint_proposal: usize, agent: usize) -> Vec<f64> {
        (0..self.joint.size(agent))
            .map(|v| self.log_odds(state, self.joint.with_component(joint_proposal, agent, v)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentPolicy {
    pub proposal: ProposalPolicy,
    pub commitment: CommitmentPolicy,
    pub action: ActionPolicy,
}

impl AgentPolicy {
    pub fn uniform(spec: &GameSpec, agent: usize) -> Self {
        let n = spec.n_actions(agent);
        Self {
            proposal: ProposalPolicy { logits: LogitTable::zeros(spec.n_states(), n) },
            commitment: CommitmentPolicy::zeros(spec.n_states(), spec.joint().clone()),
            action: ActionPolicy { logits: LogitTable::zeros(spec.n_states(), n) },
        }
    }

    pub fn tables(&self) -> [(&'static str, &LogitTable); 3] {
        [
            ("proposal", &self.proposal.logits),
            ("commitment", &self.commitment.logits),
            ("action", &self.action.logits),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tables().iter().all(|(_, t)| t.is_finite())
    }
}

/// Every agent's policies. Implements [`JointPolicy`] for rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    pub agents: Vec<AgentPolicy>,
}

impl PolicySet {
    pub fn uniform(spec: &GameSpec) -> Self {
        Self { agents: (0..spec.n_agents()).map(|i| AgentPolicy::uniform(spec, i)).collect() }
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn check_shape(&self, spec: &GameSpec) -> Result<()> {
        if self.agents.len() != spec.n_agents() {
            return Err(contract(format!("{} policies for {} agents", self.agents.len(), spec.n_agents())));
        }
        for (i, a) in self.agents.iter().enumerate() {
            let reference = AgentPolicy::uniform(spec, i);
            for ((name, t), (_, r)) in a.tables().iter().zip(reference.tables()) {
                if !t.same_shape(r) {
                    return Err(contract(format!("agent {i} {name} table has the wrong shape")));
                }
            }
        }
        Ok(())
    }

    /// Logit vectors keyed by `agent<i>/<policy>/<state>[/<joint proposal>]`.
    pub fn to_named_logits(&self, spec: &GameSpec) -> BTreeMap<String, Vec<f64>> {
        let mut out = BTreeMap::new();
        for (i, a) in self.agents.iter().enumerate() {
            for s in 0..spec.n_states() {
                let sl = spec.state_label(s);
                out.insert(format!("agent{i}/proposal/{sl}"), a.proposal.logits.row(s).to_vec());
                out.insert(format!("agent{i}/action/{sl}"), a.action.logits.row(s).to_vec());
                for j in 0..spec.joint().len() {
                    out.insert(
                        format!("agent{i}/commitment/{sl}/{}", spec.joint_label(j)),
                        a.commitment.pair(s, j).to_vec(),
                    );
                }
            }
        }
        out
    }

    pub fn from_named_logits(spec: &GameSpec, named: &BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let mut set = Self::uniform(spec);
        let expected = set.to_named_logits(spec);
        if expected.len() != named.len() {
            return Err(contract(format!(
                "checkpoint has {} logit rows, the game needs {}",
                named.len(),
                expected.len()
            )));
        }
        for (i, a) in set.agents.iter_mut().enumerate() {
            for s in 0..spec.n_states() {
                let sl = spec.state_label(s);
                copy_row(named, &format!("agent{i}/proposal/{sl}"), a.proposal.logits.row_mut(s))?;
                copy_row(named, &format!("agent{i}/action/{sl}"), a.action.logits.row_mut(s))?;
                for j in 0..spec.joint().len() {
                    let r = a.commitment.row_index(s, j);
                    let key = format!("agent{i}/commitment/{sl}/{}", spec.joint_label(j));
                    copy_row(named, &key, a.commitment.logits.row_mut(r))?;
                }
            }
        }
        Ok(set)
    }
}

fn copy_row(named: &BTreeMap<String, Vec<f64>>, key: &str, dst: &mut [f64]) -> Result<()> {
    let src = named.get(key).ok_or_else(|| contract(format!("missing logit row {key}")))?;
    if src.len() != dst.len() {
        return Err(contract(format!("logit row {key} has {} entries, expected {}", src.len(), dst.len())));
    }
    dst.copy_from_slice(src);
    Ok(())
}

impl JointPolicy for PolicySet {
    fn proposal_logits(&self, agent: usize, state: usize) -> &[f64] {
        self.agents[agent].proposal.logits.row(state)
    }
    fn commitment_logits(&self, agent: usize, state: usize, joint_proposal: usize) -> &[f64] {
        self.agents[agent].commitment.pair(state, joint_proposal)
    }
    fn action_logits(&self, agent: usize, state: usize) -> &[f64] {
        self.agents[agent].action.logits.row(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::relaxed::{sample_categorical_relaxed, softmax};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_two_action_log_prob_gradient() {
        let (lp, g) = log_prob_row_grad(&[0.0, 0.0], 0);
        assert!((lp - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(g, vec![0.5, -0.5]);
    }

    #[test]
    fn full_table_gradient_is_zero_off_row() {
        let t = LogitTable::from_vec(3, 2, vec![0.1, 0.2, -1.0, 1.0, 0.5, 0.0]).unwrap();
        let (_, g) = t.log_prob_and_grad(1, 1);
        assert_eq!(g.row(0), &[0.0, 0.0]);
        assert_eq!(g.row(2), &[0.0, 0.0]);
        assert!(g.row(1)[1] > 0.0);
    }

    #[test]
    fn contraction_at_corners_is_lookup() {
        let joint = JointSpace::new(&[2, 3]);
        let row: Vec<f64> = (0..6).map(|k| k as f64 * 0.7 - 1.0).collect();
        for j in 0..joint.len() {
            let a = joint.component(j, 0);
            let b = joint.component(j, 1);
            let mut s0 = vec![0.0; 2];
            let mut s1 = vec![0.0; 3];
            s0[a] = 1.0;
            s1[b] = 1.0;
            let (v, partials) = multilinear(&row, &joint, &[&s0, &s1]).unwrap();
            assert_eq!(v, row[j]);
            assert_eq!(partials[0], vertex_partials(&row, &joint, j, 0));
            assert_eq!(partials[1], vertex_partials(&row, &joint, j, 1));
        }
    }

    #[test]
    fn contraction_at_uniform_is_mean() {
        let joint = JointSpace::new(&[2, 2, 2]);
        let row: Vec<f64> = (0..8).map(|k| (k * k) as f64).collect();
        let u = [0.5, 0.5];
        let (v, _) = multilinear(&row, &joint, &[&u, &u, &u]).unwrap();
        assert!((v - row.iter().sum::<f64>() / 8.0).abs() < 1e-12);
    }

    #[test]
    fn contraction_rejects_arity_mismatch() {
        let joint = JointSpace::new(&[2, 2]);
        let row = [0.0; 4];
        assert!(multilinear(&row, &joint, &[&[0.5, 0.5]]).is_err());
        assert!(multilinear(&row, &joint, &[&[0.5, 0.5], &[1.0, 0.0, 0.0]]).is_err());
    }

    #[test]
    fn relaxed_commit_logit_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let joint = JointSpace::new(&[2, 3]);
        let mut policy = CommitmentPolicy::zeros(1, joint.clone());
        for v in policy.logits.data_mut() {
            *v = rand::Rng::random_range(&mut rng, -2.0..2.0);
        }
        let s0 = sample_categorical_relaxed(&[0.2, -0.1], 1.3, &mut rng).unwrap().soft;
        let s1 = sample_categorical_relaxed(&[0.0, 0.5, -0.7], 1.3, &mut rng).unwrap().soft;
        let base = policy.commit_logit_relaxed(0, &[&s0, &s1]).unwrap();
        let eps = 1e-6;
        for k in 0..3 {
            let mut up = s1.clone();
            let mut dn = s1.clone();
            up[k] += eps;
            dn[k] -= eps;
            let fu = policy.commit_logit_relaxed(0, &[&s0, &up]).unwrap().value;
            let fd = policy.commit_logit_relaxed(0, &[&s0, &dn]).unwrap().value;
            let num = (fu - fd) / (2.0 * eps);
            assert!((num - base.partials[1][k]).abs() < 1e-8);
        }
    }

    #[test]
    fn entropy_gradient_matches_finite_differences() {
        let l = [0.3, -0.9, 1.4];
        let (_, g) = entropy_and_grad(&l);
        let eps = 1e-6;
        for k in 0..3 {
            let mut up = l;
            let mut dn = l;
            up[k] += eps;
            dn[k] -= eps;
            let fd = (entropy_and_grad(&up).0 - entropy_and_grad(&dn).0) / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn named_logits_round_trip() {
        let spec = crate::envs::prisoners_dilemma();
        let mut set = PolicySet::uniform(&spec);
        set.agents[1].commitment.logits.data_mut()[3] = 0.125;
        set.agents[0].action.logits.data_mut()[1] = -2.5;
        let named = set.to_named_logits(&spec);
        assert_eq!(PolicySet::from_named_logits(&spec, &named).unwrap(), set);
        let mut broken = named.clone();
        broken.remove("agent0/action/s0");
        assert!(PolicySet::from_named_logits(&spec, &broken).is_err());
    }

    proptest! {
        #[test]
        fn softmax_rows_normalize(row in proptest::collection::vec(-30.0f64..30.0, 1..8)) {
            let p = softmax(&row);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn shift_leaves_probabilities_and_gradients(row in proptest::collection::vec(-5.0f64..5.0, 2..6), c in -10.0f64..10.0, pick in 0usize..6) {
            let chosen = pick % row.len();
            let shifted: Vec<f64> = row.iter().map(|x| x + c).collect();
            let (lp0, g0) = log_prob_row_grad(&row, chosen);
            let (lp1, g1) = log_prob_row_grad(&shifted, chosen);
            prop_assert!((lp0 - lp1).abs() < 1e-9);
            for (a, b) in g0.iter().zip(&g1) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn log_prob_gradient_matches_central_differences(row in proptest::collection::vec(-4.0f64..4.0, 2..6), pick in 0usize..6) {
            let chosen = pick % row.len();
            let (_, g) = log_prob_row_grad(&row, chosen);
            let eps = 1e-5;
            for k in 0..row.len() {
                let mut up = row.clone();
                let mut dn = row.clone();
                up[k] += eps;
                dn[k] -= eps;
                let fd = (log_prob_row_grad(&up, chosen).0 - log_prob_row_grad(&dn, chosen).0) / (2.0 * eps);
                prop_assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-3), "{} vs {}", fd, g[k]);
            }
        }
    }
}
