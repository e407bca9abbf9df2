//! The experiment environments: prisoner's dilemma, the two-agent grid game,
//! the repeated purely conflicting game with mega-step commitments, and the
//! N-player public goods game.

use crate::error::{Error, Result};
use crate::mcg::{GameBuilder, GameSpec, JointSpace};

pub const COOPERATE: usize = 0;
pub const DEFECT: usize = 1;

/// A two-player matrix game, optionally repeated with a clock state and with
/// commitments that bind blocks of `mega_step_k` consecutive plays.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGameSpec {
    pub name: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Row-major `(row player, column player)` payoffs.
    pub payoff: Vec<[f64; 2]>,
    pub repeats: usize,
    pub mega_step_k: usize,
    pub gamma: f64,
}

impl MatrixGameSpec {
    pub fn build(&self) -> Result<GameSpec> {
        let (nr, nc) = (self.row_labels.len(), self.col_labels.len());
        if self.payoff.len() != nr * nc {
            return Err(Error::Config(format!(
                "payoff has {} cells for a {nr}x{nc} game",
                self.payoff.len()
            )));
        }
        let k = self.mega_step_k;
        if self.repeats == 0 || k == 0 || !self.repeats.is_multiple_of(k) {
            return Err(Error::Config(format!(
                "mega-step length {k} must divide the horizon {}",
                self.repeats
            )));
        }
        let decisions = self.repeats / k;
        // a block action is a K-tuple of base actions, first play most significant
        let block = |n: usize| JointSpace::new(&vec![n; k]);
        let (rows, cols) = (block(nr), block(nc));
        let label = |labels: &[String], space: &JointSpace, idx: usize| -> String {
            (0..k).map(|t| labels[space.component(idx, t)].as_str()).collect::<Vec<_>>().join("")
        };
        let row_labels: Vec<String> = (0..rows.len()).map(|a| label(&self.row_labels, &rows, a)).collect();
        let col_labels: Vec<String> = (0..cols.len()).map(|a| label(&self.col_labels, &cols, a)).collect();

        let joint = JointSpace::new(&[rows.len(), cols.len()]);
        let mut rewards = Vec::with_capacity(decisions * joint.len() * 2);
        let mut raw = Vec::with_capacity(rewards.capacity());
        let mut transitions = Vec::with_capacity(decisions * joint.len());
        for s in 0..decisions {
            for j in 0..joint.len() {
                let (a, b) = (joint.component(j, 0), joint.component(j, 1));
                let mut disc = [0.0; 2];
                let mut und = [0.0; 2];
                for t in 0..k {
                    let cell = self.payoff[rows.component(a, t) * nc + cols.component(b, t)];
                    let w = self.gamma.powi(t as i32);
                    for p in 0..2 {
                        disc[p] += w * cell[p];
                        und[p] += cell[p];
                    }
                }
                rewards.extend_from_slice(&disc);
                raw.extend_from_slice(&und);
                transitions.push(vec![((s + 1).min(decisions - 1), 1.0)]);
            }
        }
        let state_labels = if decisions == 1 {
            vec!["s0".to_string()]
        } else {
            (0..decisions).map(|t| format!("t{t}")).collect()
        };
        GameBuilder {
            name: self.name.clone(),
            action_counts: vec![rows.len(), cols.len()],
            n_states: decisions,
            initial_state: 0,
            rewards,
            undiscounted_rewards: (k > 1).then_some(raw),
            transitions,
            gamma: self.gamma.powi(k as i32),
            horizon: decisions,
            base_steps_per_decision: k,
            state_labels,
            action_labels: vec![row_labels, col_labels],
        }
        .build()
    }
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn prisoners_dilemma_matrix() -> MatrixGameSpec {
    MatrixGameSpec {
        name: "pd".into(),
        row_labels: labels(&["C", "D"]),
        col_labels: labels(&["C", "D"]),
        payoff: vec![[-1.0, -1.0], [-3.0, 0.0], [0.0, -3.0], [-2.0, -2.0]],
        repeats: 1,
        mega_step_k: 1,
        gamma: 0.99,
    }
}

/// One-shot prisoner's dilemma, actions `C = 0`, `D = 1`.
pub fn prisoners_dilemma() -> GameSpec {
    prisoners_dilemma_matrix().build().expect("static game is valid")
}

pub fn repeated_conflict_matrix(horizon: usize, mega_step_k: usize, gamma: f64) -> MatrixGameSpec {
    MatrixGameSpec {
        name: "rpc".into(),
        row_labels: labels(&["A1", "A2"]),
        col_labels: labels(&["A1", "A2"]),
        payoff: vec![[0.0, 0.0], [-1.0, 2.0], [2.0, -1.0], [0.0, 0.0]],
        repeats: horizon,
        mega_step_k,
        gamma,
    }
}

/// Purely conflicting game repeated `horizon` times. With `mega_step_k = K`
/// each decision proposes (and, without agreement, plays) K base actions;
/// the state is the decision index.
pub fn repeated_conflict(horizon: usize, mega_step_k: usize, gamma: f64) -> Result<GameSpec> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be positive".into()));
    }
    repeated_conflict_matrix(horizon, mega_step_k, gamma).build()
}

pub const FORWARD: usize = 0;
pub const BACKWARD: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGameSpec {
    pub grid_size: usize,
    pub horizon: usize,
    pub gamma: f64,
}

impl GridGameSpec {
    pub fn state_index(&self, p1: usize, p2: usize) -> usize {
        p1 * self.grid_size + p2
    }

    pub fn positions(&self, state: usize) -> (usize, usize) {
        (state / self.grid_size, state % self.grid_size)
    }

    pub fn step_position(&self, p: usize, action: usize) -> usize {
        match action {
            FORWARD => (p + 1).min(self.grid_size - 1),
            _ => p.saturating_sub(1),
        }
    }

    /// Rewards of the positions `(p1, p2)`.
    pub fn rewards_at(&self, p1: usize, p2: usize) -> [f64; 2] {
        let far = (self.grid_size - 1 - p2) as f64;
        [p1 as f64 - 2.0 * far, far - 2.0 * p1 as f64]
    }

    pub fn build(&self) -> Result<GameSpec> {
        let n = self.grid_size;
        if n < 2 || self.horizon == 0 {
            return Err(Error::Config("grid game needs N >= 2 and T >= 1".into()));
        }
        let joint = JointSpace::new(&[2, 2]);
        let mut rewards = Vec::new();
        let mut transitions = Vec::new();
        let mut state_labels = Vec::new();
        for p1 in 0..n {
            for p2 in 0..n {
                state_labels.push(format!("p{p1}-{p2}"));
                for j in 0..joint.len() {
                    let q1 = self.step_position(p1, joint.component(j, 0));
                    let q2 = self.step_position(p2, joint.component(j, 1));
                    rewards.extend_from_slice(&self.rewards_at(q1, q2));
                    transitions.push(vec![(self.state_index(q1, q2), 1.0)]);
                }
            }
        }
        GameBuilder {
            name: "grid".into(),
            action_counts: vec![2, 2],
            n_states: n * n,
            initial_state: self.state_index(0, n - 1),
            rewards,
            undiscounted_rewards: None,
            transitions,
            gamma: self.gamma,
            horizon: self.horizon,
            base_steps_per_decision: 1,
            state_labels,
            action_labels: vec![labels(&["F", "B"]), labels(&["F", "B"])],
        }
        .build()
    }
}

/// Two agents on a line of `grid_size` cells, starting at opposite ends.
/// Rewards are evaluated at the positions reached after the move.
pub fn grid_game(grid_size: usize, horizon: usize, gamma: f64) -> Result<GameSpec> {
    GridGameSpec { grid_size, horizon, gamma }.build()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublicGoodsSpec {
    pub n_agents: usize,
    pub benefit_factor: f64,
}

pub const FREE_RIDE: usize = 0;
pub const CONTRIBUTE: usize = 1;

impl PublicGoodsSpec {
    /// `(beta / N) * sum_j C_j - C_i` for every agent.
    pub fn rewards(&self, contributions: &[usize]) -> Vec<f64> {
        let pool: f64 = contributions.iter().map(|&c| c as f64).sum();
        let share = self.benefit_factor * pool / self.n_agents as f64;
        contributions.iter().map(|&c| share - c as f64).collect()
    }

    pub fn build(&self) -> Result<GameSpec> {
        let n = self.n_agents;
        if n < 2 || !(self.benefit_factor > 1.0 && self.benefit_factor < n as f64) {
            return Err(Error::Config(format!(
                "benefit factor {} must lie strictly inside (1, {n})",
                self.benefit_factor
            )));
        }
        let joint = JointSpace::new(&vec![2; n]);
        let mut rewards = Vec::with_capacity(joint.len() * n);
        for j in 0..joint.len() {
            rewards.extend(self.rewards(&joint.decode(j)));
        }
        GameBuilder {
            name: "public-goods".into(),
            action_counts: vec![2; n],
            n_states: 1,
            initial_state: 0,
            rewards,
            undiscounted_rewards: None,
            transitions: vec![vec![(0, 1.0)]; joint.len()],
            gamma: 0.99,
            horizon: 1,
            base_steps_per_decision: 1,
            state_labels: vec!["s0".into()],
            action_labels: vec![labels(&["0", "1"]); n],
        }
        .build()
    }
}

/// One-shot public goods game with binary contributions.
pub fn public_goods(n_agents: usize, benefit_factor: f64) -> Result<GameSpec> {
    PublicGoodsSpec { n_agents, benefit_factor }.build()
}
