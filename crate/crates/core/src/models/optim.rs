//! First-order parameter updates for the tabular parameters.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// Plain `x += lr * g`.
    Sgd,
    /// Adam with the usual moment decay rates (0.9, 0.999) and eps 1e-8.
    #[default]
    Adam,
}

/// Per-table optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(kind: OptimizerKind, len: usize) -> Self {
        let (m, v) = match kind {
            OptimizerKind::Sgd => (Vec::new(), Vec::new()),
            OptimizerKind::Adam => (vec![0.0; len], vec![0.0; len]),
        };
        Self { kind, m, v, t: 0 }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Moves `params` along `grad` (ascent) with step size `lr`.
    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        debug_assert_eq!(params.len(), grad.len());
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p += lr * g;
                }
            }
            OptimizerKind::Adam => {
                self.t = self.t.saturating_add(1);
                let c1 = 1.0 - BETA1.powi(self.t);
                let c2 = 1.0 - BETA2.powi(self.t);
                for k in 0..params.len() {
                    let g = grad[k];
                    self.m[k] = BETA1 * self.m[k] + (1.0 - BETA1) * g;
                    self.v[k] = BETA2 * self.v[k] + (1.0 - BETA2) * g * g;
                    let mh = self.m[k] / c1;
                    let vh = self.v[k] / c2;
                    params[k] += lr * mh / (vh.sqrt() + EPS);
                }
            }
        }
    }

    pub fn descend(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        self.ascend(params, &neg, lr);
    }
}
