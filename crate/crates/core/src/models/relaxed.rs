//! Gumbel-softmax sampling with straight-through gradients.
//!
//! The hard sample `argmax(logits + g)` is an exact draw from
//! `softmax(logits)`. The soft sample `softmax((logits + g) / tau)` is only
//! used for its derivative, which stands in for the derivative of the hard
//! one-hot in the straight-through estimator.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mcg::Noise;

pub fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // open interval (0, 1): `random` yields [0, 1)
    let u: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    -(-u.ln()).ln()
}

pub fn gumbel_noise<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| gumbel(rng)).collect()
}

/// Index of the largest perturbed logit; ties go to the lowest index.
pub fn perturbed_argmax(logits: &[f64], noise: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (k, (l, g)) in logits.iter().zip(noise).enumerate() {
        let v = l + g;
        if v > best_val {
            best_val = v;
            best = k;
        }
    }
    best
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= z);
    out
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// `softmax((logits + noise) / temperature)`
pub fn tempered_softmax(logits: &[f64], noise: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().zip(noise).map(|(l, g)| (l + g) / temperature).collect();
    softmax(&scaled)
}

/// Pulls a cotangent on a tempered softmax output back to its logits:
/// `J^T v` with `J = (diag(y) - y y^T) / tau`.
pub fn tempered_softmax_vjp(soft: &[f64], temperature: f64, cotangent: &[f64]) -> Vec<f64> {
    let dot: f64 = soft.iter().zip(cotangent).map(|(y, v)| y * v).sum();
    soft.iter().zip(cotangent).map(|(y, v)| y * (v - dot) / temperature).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSample {
    pub hard: usize,
    pub soft: Vec<f64>,
    pub noise: Vec<f64>,
    pub temperature: f64,
}

impl RelaxedSample {
    /// Rebuilds a sample from recorded noise; replaying the same noise
    /// through the same logits gives the same sample.
    pub fn from_noise(logits: &[f64], noise: Vec<f64>, temperature: f64) -> Self {
        let hard = perturbed_argmax(logits, &noise);
        let soft = tempered_softmax(logits, &noise, temperature);
        Self { hard, soft, noise, temperature }
    }

    pub fn one_hot(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.soft.len()];
        v[self.hard] = 1.0;
        v
    }

    /// Straight-through gradient with respect to the logits for a cotangent
    /// on the (hard) one-hot output.
    pub fn backward(&self, cotangent: &[f64]) -> Vec<f64> {
        tempered_softmax_vjp(&self.soft, self.temperature, cotangent)
    }
}

pub fn sample_categorical_relaxed<R: Rng + ?Sized>(
    logits: &[f64],
    temperature: f64,
    rng: &mut R,
) -> Result<RelaxedSample> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::Temperature(temperature));
    }
    if logits.is_empty() || logits.iter().any(|l| !l.is_finite()) {
        return Err(crate::error::contract("logits must be finite and non-empty"));
    }
    let noise = gumbel_noise(logits.len(), rng);
    Ok(RelaxedSample::from_noise(logits, noise, temperature))
}

/// Soft "commit" coordinate of a binary `[reject, commit]` relaxed sample.
pub fn soft_commit(log_odds: f64, noise: &[f64; 2], temperature: f64) -> f64 {
    sigmoid((log_odds + noise[1] - noise[0]) / temperature)
}

/// Gumbel noise drawn from its posterior given that `argmax(logits + g)`
/// came out as `chosen`: the maximum is a Gumbel located at the
/// log-sum-exp, the others are Gumbels truncated below it.
pub fn conditional_gumbel<R: Rng + ?Sized>(logits: &[f64], chosen: usize, rng: &mut R) -> Noise {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let top = lse + gumbel(rng);
    logits
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            if k == chosen {
                top - l
            } else {
                let free = l + gumbel(rng);
                // -log(exp(-top) + exp(-free)), computed stably
                let lo = top.min(free);
                let z = lo - (1.0 + (-(top.max(free) - lo)).exp()).ln();
                z - l
            }
        })
        .collect()
}

/// `[reject, commit]` noise whose difference is a logistic draw conditioned
/// on the observed decision under the given log-odds.
pub fn conditional_commit_noise<R: Rng + ?Sized>(log_odds: f64, committed: bool, rng: &mut R) -> [f64; 2] {
    // commit iff log_odds + d > 0, d ~ Logistic(0, 1)
    let edge = sigmoid(-log_odds);
    let u: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let q = if committed { edge + u * (1.0 - edge) } else { u * edge };
    let q = q.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    [0.0, (q / (1.0 - q)).ln()]
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
