//! Markov commitment games and differentiable commitment learning.
//!
//! Agents propose joint actions, accept or reject the joint proposal, and
//! fall back to independently drawn actions unless everyone accepts. The
//! crate provides the protocol, a few tabular social dilemmas, a trainer for
//! all three policies, an independent policy-gradient baseline, exact
//! oracles for small games, and an experiment harness.

pub mod baselines;
pub mod dcl;
pub mod envs;
pub mod error;
pub mod harness;
pub mod mcg;
pub mod models;
pub mod oracle;
pub mod par;

pub use error::{Error, Result};
