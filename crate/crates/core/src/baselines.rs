//! Independent policy gradient: every agent plays its action policy with no
//! proposals or commitments, trained with the same critic and action
//! estimator as the commitment learner.

use crate::dcl::{Terms, TrainResult, Trainer, TrainerConfig};
use crate::error::Result;
use crate::mcg::{GameSpec, Protocol};
use crate::models::PolicySet;

pub fn independent_trainer(spec: &GameSpec, cfg: &TrainerConfig, seed: u64) -> Result<Trainer> {
    Trainer::build(spec, cfg, seed, PolicySet::uniform(spec), Protocol::Independent, Terms::ACTION_ONLY)
}

pub fn train_independent(spec: &GameSpec, cfg: &TrainerConfig, seed: u64) -> Result<TrainResult> {
    independent_trainer(spec, cfg, seed)?.run()
}
