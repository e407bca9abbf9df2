use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dcl::{EntropyTargets, IcStep, Mode, Schedule, TrainerConfig};
use crate::envs;
use crate::error::{Error, Result};
use crate::mcg::GameSpec;
use crate::models::optim::OptimizerKind;

/// Overrides the configured output directory when set.
pub const OUTPUT_DIR_ENV: &str = "COMMITLAB_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvConfig {
    Pd,
    Grid { grid_size: usize, horizon: usize, gamma: f64 },
    Rpc { horizon: usize, mega_step_k: usize, gamma: f64 },
    PublicGoods { n_agents: usize, benefit_factor: f64 },
}

impl EnvConfig {
    pub fn grid() -> Self {
        EnvConfig::Grid { grid_size: 4, horizon: 16, gamma: 0.99 }
    }

    pub fn rpc() -> Self {
        EnvConfig::Rpc { horizon: 16, mega_step_k: 2, gamma: 0.99 }
    }

    pub fn public_goods(n_agents: usize) -> Self {
        EnvConfig::PublicGoods { n_agents, benefit_factor: 1.5 }
    }

    pub fn label(&self) -> String {
        match self {
            EnvConfig::Pd => "pd".into(),
            EnvConfig::Grid { grid_size, .. } => format!("grid{grid_size}"),
            EnvConfig::Rpc { mega_step_k, .. } => format!("rpc-k{mega_step_k}"),
            EnvConfig::PublicGoods { n_agents, .. } => format!("public-goods{n_agents}"),
        }
    }

    pub fn build(&self) -> Result<GameSpec> {
        match *self {
            EnvConfig::Pd => Ok(envs::prisoners_dilemma()),
            EnvConfig::Grid { grid_size, horizon, gamma } => envs::grid_game(grid_size, horizon, gamma),
            EnvConfig::Rpc { horizon, mega_step_k, gamma } => envs::repeated_conflict(horizon, mega_step_k, gamma),
            EnvConfig::PublicGoods { n_agents, benefit_factor } => envs::public_goods(n_agents, benefit_factor),
        }
    }

    /// Per-environment defaults for the commitment learner.
    pub fn default_trainer(&self) -> TrainerConfig {
        let one_shot = TrainerConfig {
            iterations: 10_000,
            batch_size: 128,
            policy_lr: 2e-3,
            value_lr: 8e-3,
            updates_per_iteration: 1,
            gamma: 0.99,
            mode: Mode::Centralized,
            ic_enabled: true,
            ic_lambda: 1.0,
            ic_step: IcStep::Objective,
            entropy: Schedule { start: 1.0, decay: 0.0005, min: 0.0 },
            entropy_targets: EntropyTargets::default(),
            temperature: Schedule { start: 10.0, decay: 0.05, min: 1.0 },
            optimizer: OptimizerKind::Adam,
            discounted_state_weighting: false,
            grad_clip: None,
            metric_every: 1,
            shared_noise: false,
            opponent_init_scale: 0.0,
        };
        match self {
            EnvConfig::Pd => one_shot,
            EnvConfig::PublicGoods { .. } => TrainerConfig { batch_size: 256, ..one_shot },
            EnvConfig::Grid { gamma, .. } | EnvConfig::Rpc { gamma, .. } => TrainerConfig {
                batch_size: 512,
                updates_per_iteration: 30,
                gamma: *gamma,
                entropy: Schedule { start: 2.0, decay: 0.0005, min: 0.001 },
                temperature: Schedule::constant(1.0),
                metric_every: 10,
                ..one_shot
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Dcl,
    DclIc,
    DclDecentralized,
    DclDecentralizedIc,
    IndependentPg,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Dcl => "dcl",
            Algorithm::DclIc => "dcl-ic",
            Algorithm::DclDecentralized => "dcl-decentralized",
            Algorithm::DclDecentralizedIc => "dcl-decentralized-ic",
            Algorithm::IndependentPg => "independent-pg",
        }
    }

    /// Sets the mode and IC switch this algorithm implies.
    pub fn apply(self, cfg: &TrainerConfig) -> TrainerConfig {
        let (mode, ic) = match self {
            Algorithm::Dcl => (Mode::Centralized, false),
            Algorithm::DclIc => (Mode::Centralized, true),
            Algorithm::DclDecentralized => (Mode::Decentralized, false),
            Algorithm::DclDecentralizedIc => (Mode::Decentralized, true),
            Algorithm::IndependentPg => (Mode::Centralized, false),
        };
        TrainerConfig { mode, ic_enabled: ic, ..cfg.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    algorithm: Algorithm,
    seeds: Option<Vec<u64>>,
    output_dir: Option<PathBuf>,
    env: EnvConfig,
    #[serde(default)]
    trainer: toml::Table,
}

impl ExperimentConfig {
    pub fn defaults(env: EnvConfig, algorithm: Algorithm) -> Self {
        let mut trainer = algorithm.apply(&env.default_trainer());
        if algorithm == Algorithm::IndependentPg {
            trainer.entropy = Schedule::constant(0.0);
        }
        Self {
            output_dir: PathBuf::from("runs").join(format!("{}-{}", env.label(), algorithm.label())),
            algorithm,
            seeds: (0..10).collect(),
            env,
            trainer,
        }
    }

    /// Parses TOML. Keys missing from `[trainer]` take the environment's
    /// defaults; `mode` and `ic_enabled` always follow `algorithm`.
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let base = Self::defaults(raw.env, raw.algorithm);
        let mut table = toml::Table::try_from(&base.trainer).map_err(|e| Error::Config(e.to_string()))?;
        for (k, v) in raw.trainer {
            table.insert(k, v);
        }
        let trainer: TrainerConfig =
            toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let cfg = Self {
            trainer: raw.algorithm.apply(&trainer),
            seeds: raw.seeds.unwrap_or(base.seeds),
            output_dir: raw.output_dir.unwrap_or(base.output_dir),
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.trainer.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed required".into()));
        }
        let spec = self.env.build()?;
        let k = spec.base_steps_per_decision() as i32;
        if (self.trainer.gamma.powi(k) - spec.gamma()).abs() > 1e-12 {
            return Err(Error::Config("trainer gamma must match the environment's".into()));
        }
        Ok(())
    }

    /// The configured directory unless the override variable is set.
    pub fn resolved_output_dir(&self) -> PathBuf {
        std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| self.output_dir.clone())
    }
}
