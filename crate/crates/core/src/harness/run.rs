use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, EnvConfig, ExperimentConfig};
use crate::baselines;
use crate::dcl::{self, MetricsRow, TrainResult};
use crate::error::{contract, Error, Result};
use crate::mcg::GameSpec;
use crate::models::critic::CriticTable;
use crate::models::PolicySet;
use crate::par;

/// Fixed column order of a metrics file.
pub fn metrics_header(spec: &GameSpec) -> Vec<String> {
    let n = spec.n_agents();
    let mut h = vec!["iteration".to_string(), "seed".to_string()];
    h.extend((0..n).map(|i| format!("return_{i}")));
    h.extend((0..n).map(|i| format!("disc_return_{i}")));
    h.push("welfare".into());
    h.push("agreement_rate".into());
    for i in 0..n {
        h.extend((0..spec.n_proposals(i)).map(|k| format!("prop_{i}_{k}")));
    }
    h.push("entropy_coef".into());
    h.push("temperature".into());
    h
}

fn row_values(row: &MetricsRow) -> Vec<f64> {
    let mut v = Vec::new();
    v.extend(&row.returns);
    v.extend(&row.discounted_returns);
    v.push(row.welfare);
    v.push(row.agreement_rate);
    row.proposal_freq.iter().for_each(|f| v.extend(f));
    v.push(row.entropy_coef);
    v.push(row.temperature);
    v
}

pub fn write_metrics(path: &Path, spec: &GameSpec, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(metrics_header(spec))?;
    for row in rows {
        let mut rec = vec![row.iteration.to_string(), row.seed.to_string()];
        rec.extend(row_values(row).iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// A metrics file as numeric columns keyed by header name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl MetricsTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    /// Reads a metrics file; rows that do not parse are skipped with a warning.
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let parsed = rec.ok().filter(|rec| rec.len() == header.len()).and_then(|rec| {
                rec.iter().map(|f| f.trim().parse::<f64>().ok()).collect::<Option<Vec<_>>>()
            });
            match parsed {
                Some(v) => rows.push(v),
                None => warn!("{}: skipping malformed row {}", path.display(), line + 2),
            }
        }
        Ok(Self { header, rows })
    }
}

/// Mean and standard error across seeds of every numeric column, matched
/// by iteration. Iterations missing from some seed use the seeds that have it.
pub fn aggregate(tables: &[MetricsTable]) -> Result<MetricsTable> {
    let Some(first) = tables.first() else {
        return Ok(MetricsTable::default());
    };
    if tables.iter().any(|t| t.header != first.header) {
        return Err(contract("metrics files have different columns"));
    }
    let stats_cols: Vec<usize> = (0..first.header.len()).filter(|&k| first.header[k] != "iteration" && first.header[k] != "seed").collect();
    let mut header = vec!["iteration".to_string(), "n_seeds".to_string()];
    for &k in &stats_cols {
        header.push(format!("{}_mean", first.header[k]));
        header.push(format!("{}_stderr", first.header[k]));
    }
    let mut by_iter: BTreeMap<u64, Vec<&Vec<f64>>> = BTreeMap::new();
    for t in tables {
        for r in &t.rows {
            by_iter.entry(r[0] as u64).or_default().push(r);
        }
    }
    let rows = by_iter
        .into_iter()
        .map(|(it, rs)| {
            let mut out = vec![it as f64, rs.len() as f64];
            for &k in &stats_cols {
                let (m, se) = mean_stderr(rs.iter().map(|r| r[k]));
                out.push(m);
                out.push(se);
            }
            out
        })
        .collect();
    Ok(MetricsTable { header, rows })
}

/// Sample mean and standard error (n - 1 in the variance; zero for n = 1).
pub fn mean_stderr(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn write_table(path: &Path, table: &MetricsTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

/// Final policies and critics of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub env: EnvConfig,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub iterations: usize,
    pub logits: BTreeMap<String, Vec<f64>>,
    /// Per-agent critic values, `[state * n_joint + joint_action]`.
    pub critics: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn new(cfg: &ExperimentConfig, spec: &GameSpec, seed: u64, result: &TrainResult) -> Self {
        Self {
            env: cfg.env.clone(),
            algorithm: cfg.algorithm,
            seed,
            iterations: cfg.trainer.iterations,
            logits: result.policies.to_named_logits(spec),
            critics: result.critics.iter().map(|c| c.values().to_vec()).collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }

    pub fn policies(&self, spec: &GameSpec) -> Result<PolicySet> {
        PolicySet::from_named_logits(spec, &self.logits)
    }

    pub fn critic_tables(&self, spec: &GameSpec) -> Result<Vec<CriticTable>> {
        self.critics.iter().map(|v| CriticTable::from_values(spec, v.clone(), Default::default())).collect()
    }
}

pub fn train_seed(cfg: &ExperimentConfig, spec: &GameSpec, seed: u64) -> Result<TrainResult> {
    match cfg.algorithm {
        Algorithm::IndependentPg => baselines::train_independent(spec, &cfg.trainer, seed),
        _ => dcl::train(spec, &cfg.trainer, seed),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutput {
    pub seed: u64,
    pub metrics: PathBuf,
    pub checkpoint: PathBuf,
    pub last: Option<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub seeds: Vec<SeedOutput>,
    pub aggregate: PathBuf,
}

/// Trains every seed (shifted by `seed_offset`), writing
/// `metrics_seed<k>.csv`, `checkpoint_seed<k>.json`, `aggregate.csv` and
/// the resolved `config.toml` under the output directory.
pub fn run(cfg: &ExperimentConfig, seed_offset: u64) -> Result<RunOutput> {
    cfg.validate()?;
    let spec = cfg.env.build()?;
    let dir = cfg.resolved_output_dir();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), cfg.to_toml()?)?;
    let seeds: Vec<u64> = cfg.seeds.iter().map(|s| s + seed_offset).collect();
    let outputs = par::map_slice(&seeds, |&seed| -> Result<SeedOutput> {
        info!("{} {} seed {seed}: training", cfg.env.label(), cfg.algorithm.label());
        let result = train_seed(cfg, &spec, seed).map_err(|e| match e {
            Error::NonFinite { table, iteration } => Error::NonFinite { table: format!("seed {seed}: {table}"), iteration },
            e => e,
        })?;
        let metrics = dir.join(format!("metrics_seed{seed}.csv"));
        write_metrics(&metrics, &spec, &result.metrics)?;
        let checkpoint = dir.join(format!("checkpoint_seed{seed}.json"));
        Checkpoint::new(cfg, &spec, seed, &result).save(&checkpoint)?;
        Ok(SeedOutput { seed, metrics, checkpoint, last: result.metrics.last().cloned() })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let tables = outputs.iter().map(|o| MetricsTable::read(&o.metrics)).collect::<Result<Vec<_>>>()?;
    let aggregate = dir.join("aggregate.csv");
    write_table(&aggregate, &super::run::aggregate(&tables)?)?;
    Ok(RunOutput { dir, seeds: outputs, aggregate })
}
