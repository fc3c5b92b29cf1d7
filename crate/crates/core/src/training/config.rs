use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::AdamConfig;
use crate::graphmem::{Embedding, ModelConfig, NeighborWeights};
use crate::kv::{parse_key_values, KvError, KvReader};

/// How the query is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Constant query; every task shares one input signal.
    Single,
    /// One-hot task query.
    Multi,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single" => Ok(Self::Single),
            "multi" => Ok(Self::Multi),
            _ => Err(format!("expected `single` or `multi`, got `{s}`")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Single => "single",
            Self::Multi => "multi",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub hops: usize,
    pub memory_size: usize,
    pub controller_size: usize,
    pub dropout: f64,
    pub optimizer: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub tasks: Vec<String>,
    pub mode: Mode,
    pub neighbor_weights: NeighborWeights,
    pub embedding: Embedding,
    pub workers: usize,
    /// Subsample the majority class of real datasets.
    pub balance: bool,
    pub data_dir: Option<String>,
    pub fingerprint_radius: usize,
    pub fingerprint_bits: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            hops: 10,
            memory_size: 32,
            controller_size: 32,
            dropout: 0.1,
            optimizer: AdamConfig::default(),
            batch_size: 32,
            max_epochs: 200,
            patience: 10,
            seed: 0,
            tasks: Vec::new(),
            mode: Mode::Single,
            neighbor_weights: NeighborWeights::Uniform,
            embedding: Embedding::Learned,
            workers: 1,
            balance: false,
            data_dir: None,
            fingerprint_radius: crate::fingerprint::DEFAULT_RADIUS,
            fingerprint_bits: crate::fingerprint::DEFAULT_NBITS,
        }
    }
}

const KEYS: [&str; 21] = [
    "hops",
    "memory_size",
    "controller_size",
    "dropout",
    "step_size",
    "beta1",
    "beta2",
    "epsilon",
    "batch_size",
    "max_epochs",
    "patience",
    "seed",
    "tasks",
    "mode",
    "neighbor_weights",
    "embedding",
    "workers",
    "balance",
    "data_dir",
    "fingerprint_radius",
    "fingerprint_bits",
];

fn parse_enum<T: FromStr<Err = String>>(r: &KvReader<'_>, key: &str, default: T) -> Result<T, KvError> {
    match r.raw(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|reason| KvError::Invalid {
            key: key.into(),
            reason,
        }),
    }
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self, KvError> {
        Self::from_map(&parse_key_values(text)?)
    }

    /// Builds a config from `key=value` pairs; absent keys take defaults.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self, KvError> {
        let r = KvReader::new(map, &KEYS)?;
        let d = Self::default();
        let o = d.optimizer;
        let tasks = r
            .raw("tasks")
            .map(|t| t.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
            .unwrap_or_default();
        let config = Self {
            hops: r.or("hops", d.hops)?,
            memory_size: r.or("memory_size", d.memory_size)?,
            controller_size: r.or("controller_size", d.controller_size)?,
            dropout: r.or("dropout", d.dropout)?,
            optimizer: AdamConfig {
                step_size: r.or("step_size", o.step_size)?,
                beta1: r.or("beta1", o.beta1)?,
                beta2: r.or("beta2", o.beta2)?,
                epsilon: r.or("epsilon", o.epsilon)?,
            },
            batch_size: r.or("batch_size", d.batch_size)?,
            max_epochs: r.or("max_epochs", d.max_epochs)?,
            patience: r.or("patience", d.patience)?,
            seed: r.or("seed", d.seed)?,
            tasks,
            mode: parse_enum(&r, "mode", d.mode)?,
            neighbor_weights: parse_enum(&r, "neighbor_weights", d.neighbor_weights)?,
            embedding: parse_enum(&r, "embedding", d.embedding)?,
            workers: r.or("workers", d.workers)?,
            balance: r.or("balance", d.balance)?,
            data_dir: r.get("data_dir")?,
            fingerprint_radius: r.or("fingerprint_radius", d.fingerprint_radius)?,
            fingerprint_bits: r.or("fingerprint_bits", d.fingerprint_bits)?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), KvError> {
        let invalid = |key: &str, reason: &str| {
            Err(KvError::Invalid {
                key: key.into(),
                reason: reason.into(),
            })
        };
        if self.hops == 0 {
            return invalid("hops", "must be at least 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return invalid("dropout", "must lie in [0, 1)");
        }
        if self.patience == 0 {
            return invalid("patience", "must be at least 1");
        }
        if self.batch_size == 0 {
            return invalid("batch_size", "must be at least 1");
        }
        if self.memory_size == 0 || self.controller_size == 0 {
            return invalid("memory_size", "hidden sizes must be positive");
        }
        if self.workers == 0 {
            return invalid("workers", "must be at least 1");
        }
        if self.optimizer.step_size.is_nan() || self.optimizer.step_size <= 0.0 {
            return invalid("step_size", "must be positive");
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            hops: self.hops,
            neighbor_weights: self.neighbor_weights,
            embedding: self.embedding,
            dropout: self.dropout,
        }
    }

    /// Fully resolved `key=value` text; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "hops={}\nmemory_size={}\ncontroller_size={}\ndropout={}\nstep_size={}\nbeta1={}\nbeta2={}\nepsilon={}\n\
             batch_size={}\nmax_epochs={}\npatience={}\nseed={}\ntasks={}\nmode={}\nneighbor_weights={}\nembedding={}\n\
             workers={}\nbalance={}\nfingerprint_radius={}\nfingerprint_bits={}\n",
            self.hops,
            self.memory_size,
            self.controller_size,
            self.dropout,
            self.optimizer.step_size,
            self.optimizer.beta1,
            self.optimizer.beta2,
            self.optimizer.epsilon,
            self.batch_size,
            self.max_epochs,
            self.patience,
            self.seed,
            self.tasks.join(","),
            self.mode,
            self.neighbor_weights,
            self.embedding,
            self.workers,
            self.balance,
            self.fingerprint_radius,
            self.fingerprint_bits,
        );
        if let Some(dir) = &self.data_dir {
            out.push_str(&format!("data_dir={dir}\n"));
        }
        out
    }
}
