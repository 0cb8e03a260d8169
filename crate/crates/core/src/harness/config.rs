//! Run configuration: a TOML file with `[model]`, `[train]` and `[ssoc]`
//! tables whose keys mirror the config structs. `TQA_SEED` overrides both
//! seeds when set.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::ModelConfig;
use crate::ssoc::SsocConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    /// Multiplicative learning-rate decay applied after each epoch.
    pub lr_decay: f64,
    pub epochs: usize,
    /// Questions per optimizer step; gradients are averaged.
    pub batch_size: usize,
    pub seed: u64,
    /// Parameters to load before supervised training (comprehension
    /// precedes solving).
    pub ssoc_checkpoint: Option<PathBuf>,
    /// Stop after this many epochs without a new best validation text
    /// accuracy. Disabled when absent.
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            lr_decay: 0.9,
            epochs: 30,
            batch_size: 1,
            seed: 0,
            ssoc_checkpoint: None,
            early_stop_patience: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub ssoc: SsocConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), source: e })?;
        let mut config: RunConfig = toml::from_str(&text)
            .map_err(|e| ConfigError::Parse { path: path.display().to_string(), message: e.to_string() })?;
        config.apply_env();
        Ok(config)
    }

    /// `TQA_SEED` overrides the configured seeds.
    pub fn apply_env(&mut self) {
        if let Ok(seed) = std::env::var("TQA_SEED") {
            if let Ok(seed) = seed.parse::<u64>() {
                self.train.seed = seed;
                self.ssoc.seed = seed;
            }
        }
    }
}
