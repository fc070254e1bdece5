use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LossConfig, LossVariant};
use crate::model::{ModelConfig, Precision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Optimizer {
    /// Fixed-rate stochastic gradient descent.
    #[default]
    Sgd,
    Adam,
}

/// Training hyper-parameters plus the shape of the model to train. On disk
/// this is a flat TOML table; `alpha` and `margin` fall back to the
/// defaults of `loss_variant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlatConfig", into = "FlatConfig")]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: LossConfig,
    pub seed: u64,
    /// Steps between checkpoints; 0 disables intermediate checkpoints.
    pub checkpoint_every: usize,
    pub precision: Precision,
    pub optimizer: Optimizer,
    pub max_grad_norm: Option<f64>,
    /// Rebuild the negatives at the start of every epoch after the first.
    pub resample_negatives: bool,
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub dropout: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            learning_rate: 5e-5,
            epochs: 20,
            batch_size: 16,
            loss: LossConfig::default(),
            seed: 0,
            checkpoint_every: 0,
            precision: Precision::F64,
            optimizer: Optimizer::Sgd,
            max_grad_norm: None,
            resample_negatives: false,
            d_model: m.d_model,
            n_heads: m.n_heads,
            n_layers: m.n_layers,
            ffn_dim: m.ffn_dim,
            max_len: m.max_len,
            dropout: m.dropout,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::validation("learning_rate", "must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::validation("epochs", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size", "must be at least 1"));
        }
        if let Some(n) = self.max_grad_norm {
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::validation("max_grad_norm", "must be positive"));
            }
        }
        self.loss.validate()?;
        self.model_config(crate::text::UNK_ID + 1).validate()
    }

    /// The model to build for a vocabulary of `vocab_size`, initialized from `seed`.
    pub fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            n_heads: self.n_heads,
            n_layers: self.n_layers,
            ffn_dim: self.ffn_dim,
            max_len: self.max_len,
            vocab_size,
            init_seed: self.seed,
            dropout: self.dropout,
        }
    }

    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                path: path.to_path_buf(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FlatConfig {
    learning_rate: f64,
    epochs: usize,
    batch_size: usize,
    loss_variant: LossVariant,
    alpha: Option<f64>,
    margin: Option<f64>,
    seed: u64,
    checkpoint_every: usize,
    precision: Precision,
    optimizer: Optimizer,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_grad_norm: Option<f64>,
    resample_negatives: bool,
    d_model: usize,
    n_heads: usize,
    n_layers: usize,
    ffn_dim: usize,
    max_len: usize,
    dropout: f64,
}

impl Default for FlatConfig {
    fn default() -> Self {
        let mut flat: FlatConfig = TrainConfig::default().into();
        flat.alpha = None;
        flat.margin = None;
        flat
    }
}

impl From<TrainConfig> for FlatConfig {
    fn from(c: TrainConfig) -> Self {
        Self {
            learning_rate: c.learning_rate,
            epochs: c.epochs,
            batch_size: c.batch_size,
            loss_variant: c.loss.variant,
            alpha: Some(c.loss.alpha),
            margin: Some(c.loss.margin),
            seed: c.seed,
            checkpoint_every: c.checkpoint_every,
            precision: c.precision,
            optimizer: c.optimizer,
            max_grad_norm: c.max_grad_norm,
            resample_negatives: c.resample_negatives,
            d_model: c.d_model,
            n_heads: c.n_heads,
            n_layers: c.n_layers,
            ffn_dim: c.ffn_dim,
            max_len: c.max_len,
            dropout: c.dropout,
        }
    }
}

impl TryFrom<FlatConfig> for TrainConfig {
    type Error = Error;

    fn try_from(f: FlatConfig) -> Result<Self> {
        let (alpha, margin) = f.loss_variant.defaults();
        let cfg = TrainConfig {
            learning_rate: f.learning_rate,
            epochs: f.epochs,
            batch_size: f.batch_size,
            loss: LossConfig {
                variant: f.loss_variant,
                alpha: f.alpha.unwrap_or(alpha),
                margin: f.margin.unwrap_or(margin),
            },
            seed: f.seed,
            checkpoint_every: f.checkpoint_every,
            precision: f.precision,
            optimizer: f.optimizer,
            max_grad_norm: f.max_grad_norm,
            resample_negatives: f.resample_negatives,
            d_model: f.d_model,
            n_heads: f.n_heads,
            n_layers: f.n_layers,
            ffn_dim: f.ffn_dim,
            max_len: f.max_len,
            dropout: f.dropout,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
