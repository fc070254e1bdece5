//! The trainable sequence-to-sequence substrate.
//!
//! Training code only talks to models through [`Seq2Seq`], so any model
//! that can score teacher-forced targets, back-propagate a weighted sum of
//! their cross-entropies and decode greedily can be trained with the
//! contrastive objectives.

mod checkpoint;
mod transformer;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use transformer::Transformer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_heads: usize,
    /// Layers in each of the encoder and decoder stacks.
    pub n_layers: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub init_seed: u64,
    /// Activation dropout during training.
    #[serde(default)]
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_heads: 2,
            n_layers: 2,
            ffn_dim: 128,
            max_len: 64,
            vocab_size: 0,
            init_seed: 0,
            dropout: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 {
            return Err(Error::validation("d_model", "must be positive"));
        }
        if self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return Err(Error::validation(
                "n_heads",
                format!("must divide d_model ({})", self.d_model),
            ));
        }
        if self.n_layers == 0 {
            return Err(Error::validation("n_layers", "must be positive"));
        }
        if self.ffn_dim == 0 {
            return Err(Error::validation("ffn_dim", "must be positive"));
        }
        if self.max_len < 2 {
            return Err(Error::validation("max_len", "must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::validation("dropout", "must lie in [0, 1)"));
        }
        if self.vocab_size <= crate::text::UNK_ID {
            return Err(Error::validation(
                "vocab_size",
                "must cover the reserved tokens",
            ));
        }
        Ok(())
    }
}

/// Teacher-forced scores: row `t` is the log-probability distribution for
/// `target_tokens[t]` given the source and the gold prefix before it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredOutput {
    pub vocab_size: usize,
    pub logprobs: Vec<f64>,
    pub target_tokens: Vec<usize>,
}

impl ScoredOutput {
    pub fn target_len(&self) -> usize {
        self.target_tokens.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.logprobs[t * self.vocab_size..(t + 1) * self.vocab_size]
    }
}

/// The contract the trainer and evaluator depend on.
pub trait Seq2Seq {
    fn precision(&self) -> Precision;

    fn max_len(&self) -> usize;

    fn vocab_size(&self) -> usize;

    /// Scores a framed target (`BOS … EOS`) given a framed source (`… EOS`).
    fn forward(&self, source: &[usize], target: &[usize]) -> Result<ScoredOutput>;

    /// Greedy decoding from BOS; returns the generated tokens without framing.
    fn generate(&self, source: &[usize], max_len: usize) -> Result<Vec<usize>>;

    /// Computes the mean token cross-entropy of each framed target given the
    /// shared source, asks `weights` for `d(objective)/d(ce_i)`, and returns
    /// the cross-entropies together with the flattened parameter gradient
    /// of the weighted sum.
    fn cross_entropies_with_grad(
        &self,
        source: &[usize],
        targets: &[&[usize]],
        weights: &dyn Fn(&[f64]) -> Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>)>;

    /// Seeds the stochastic regularization applied by later
    /// [`Seq2Seq::cross_entropies_with_grad`] calls; `None` disables it.
    /// Scoring and decoding are never affected.
    fn set_noise_seed(&mut self, _seed: Option<u64>) {}

    fn num_parameters(&self) -> usize;

    fn parameters(&self) -> Vec<f64>;

    fn set_parameters(&mut self, values: &[f64]);

    /// Adds `delta` to the flattened parameters.
    fn update_parameters(&mut self, delta: &[f64]);
}
