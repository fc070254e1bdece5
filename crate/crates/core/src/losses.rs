//! Contrastive training objectives over the positive and negative
//! teacher-forced cross-entropies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corruption::Triplet;
use crate::error::{Error, Result};
use crate::model::{ScoredOutput, Seq2Seq};
use crate::text::{Vocabulary, PAD_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LossVariant {
    #[default]
    Ordinary,
    /// Direct contrast: `l_pos - alpha * l_neg`.
    Dc,
    /// Hinge on the negative alone: `l_pos + alpha * max(M - l_neg, 0)`.
    Cn,
    /// Hinge on the gap: `l_pos + alpha * max(l_pos + M - l_neg, 0)`.
    Cc,
}

impl LossVariant {
    pub const ALL: [LossVariant; 4] = [LossVariant::Ordinary, LossVariant::Dc, LossVariant::Cn, LossVariant::Cc];

    pub fn as_str(self) -> &'static str {
        match self {
            LossVariant::Ordinary => "ORDINARY",
            LossVariant::Dc => "DC",
            LossVariant::Cn => "CN",
            LossVariant::Cc => "CC",
        }
    }

    /// `(alpha, margin)` used when a config leaves them out.
    pub fn defaults(self) -> (f64, f64) {
        match self {
            LossVariant::Ordinary => (0.0, 0.0),
            LossVariant::Dc => (0.05, 0.0),
            LossVariant::Cn => (0.5, 2.0),
            LossVariant::Cc => (0.5, 5.0),
        }
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        LossVariant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown loss variant `{s}` (expected ORDINARY, DC, CN or CC)"))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLossConfig {
    loss_variant: LossVariant,
    alpha: Option<f64>,
    margin: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLossConfig")]
pub struct LossConfig {
    #[serde(rename = "loss_variant")]
    pub variant: LossVariant,
    pub alpha: f64,
    pub margin: f64,
}

impl TryFrom<RawLossConfig> for LossConfig {
    type Error = Error;

    fn try_from(raw: RawLossConfig) -> Result<Self> {
        let (alpha, margin) = raw.loss_variant.defaults();
        let cfg = LossConfig {
            variant: raw.loss_variant,
            alpha: raw.alpha.unwrap_or(alpha),
            margin: raw.margin.unwrap_or(margin),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Default for LossConfig {
    fn default() -> Self {
        Self::new(LossVariant::Ordinary)
    }
}

impl LossConfig {
    /// A config with the variant's default hyper-parameters.
    pub fn new(variant: LossVariant) -> Self {
        let (alpha, margin) = variant.defaults();
        Self { variant, alpha, margin }
    }

    pub fn with(variant: LossVariant, alpha: f64, margin: f64) -> Result<Self> {
        let cfg = Self { variant, alpha, margin };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::validation("alpha", "must be finite and non-negative"));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::validation("margin", "must be finite and non-negative"));
        }
        Ok(())
    }

    /// Combines the two cross-entropies.
    pub fn evaluate(&self, l_pos: f64, l_neg: f64) -> LossValue {
        let (total, hinge_active) = match self.variant {
            LossVariant::Ordinary => (l_pos, false),
            LossVariant::Dc => (loss_dc(l_pos, l_neg, self.alpha), self.alpha > 0.0),
            LossVariant::Cn => (loss_cn(l_pos, l_neg, self.alpha, self.margin), l_neg < self.margin),
            LossVariant::Cc => (
                loss_cc(l_pos, l_neg, self.alpha, self.margin),
                l_pos + self.margin - l_neg > 0.0,
            ),
        };
        LossValue {
            total,
            l_pos,
            l_neg,
            hinge_active,
        }
    }

    /// `(d total / d l_pos, d total / d l_neg)`. At a hinge kink the
    /// inactive (zero) branch is taken.
    pub fn partials(&self, l_pos: f64, l_neg: f64) -> (f64, f64) {
        let a = self.alpha;
        match self.variant {
            LossVariant::Ordinary => (1.0, 0.0),
            LossVariant::Dc => (1.0, -a),
            LossVariant::Cn if l_neg < self.margin => (1.0, -a),
            LossVariant::Cn => (1.0, 0.0),
            LossVariant::Cc if l_pos + self.margin - l_neg > 0.0 => (1.0 + a, -a),
            LossVariant::Cc => (1.0, 0.0),
        }
    }
}

/// One sample's loss and its components. `hinge_active` is true when the
/// negative term currently contributes (always, for DC with `alpha > 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub l_pos: f64,
    pub l_neg: f64,
    pub hinge_active: bool,
}

pub fn loss_dc(l_pos: f64, l_neg: f64, alpha: f64) -> f64 {
    l_pos - alpha * l_neg
}

pub fn loss_cn(l_pos: f64, l_neg: f64, alpha: f64, margin: f64) -> f64 {
    l_pos + alpha * (margin - l_neg).max(0.0)
}

pub fn loss_cc(l_pos: f64, l_neg: f64, alpha: f64, margin: f64) -> f64 {
    l_pos + alpha * (l_pos + margin - l_neg).max(0.0)
}

/// Mean of `-log p(target[t])` over the non-PAD positions.
pub fn cross_entropy(scored: &ScoredOutput, target: &[usize]) -> Result<f64> {
    if target.len() != scored.target_len() {
        return Err(Error::Contract(format!(
            "target has {} tokens but the scores cover {}",
            target.len(),
            scored.target_len()
        )));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (t, &tok) in target.iter().enumerate() {
        if tok == PAD_ID {
            continue;
        }
        if tok >= scored.vocab_size {
            return Err(Error::Contract(format!("token id {tok} outside the vocabulary")));
        }
        sum -= scored.row(t)[tok];
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

/// Mean of per-sample totals.
pub fn batch_mean(values: &[LossValue]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().map(|v| v.total).sum::<f64>() / values.len() as f64
}

fn encode(triplet: &Triplet, vocab: &Vocabulary) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    (
        vocab.encode_source(&triplet.d),
        vocab.encode_target(&triplet.s_plus),
        vocab.encode_target(&triplet.s_minus),
    )
}

/// Scores `triplet` under `config` without computing gradients.
pub fn contrastive_objective(
    model: &dyn Seq2Seq,
    triplet: &Triplet,
    config: &LossConfig,
    vocab: &Vocabulary,
) -> Result<LossValue> {
    let (src, pos, neg) = encode(triplet, vocab);
    let l_pos = cross_entropy(&model.forward(&src, &pos)?, &pos[1..])?;
    let l_neg = cross_entropy(&model.forward(&src, &neg)?, &neg[1..])?;
    Ok(config.evaluate(l_pos, l_neg))
}

/// Scores `triplet` and returns the flat parameter gradient of the total.
pub fn contrastive_objective_with_grad(
    model: &dyn Seq2Seq,
    triplet: &Triplet,
    config: &LossConfig,
    vocab: &Vocabulary,
) -> Result<(LossValue, Vec<f64>)> {
    let (src, pos, neg) = encode(triplet, vocab);
    let weights = |ces: &[f64]| {
        let (dp, dn) = config.partials(ces[0], ces[1]);
        vec![dp, dn]
    };
    let (ces, grad) = model.cross_entropies_with_grad(&src, &[&pos, &neg], &weights)?;
    Ok((config.evaluate(ces[0], ces[1]), grad))
}

/// Ordinary loss on a `(document, summary)` pair that has no negative.
pub fn ordinary_with_grad(
    model: &dyn Seq2Seq,
    document: &str,
    summary: &str,
    vocab: &Vocabulary,
) -> Result<(f64, Vec<f64>)> {
    let src = vocab.encode_source(document);
    let tgt = vocab.encode_target(summary);
    let (ces, grad) = model.cross_entropies_with_grad(&src, &[&tgt], &|_| vec![1.0])?;
    Ok((ces[0], grad))
}
