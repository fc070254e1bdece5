//! Deterministic training over triplets, plus a finite-difference check of
//! the analytic gradients.

mod config;
mod gradcheck;
mod history;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{Optimizer, TrainConfig};
pub use gradcheck::{gradient_check, GRADCHECK_EPSILON, GRADCHECK_SAMPLES};
pub use history::{StepRecord, TrainHistory};

use crate::corruption::{SkipRecord, Triplet};
use crate::error::{Error, Result};
use crate::losses::{contrastive_objective_with_grad, ordinary_with_grad, LossValue};
use crate::model::Seq2Seq;
use crate::text::Vocabulary;

/// Training samples: triplets use the configured loss, samples without a
/// negative use the ordinary loss.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainData {
    pub triplets: Vec<Triplet>,
    pub plain: Vec<SkipRecord>,
}

impl TrainData {
    pub fn len(&self) -> usize {
        self.triplets.len() + self.plain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn sample_id(&self, i: usize) -> &str {
        match self.triplets.get(i) {
            Some(t) => &t.id,
            None => &self.plain[i - self.triplets.len()].id,
        }
    }
}

/// Callbacks invoked by [`train`].
pub trait TrainHooks<M> {
    fn on_step(&mut self, _record: &StepRecord) {}

    /// Called every `checkpoint_every` steps.
    fn on_checkpoint(&mut self, _step: usize, _model: &M) -> Result<()> {
        Ok(())
    }

    /// Supplies fresh data for `epoch` when negatives are resampled.
    fn resample(&mut self, _epoch: usize) -> Option<TrainData> {
        None
    }
}

pub struct NoHooks;

impl<M> TrainHooks<M> for NoHooks {}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

enum OptimizerState {
    Sgd,
    Adam { m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl OptimizerState {
    fn new(kind: Optimizer, n: usize) -> Self {
        match kind {
            Optimizer::Sgd => OptimizerState::Sgd,
            Optimizer::Adam => OptimizerState::Adam {
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    /// Turns a gradient into a parameter delta, in place.
    fn delta(&mut self, grad: &mut [f64], lr: f64) {
        match self {
            OptimizerState::Sgd => grad.iter_mut().for_each(|g| *g *= -lr),
            OptimizerState::Adam { m, v, t } => {
                *t += 1;
                let c1 = 1.0 - ADAM_BETA1.powi(*t);
                let c2 = 1.0 - ADAM_BETA2.powi(*t);
                for ((g, mi), vi) in grad.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()) {
                    *mi = ADAM_BETA1 * *mi + (1.0 - ADAM_BETA1) * *g;
                    *vi = ADAM_BETA2 * *vi + (1.0 - ADAM_BETA2) * *g * *g;
                    *g = -lr * (*mi / c1) / ((*vi / c2).sqrt() + ADAM_EPS);
                }
            }
        }
    }
}

fn clip(grad: &mut [f64], max_norm: f64) {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

/// Dropout seed for the `k`-th sample of `step`.
fn noise_seed(seed: u64, step: usize, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((step as u64) << 20) | k as u64);
    rng.next_u64()
}

/// Per-sample loss and gradient. Samples without a negative report
/// `l_neg = NaN`.
fn sample_loss<M: Seq2Seq>(
    model: &M,
    data: &TrainData,
    i: usize,
    config: &TrainConfig,
    vocab: &Vocabulary,
) -> Result<(LossValue, Vec<f64>)> {
    match data.triplets.get(i) {
        Some(t) => contrastive_objective_with_grad(model, t, &config.loss, vocab),
        None => {
            let s = &data.plain[i - data.triplets.len()];
            let (l, g) = ordinary_with_grad(model, &s.d, &s.s_plus, vocab)?;
            let value = LossValue {
                total: l,
                l_pos: l,
                l_neg: f64::NAN,
                hinge_active: false,
            };
            Ok((value, g))
        }
    }
}

/// Trains `model` in place with mini-batch gradient steps on the configured
/// loss. Epoch order is shuffled from `config.seed`; the run is a pure
/// function of the config, the data and the initial parameters.
pub fn train<M: Seq2Seq>(
    model: &mut M,
    data: &TrainData,
    vocab: &Vocabulary,
    config: &TrainConfig,
    hooks: &mut impl TrainHooks<M>,
) -> Result<TrainHistory> {
    config.validate()?;
    if model.precision() != config.precision {
        return Err(Error::Precondition(format!(
            "config asks for {:?} but the model runs in {:?}",
            config.precision,
            model.precision()
        )));
    }
    if model.vocab_size() != vocab.len() {
        return Err(Error::Precondition(format!(
            "model vocabulary size {} differs from the vocabulary ({})",
            model.vocab_size(),
            vocab.len()
        )));
    }
    if data.is_empty() {
        return Err(Error::Precondition("no training samples".into()));
    }

    let n_params = model.num_parameters();
    let mut optimizer = OptimizerState::new(config.optimizer, n_params);
    let mut history = TrainHistory::default();
    let mut current: std::borrow::Cow<'_, TrainData> = std::borrow::Cow::Borrowed(data);
    let mut step = 0;

    for epoch in 0..config.epochs {
        if epoch > 0 && config.resample_negatives {
            if let Some(fresh) = hooks.resample(epoch) {
                if fresh.is_empty() {
                    return Err(Error::Precondition("resampled data is empty".into()));
                }
                current = std::borrow::Cow::Owned(fresh);
            }
        }
        let data = current.as_ref();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64);
        order.shuffle(&mut rng);

        for batch in order.chunks(config.batch_size) {
            step += 1;
            let mut grad = vec![0.0; n_params];
            let (mut total, mut l_pos, mut l_neg) = (0.0, 0.0, 0.0);
            let (mut with_neg, mut active) = (0usize, 0usize);
            // Reduced in sample order, so the result does not depend on scheduling.
            for (k, &i) in batch.iter().enumerate() {
                model.set_noise_seed(Some(noise_seed(config.seed, step, k)));
                let outcome = sample_loss(model, data, i, config, vocab);
                model.set_noise_seed(None);
                let (value, g) = outcome?;
                if !value.total.is_finite() || g.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite {
                        step,
                        sample_id: data.sample_id(i).to_string(),
                    });
                }
                grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
                total += value.total;
                l_pos += value.l_pos;
                if !value.l_neg.is_nan() {
                    with_neg += 1;
                    l_neg += value.l_neg;
                    active += usize::from(value.hinge_active);
                }
            }
            let n = batch.len() as f64;
            grad.iter_mut().for_each(|g| *g /= n);
            if let Some(max) = config.max_grad_norm {
                clip(&mut grad, max);
            }
            optimizer.delta(&mut grad, config.learning_rate);
            model.update_parameters(&grad);

            let record = StepRecord {
                step,
                total: total / n,
                l_pos: l_pos / n,
                l_neg: if with_neg > 0 { l_neg / with_neg as f64 } else { f64::NAN },
                hinge_frac: if with_neg > 0 { active as f64 / with_neg as f64 } else { 0.0 },
            };
            hooks.on_step(&record);
            history.records.push(record);
            if config.checkpoint_every > 0 && step % config.checkpoint_every == 0 {
                hooks.on_checkpoint(step, model)?;
            }
        }
    }
    Ok(history)
}
