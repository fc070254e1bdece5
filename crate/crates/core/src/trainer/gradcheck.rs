use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corruption::Triplet;
use crate::error::{Error, Result};
use crate::losses::{contrastive_objective, contrastive_objective_with_grad, LossConfig};
use crate::model::{Precision, Seq2Seq};
use crate::text::Vocabulary;

pub const GRADCHECK_EPSILON: f64 = 1e-4;
pub const GRADCHECK_SAMPLES: usize = 200;

/// Errors below this magnitude are compared absolutely.
const ABS_FLOOR: f64 = 1e-8;

/// Compares analytic gradients of the objective on `triplet` against
/// fourth-order central differences on `n_sampled` randomly chosen parameters and
/// returns the largest relative error. Parameters are restored afterwards.
pub fn gradient_check<M: Seq2Seq>(
    model: &mut M,
    triplet: &Triplet,
    loss: &LossConfig,
    vocab: &Vocabulary,
    epsilon: f64,
    n_sampled: usize,
    seed: u64,
) -> Result<f64> {
    if model.precision() != Precision::F64 {
        return Err(Error::Precondition("gradient checks need an F64 model".into()));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::validation("epsilon", "must be positive"));
    }
    let (_, analytic) = contrastive_objective_with_grad(model, triplet, loss, vocab)?;
    let original = model.parameters();
    let n = original.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, n, n_sampled.min(n));

    let mut params = original.clone();
    let mut worst: f64 = 0.0;
    let eval = |params: &[f64], model: &mut M| -> Result<f64> {
        model.set_parameters(params);
        Ok(contrastive_objective(model, triplet, loss, vocab)?.total)
    };
    for i in picks.iter() {
        let mut at = |k: f64| {
            params[i] = original[i] + k * epsilon;
            eval(&params, model)
        };
        let (p1, m1, p2, m2) = (at(1.0)?, at(-1.0)?, at(2.0)?, at(-2.0)?);
        params[i] = original[i];
        let numeric = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * epsilon);
        let diff = (analytic[i] - numeric).abs();
        let scale = analytic[i].abs().max(numeric.abs());
        let err = if scale < ABS_FLOOR { diff } else { diff / scale };
        worst = worst.max(err);
    }
    model.set_parameters(&original);
    Ok(worst)
}
