//! Synthetic customer-feedback corpus with gold factual annotations.

mod generate;
pub(crate) mod io;
mod spec;

use serde::{Deserialize, Serialize};

pub use generate::generate_corpus;
pub use io::{load_corpus, load_eval_items, save_corpus, EvalItem, GoldLabels};
pub use spec::{CorpusSpec, DefectEntry};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntityType {
    Product,
    Component,
    Brand,
}

impl EntityType {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Product => "PRODUCT",
            EntityType::Component => "COMPONENT",
            EntityType::Brand => "BRAND",
        }
    }
}

impl std::str::FromStr for EntityType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PRODUCT" => Ok(EntityType::Product),
            "COMPONENT" => Ok(EntityType::Component),
            "BRAND" => Ok(EntityType::Brand),
            other => Err(format!("unknown entity type `{other}`")),
        }
    }
}

impl std::fmt::Display for EntityType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DefectPolarity {
    Affirmed,
    Negated,
}

/// A feedback document, its reference summary and the gold facts the
/// summary must preserve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledExample {
    pub id: String,
    pub source: String,
    pub reference: String,
    pub primary_entity: String,
    pub entity_type: EntityType,
    pub distractors: Vec<(String, EntityType)>,
    pub defect_phrase: String,
    pub defect_polarity: DefectPolarity,
}

impl LabeledExample {
    /// Checks the structural invariants by string search. Returns the first
    /// violated one.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if !self.source.contains(&self.primary_entity) {
            return Err(format!("source lacks primary entity `{}`", self.primary_entity));
        }
        for (d, _) in &self.distractors {
            if !self.source.contains(d.as_str()) {
                return Err(format!("source lacks distractor `{d}`"));
            }
        }
        if !self.reference.contains(&self.primary_entity) {
            return Err(format!("reference lacks primary entity `{}`", self.primary_entity));
        }
        if !self.reference.contains(&self.defect_phrase) {
            return Err(format!("reference lacks defect phrase `{}`", self.defect_phrase));
        }
        let negated = self.reference.contains(&format!("not {}", self.defect_phrase));
        match (self.defect_polarity, negated) {
            (DefectPolarity::Negated, false) => {
                Err("NEGATED example without `not` before the defect phrase".to_string())
            }
            (DefectPolarity::Affirmed, true) => {
                Err("AFFIRMED example with `not` before the defect phrase".to_string())
            }
            _ => Ok(()),
        }
    }
}

/// Shuffles with `seed` and puts the first `floor(train_fraction * n)`
/// examples in the training split; the remainder is the test split.
pub fn split_corpus<T: Clone>(
    examples: &[T],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::validation(
            "train_fraction",
            format!("must lie strictly between 0 and 1, got {train_fraction}"),
        ));
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // The tolerance keeps fractions such as 2000/2300 from flooring one short.
    let n_train = (train_fraction * examples.len() as f64 + 1e-9).floor() as usize;
    let train = order[..n_train].iter().map(|&i| examples[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| examples[i].clone()).collect();
    Ok((train, test))
}
