use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, Precision, Seq2Seq, Transformer};
use crate::autograd::Scalar;
use crate::error::{Error, Result};
use crate::text::Vocabulary;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTensor {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

/// Self-describing model file: configuration, vocabulary and every
/// parameter tensor keyed by layer name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub version: u32,
    pub precision: Precision,
    pub model_config: ModelConfig,
    pub vocabulary: Vocabulary,
    pub parameters: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn from_model<T: Scalar>(model: &Transformer<T>, vocabulary: &Vocabulary) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            precision: model.precision(),
            model_config: model.config().clone(),
            vocabulary: vocabulary.clone(),
            parameters: model
                .named_parameters()
                .map(|(name, rows, cols, values)| NamedTensor {
                    name: name.to_string(),
                    shape: [rows, cols],
                    values,
                })
                .collect(),
        }
    }

    pub fn to_model<T: Scalar>(&self) -> Result<Transformer<T>> {
        if self.vocabulary.len() != self.model_config.vocab_size {
            return Err(Error::Checkpoint(format!(
                "vocabulary has {} tokens but the model expects {}",
                self.vocabulary.len(),
                self.model_config.vocab_size
            )));
        }
        let mut model = Transformer::<T>::new(self.model_config.clone())?;
        let entries: Vec<_> = self
            .parameters
            .iter()
            .map(|t| (t.name.clone(), t.shape[0], t.shape[1], t.values.clone()))
            .collect();
        model.load_named(&entries)?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)
            .map_err(|e| Error::Checkpoint(format!("serialize: {e}")))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == CHECKPOINT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::Checkpoint(format!(
                    "unsupported checkpoint version {v} (expected {CHECKPOINT_VERSION})"
                )))
            }
            None => return Err(Error::Checkpoint("missing `version` field".to_string())),
        }
        serde_json::from_value(value)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }
}
