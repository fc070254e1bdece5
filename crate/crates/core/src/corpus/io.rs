use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{DefectPolarity, EntityType, LabeledExample};
use crate::error::{Error, Result};

const REQUIRED: [&str; 8] = [
    "id",
    "source",
    "reference",
    "primary_entity",
    "entity_type",
    "distractors",
    "defect_phrase",
    "defect_polarity",
];

/// Writes one JSON object per line.
pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| Error::Contract(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a JSONL file, validating that each object carries `required` keys
/// before deserializing it. Blank lines are skipped.
pub(crate) fn read_jsonl<T: DeserializeOwned>(path: &Path, required: &[&str]) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: "expected a JSON object".to_string(),
        })?;
        if let Some(field) = required.iter().find(|k| !obj.contains_key(**k)) {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line: line_no,
                field: field.to_string(),
            });
        }
        items.push(serde_json::from_value(value).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?);
    }
    Ok(items)
}

pub fn save_corpus(examples: &[LabeledExample], path: &Path) -> Result<()> {
    write_jsonl(path, examples)
}

pub fn load_corpus(path: &Path) -> Result<Vec<LabeledExample>> {
    read_jsonl(path, &REQUIRED)
}

/// Gold facts needed to judge a generated summary.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldLabels {
    pub primary_entity: String,
    pub entity_type: EntityType,
    pub distractors: Vec<(String, EntityType)>,
    pub defect_phrase: String,
    pub defect_polarity: DefectPolarity,
}

/// An evaluation input: always a source and reference, with gold labels
/// only when the line carried them.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalItem {
    pub id: String,
    pub source: String,
    pub reference: String,
    pub gold: Option<GoldLabels>,
}

impl EvalItem {
    pub fn labeled(&self) -> Option<LabeledExample> {
        self.gold.as_ref().map(|g| LabeledExample {
            id: self.id.clone(),
            source: self.source.clone(),
            reference: self.reference.clone(),
            primary_entity: g.primary_entity.clone(),
            entity_type: g.entity_type,
            distractors: g.distractors.clone(),
            defect_phrase: g.defect_phrase.clone(),
            defect_polarity: g.defect_polarity,
        })
    }
}

impl From<LabeledExample> for EvalItem {
    fn from(ex: LabeledExample) -> Self {
        EvalItem {
            id: ex.id,
            source: ex.source,
            reference: ex.reference,
            gold: Some(GoldLabels {
                primary_entity: ex.primary_entity,
                entity_type: ex.entity_type,
                distractors: ex.distractors,
                defect_phrase: ex.defect_phrase,
                defect_polarity: ex.defect_polarity,
            }),
        }
    }
}

#[derive(serde::Deserialize)]
struct LooseItem {
    id: String,
    source: String,
    reference: String,
    #[serde(flatten)]
    rest: serde_json::Map<String, serde_json::Value>,
}

/// Loads `id`/`source`/`reference` lines; lines that carry every gold field
/// become labeled items, the rest unlabeled.
pub fn load_eval_items(path: &Path) -> Result<Vec<EvalItem>> {
    let loose: Vec<LooseItem> = read_jsonl(path, &["id", "source", "reference"])?;
    loose
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let gold_keys = &REQUIRED[3..];
            let gold = if gold_keys.iter().all(|k| item.rest.contains_key(*k)) {
                let mut obj = item.rest.clone();
                obj.insert("id".into(), item.id.clone().into());
                obj.insert("source".into(), item.source.clone().into());
                obj.insert("reference".into(), item.reference.clone().into());
                let ex: LabeledExample =
                    serde_json::from_value(obj.into()).map_err(|e| Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                EvalItem::from(ex).gold
            } else {
                None
            };
            Ok(EvalItem {
                id: item.id,
                source: item.source,
                reference: item.reference,
                gold,
            })
        })
        .collect()
}
