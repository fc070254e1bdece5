use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EntityType;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectEntry {
    pub phrase: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antonym: Option<String>,
}

impl DefectEntry {
    fn new(phrase: &str, antonym: Option<&str>) -> Self {
        Self {
            phrase: phrase.to_string(),
            antonym: antonym.map(str::to_string),
        }
    }
}

/// Parameters of the synthetic corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSpec {
    pub n_examples: usize,
    pub entity_pool: Vec<(String, EntityType)>,
    pub defect_pool: Vec<DefectEntry>,
    pub negated_fraction: f64,
    /// Inclusive bounds on the number of distractor entities per document.
    pub distractor_range: [usize; 2],
    pub seed: u64,
}

const PRODUCTS: &[&str] = &[
    "mouse", "laptop", "phone", "tv", "keyboard", "monitor", "headset", "printer", "tablet",
    "camera", "speaker", "blender", "toaster", "kettle", "lamp", "backpack", "jacket", "milk",
    "cheese", "coffee", "router", "watch", "drill", "vacuum",
];

const COMPONENTS: &[&str] = &[
    "screen", "battery", "charger", "cable", "remote", "lid", "strap", "zipper", "lens", "button",
    "adapter", "handle",
];

impl Default for CorpusSpec {
    fn default() -> Self {
        let entity_pool = PRODUCTS
            .iter()
            .map(|s| (s.to_string(), EntityType::Product))
            .chain(COMPONENTS.iter().map(|s| (s.to_string(), EntityType::Component)))
            .collect();
        let defect_pool = vec![
            DefectEntry::new("broken", None),
            DefectEntry::new("cracked", None),
            DefectEntry::new("scratched", None),
            DefectEntry::new("defective", None),
            DefectEntry::new("faulty", None),
            DefectEntry::new("damaged", None),
            DefectEntry::new("expired", Some("fresh")),
            DefectEntry::new("opened", Some("sealed")),
            DefectEntry::new("used", Some("new")),
            DefectEntry::new("dirty", Some("clean")),
            DefectEntry::new("bad", Some("good")),
            DefectEntry::new("loose", Some("tight")),
        ];
        Self {
            n_examples: 1000,
            entity_pool,
            defect_pool,
            negated_fraction: 0.4,
            distractor_range: [1, 3],
            seed: 0,
        }
    }
}

impl CorpusSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: CorpusSpec = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<corpus spec>".into(),
            line: e
                .span()
                .map(|s| text[..s.start].matches('\n').count() + 1)
                .unwrap_or(0),
            message: e.message().to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_examples == 0 {
            return Err(Error::validation("n_examples", "must be positive"));
        }
        if self.entity_pool.is_empty() {
            return Err(Error::validation("entity_pool", "must not be empty"));
        }
        let mut seen = HashSet::new();
        for (surface, _) in &self.entity_pool {
            if surface.trim().is_empty() || surface != &surface.to_lowercase() {
                return Err(Error::validation(
                    "entity_pool",
                    format!("surfaces must be non-empty lowercase, got `{surface}`"),
                ));
            }
            if !seen.insert(surface.as_str()) {
                return Err(Error::validation("entity_pool", format!("duplicate `{surface}`")));
            }
        }
        if self.defect_pool.is_empty() {
            return Err(Error::validation("defect_pool", "must not be empty"));
        }
        for d in &self.defect_pool {
            if d.phrase.trim().is_empty() {
                return Err(Error::validation("defect_pool", "phrases must be non-empty"));
            }
            if d.antonym.as_deref() == Some(d.phrase.as_str()) {
                return Err(Error::validation(
                    "defect_pool",
                    format!("`{}` cannot be its own antonym", d.phrase),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.negated_fraction) {
            return Err(Error::validation(
                "negated_fraction",
                format!("must lie in [0, 1], got {}", self.negated_fraction),
            ));
        }
        let [lo, hi] = self.distractor_range;
        if lo < 1 {
            return Err(Error::validation(
                "distractor_range",
                "lower bound must be at least 1",
            ));
        }
        if lo > hi {
            return Err(Error::validation(
                "distractor_range",
                format!("lower bound {lo} exceeds upper bound {hi}"),
            ));
        }
        if hi >= self.entity_pool.len() {
            return Err(Error::validation(
                "distractor_range",
                format!(
                    "upper bound {hi} needs at least {} distinct entities in entity_pool",
                    hi + 1
                ),
            ));
        }
        Ok(())
    }

    pub fn antonym_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.defect_pool
            .iter()
            .filter_map(|d| d.antonym.as_deref().map(|a| (d.phrase.as_str(), a)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        CorpusSpec::default().validate().unwrap();
    }

    #[test]
    fn parses_flat_toml() {
        let spec = CorpusSpec::from_toml_str(
            r#"
n_examples = 5
seed = 7
negated_fraction = 0.0
distractor_range = [1, 1]
entity_pool = [["mouse", "PRODUCT"], ["laptop", "PRODUCT"]]
defect_pool = [{ phrase = "broken" }, { phrase = "opened", antonym = "sealed" }]
"#,
        )
        .unwrap();
        assert_eq!(spec.n_examples, 5);
        assert_eq!(spec.entity_pool.len(), 2);
        assert_eq!(spec.antonym_pairs().collect::<Vec<_>>(), [("opened", "sealed")]);
    }

    #[test]
    fn out_of_range_fields_are_named() {
        let cases = [
            ("negated_fraction = 1.5", "negated_fraction"),
            ("n_examples = 0", "n_examples"),
            ("distractor_range = [0, 2]", "distractor_range"),
            ("distractor_range = [3, 2]", "distractor_range"),
            ("entity_pool = []", "entity_pool"),
            ("defect_pool = []", "defect_pool"),
        ];
        for (text, field) in cases {
            match CorpusSpec::from_toml_str(text) {
                Err(Error::Validation { field: f, .. }) => assert_eq!(f, field, "{text}"),
                other => panic!("{text}: expected validation error, got {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            CorpusSpec::from_toml_str("n_exmples = 3"),
            Err(Error::Parse { .. })
        ));
    }
}
