use std::collections::BTreeMap;
use std::path::Path;

use super::gazetteer::{phrase_key, PhraseIndex};
use crate::corpus::DefectEntry;
use crate::error::{Error, Result};

/// A defect phrase found in text (byte offsets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectMatch {
    /// Canonical (case-folded) phrase.
    pub phrase: String,
    pub start: usize,
    pub end: usize,
}

/// Recognizable defect phrases plus a symmetric, irreflexive antonym map.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectLexicon {
    markers: PhraseIndex<String>,
    antonyms: BTreeMap<String, String>,
}

impl DefectLexicon {
    /// Every phrase appearing in `markers` or in an antonym pair is a marker.
    pub fn new<'a>(
        markers: impl IntoIterator<Item = &'a str>,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self> {
        let mut index = PhraseIndex::default();
        let mut antonyms = BTreeMap::new();
        for m in markers {
            let key = phrase_key(m);
            if key.is_empty() {
                return Err(Error::validation("lexicon", "defect phrases must contain a word"));
            }
            index.insert(&key, key.clone());
        }
        for (a, b) in pairs {
            let (ka, kb) = (phrase_key(a), phrase_key(b));
            if ka.is_empty() || kb.is_empty() {
                return Err(Error::validation("lexicon", "antonyms must contain a word"));
            }
            if ka == kb {
                return Err(Error::validation("lexicon", format!("`{a}` cannot be its own antonym")));
            }
            for (x, y) in [(&ka, &kb), (&kb, &ka)] {
                if let Some(prev) = antonyms.insert(x.clone(), y.clone()) {
                    if &prev != y {
                        return Err(Error::validation(
                            "lexicon",
                            format!("`{x}` has two antonyms: `{prev}` and `{y}`"),
                        ));
                    }
                }
                index.insert(x, x.clone());
            }
        }
        if index.len() == 0 {
            return Err(Error::validation("lexicon", "must not be empty"));
        }
        Ok(Self {
            markers: index,
            antonyms,
        })
    }

    pub fn from_pool(pool: &[DefectEntry]) -> Result<Self> {
        Self::new(
            pool.iter().map(|d| d.phrase.as_str()),
            pool.iter()
                .filter_map(|d| d.antonym.as_deref().map(|a| (d.phrase.as_str(), a))),
        )
    }

    pub fn antonym(&self, phrase: &str) -> Option<&str> {
        self.antonyms.get(&phrase_key(phrase)).map(String::as_str)
    }

    pub fn is_marker(&self, phrase: &str) -> bool {
        self.markers.get(phrase).is_some()
    }

    /// Defect phrases in `text`, left to right; the longest phrase wins at
    /// each position.
    pub fn find(&self, text: &str) -> Vec<DefectMatch> {
        self.markers
            .find_all(text)
            .into_iter()
            .map(|(start, end, phrase)| DefectMatch { phrase, start, end })
            .collect()
    }

    /// Parses one entry per line: `phrase` alone, or `phrase<TAB>antonym`.
    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let mut singles = Vec::new();
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [w] => singles.push(w.trim()),
                [a, b] => pairs.push((a.trim(), b.trim())),
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: "expected `phrase` or `phrase<TAB>antonym`".to_string(),
                    })
                }
            }
        }
        Self::new(singles, pairs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text, path)
    }

    /// Antonym pairs (each once, alphabetical first), then phrases without an antonym.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (a, b) in &self.antonyms {
            if a < b {
                out.push_str(&format!("{a}\t{b}\n"));
            }
        }
        let mut singles: Vec<&String> = self
            .markers
            .keys()
            .filter(|k| !self.antonyms.contains_key(*k))
            .collect();
        singles.sort();
        for s in singles {
            out.push_str(s);
            out.push('\n');
        }
        out
    }
}
