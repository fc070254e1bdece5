use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::EntityType;
use crate::error::{Error, Result};
use crate::text::word_spans;

/// An entity mention. Offsets are character offsets into the tagged text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub surface: String,
    pub entity_type: EntityType,
    pub start: usize,
    pub end: usize,
}

/// Anything that can find typed entity mentions in text.
pub trait EntityTagger {
    fn tag(&self, text: &str) -> Vec<EntitySpan>;
}

pub(crate) fn char_offset(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

pub(crate) fn byte_offset(text: &str, chars: usize) -> usize {
    text.char_indices()
        .nth(chars)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

/// Word-sequence dictionary matcher shared by the gazetteer and the defect
/// lexicon: matches are case-insensitive, aligned to word boundaries, and
/// the longest entry wins at each position.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PhraseIndex<V> {
    entries: HashMap<String, V>,
    max_words: usize,
}

impl<V> Default for PhraseIndex<V> {
    fn default() -> Self {
        Self {
            entries: HashMap::new(),
            max_words: 0,
        }
    }
}

pub(crate) fn phrase_key(surface: &str) -> String {
    word_spans(surface)
        .into_iter()
        .map(|(s, e)| surface[s..e].to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

impl<V: Clone> PhraseIndex<V> {
    pub fn insert(&mut self, surface: &str, value: V) -> Option<V> {
        let key = phrase_key(surface);
        self.max_words = self.max_words.max(key.split(' ').count());
        self.entries.insert(key, value)
    }

    pub fn get(&self, surface: &str) -> Option<&V> {
        self.entries.get(&phrase_key(surface))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    /// Non-overlapping `(byte_start, byte_end, value)` matches, left to right.
    pub fn find_all(&self, text: &str) -> Vec<(usize, usize, V)> {
        let words = word_spans(text);
        let lowered: Vec<String> = words.iter().map(|&(s, e)| text[s..e].to_lowercase()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < words.len() {
            let mut matched = false;
            for n in (1..=self.max_words.min(words.len() - i)).rev() {
                let key = lowered[i..i + n].join(" ");
                if let Some(v) = self.entries.get(&key) {
                    out.push((words[i].0, words[i + n - 1].1, v.clone()));
                    i += n;
                    matched = true;
                    break;
                }
            }
            if !matched {
                i += 1;
            }
        }
        out
    }
}

/// Surface-form dictionary used as a deterministic entity tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct Gazetteer {
    index: PhraseIndex<EntityType>,
}

impl Gazetteer {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, EntityType)>,
        S: AsRef<str>,
    {
        let mut index = PhraseIndex::default();
        for (surface, ty) in entries {
            let surface = surface.as_ref();
            if phrase_key(surface).is_empty() {
                return Err(Error::validation("gazetteer", "surface forms must contain a word"));
            }
            if let Some(prev) = index.insert(surface, ty) {
                if prev != ty {
                    return Err(Error::validation(
                        "gazetteer",
                        format!("`{surface}` listed as both {prev} and {ty}"),
                    ));
                }
            }
        }
        if index.len() == 0 {
            return Err(Error::validation("gazetteer", "must not be empty"));
        }
        Ok(Self { index })
    }

    pub fn entity_type(&self, surface: &str) -> Option<EntityType> {
        self.index.get(surface).copied()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.len() == 0
    }

    /// Parses `surface<TAB>type` lines. Blank lines and `#` comments are ignored.
    pub fn from_tsv(text: &str, path: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (surface, ty) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `surface<TAB>type`".to_string()))?;
            let ty: EntityType = ty.parse().map_err(parse_err)?;
            entries.push((surface.to_string(), ty));
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text, path)
    }

    /// Entries sorted by surface, one `surface<TAB>type` per line.
    pub fn to_tsv(&self) -> String {
        let mut keys: Vec<&String> = self.index.keys().collect();
        keys.sort();
        keys.into_iter()
            .map(|k| format!("{k}\t{}\n", self.index.get(k).expect("key from index")))
            .collect()
    }
}

impl EntityTagger for Gazetteer {
    fn tag(&self, text: &str) -> Vec<EntitySpan> {
        self.index
            .find_all(text)
            .into_iter()
            .map(|(s, e, ty)| EntitySpan {
                surface: text[s..e].to_string(),
                entity_type: ty,
                start: char_offset(text, s),
                end: char_offset(text, e),
            })
            .collect()
    }
}

/// Tags `text` with any tagger.
pub fn tag_entities(text: &str, tagger: &impl EntityTagger) -> Vec<EntitySpan> {
    tagger.tag(text)
}
