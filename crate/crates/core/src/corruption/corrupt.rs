use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gazetteer::{byte_offset, char_offset, EntityTagger};
use super::lexicon::{DefectLexicon, DefectMatch};
use super::top::TopEntities;
use crate::error::{Error, Result};
use crate::text::word_spans;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CorruptionKind {
    EntitySwap,
    NegationAdd,
    NegationRemove,
    AntonymSwap,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 4] = [
        CorruptionKind::EntitySwap,
        CorruptionKind::NegationAdd,
        CorruptionKind::NegationRemove,
        CorruptionKind::AntonymSwap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorruptionKind::EntitySwap => "ENTITY_SWAP",
            CorruptionKind::NegationAdd => "NEGATION_ADD",
            CorruptionKind::NegationRemove => "NEGATION_REMOVE",
            CorruptionKind::AntonymSwap => "ANTONYM_SWAP",
        }
    }
}

/// A single contiguous substitution; `offset` counts characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edit {
    pub original: String,
    pub replacement: String,
    pub offset: usize,
}

impl Edit {
    fn at_bytes(text: &str, start: usize, end: usize, replacement: String) -> Self {
        Edit {
            original: text[start..end].to_string(),
            replacement,
            offset: char_offset(text, start),
        }
    }

    /// Applies the edit, checking that `original` sits at `offset`.
    pub fn apply(&self, text: &str) -> Result<String> {
        let start = byte_offset(text, self.offset);
        let end = start + self.original.len();
        if text.get(start..end) != Some(self.original.as_str()) {
            return Err(Error::Contract(format!(
                "edit expects `{}` at offset {}",
                self.original, self.offset
            )));
        }
        Ok(format!("{}{}{}", &text[..start], self.replacement, &text[end..]))
    }
}

/// Where an entity replacement was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplacementOrigin {
    Document,
    TopEntities,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corruption {
    pub kind: CorruptionKind,
    pub edit: Edit,
    pub s_minus: String,
    pub origin: Option<ReplacementOrigin>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NoCandidate {
    #[error("summary names no entity")]
    NoEntity,
    #[error("no same-type replacement for `{0}` in the document or top entities")]
    NoAlternative(String),
    #[error("summary contains no defect phrase")]
    NoDefect,
}

fn starts_upper(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

fn with_first(s: &str, upper: bool) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if upper => c.to_uppercase().chain(chars).collect(),
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn finish(s_plus: &str, kind: CorruptionKind, edit: Edit, origin: Option<ReplacementOrigin>) -> Corruption {
    let s_minus = edit.apply(s_plus).expect("edit built from this text");
    Corruption {
        kind,
        edit,
        s_minus,
        origin,
    }
}

/// Replaces one entity mention of `s_plus` with a different entity of the
/// same type, preferring mentions in `document` and falling back to the
/// corpus-wide top entities.
pub fn corrupt_entity<R: Rng + ?Sized>(
    s_plus: &str,
    document: &str,
    tagger: &impl EntityTagger,
    top: &TopEntities,
    rng: &mut R,
) -> std::result::Result<Corruption, NoCandidate> {
    let spans = tagger.tag(s_plus);
    if spans.is_empty() {
        return Err(NoCandidate::NoEntity);
    }
    let target = &spans[rng.gen_range(0..spans.len())];
    let original = target.surface.to_lowercase();

    let mut in_doc: Vec<String> = Vec::new();
    for span in tagger.tag(document) {
        let s = span.surface.to_lowercase();
        if span.entity_type == target.entity_type && s != original && !in_doc.contains(&s) {
            in_doc.push(s);
        }
    }
    let (candidates, origin) = if in_doc.is_empty() {
        let from_top: Vec<String> = top
            .of_type(target.entity_type)
            .filter(|s| *s != original)
            .map(str::to_string)
            .collect();
        (from_top, ReplacementOrigin::TopEntities)
    } else {
        (in_doc, ReplacementOrigin::Document)
    };
    if candidates.is_empty() {
        return Err(NoCandidate::NoAlternative(target.surface.clone()));
    }
    let replacement = &candidates[rng.gen_range(0..candidates.len())];
    let start = byte_offset(s_plus, target.start);
    let end = byte_offset(s_plus, target.end);
    let edit = Edit::at_bytes(s_plus, start, end, with_first(replacement, starts_upper(&target.surface)));
    Ok(finish(s_plus, CorruptionKind::EntitySwap, edit, Some(origin)))
}

/// Inserts `not` before the defect phrase, or removes an immediately
/// preceding `not`. Capitalization of the sentence start is preserved.
pub fn toggle_negation(text: &str, m: &DefectMatch) -> Corruption {
    let prev = word_spans(&text[..m.start]).last().copied();
    let negated = prev.filter(|&(s, e)| {
        text[s..e].eq_ignore_ascii_case("not")
            && e < m.start
            && text[e..m.start].chars().all(char::is_whitespace)
    });
    let phrase = &text[m.start..m.end];
    match negated {
        Some((s, _)) if starts_upper(&text[s..]) => {
            let edit = Edit::at_bytes(text, s, m.end, with_first(phrase, true));
            finish(text, CorruptionKind::NegationRemove, edit, None)
        }
        Some((s, _)) => {
            let edit = Edit::at_bytes(text, s, m.start, String::new());
            finish(text, CorruptionKind::NegationRemove, edit, None)
        }
        None if starts_upper(phrase) => {
            let edit = Edit::at_bytes(text, m.start, m.end, format!("Not {}", with_first(phrase, false)));
            finish(text, CorruptionKind::NegationAdd, edit, None)
        }
        None => {
            let edit = Edit::at_bytes(text, m.start, m.start, "not ".to_string());
            finish(text, CorruptionKind::NegationAdd, edit, None)
        }
    }
}

/// Replaces the defect phrase with its antonym, keeping first-letter case.
pub fn swap_antonym(text: &str, m: &DefectMatch, antonym: &str) -> Corruption {
    let phrase = &text[m.start..m.end];
    let edit = Edit::at_bytes(text, m.start, m.end, with_first(antonym, starts_upper(phrase)));
    finish(text, CorruptionKind::AntonymSwap, edit, None)
}

/// Flips the leftmost defect description of `s_plus`: a negation toggle or,
/// when the phrase has an antonym, an antonym swap, chosen uniformly.
pub fn corrupt_defect_description<R: Rng + ?Sized>(
    s_plus: &str,
    lexicon: &DefectLexicon,
    rng: &mut R,
) -> std::result::Result<Corruption, NoCandidate> {
    let m = lexicon.find(s_plus).into_iter().next().ok_or(NoCandidate::NoDefect)?;
    match lexicon.antonym(&m.phrase) {
        Some(antonym) if rng.gen_bool(0.5) => Ok(swap_antonym(s_plus, &m, antonym)),
        _ => Ok(toggle_negation(s_plus, &m)),
    }
}
