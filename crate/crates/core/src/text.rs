//! Word tokenization and the closed vocabulary used by the seq2seq model.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub const PAD_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const EOS_ID: usize = 2;
pub const UNK_ID: usize = 3;

const RESERVED: [&str; 4] = [PAD, BOS, EOS, UNK];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Byte ranges of the words in `text`: maximal alphanumeric runs, with
/// apostrophes allowed between two alphanumeric characters ("don't").
pub fn word_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if !is_word_char(c) {
            continue;
        }
        let mut end = start + c.len_utf8();
        while let Some(&(i, c)) = chars.peek() {
            if is_word_char(c) {
                end = i + c.len_utf8();
                chars.next();
            } else if c == '\'' {
                let mut ahead = text[i + 1..].chars();
                match ahead.next() {
                    Some(n) if is_word_char(n) => {
                        chars.next();
                        end = i + 1;
                    }
                    _ => break,
                }
            } else {
                break;
            }
        }
        spans.push((start, end));
    }
    spans
}

/// Case-folded word and punctuation tokens. Whitespace separates tokens and
/// every other non-word character is a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let words = word_spans(text);
    let mut out = Vec::new();
    let mut cursor = 0;
    for (start, end) in words {
        push_punct(&text[cursor..start], &mut out);
        out.push(text[start..end].to_lowercase());
        cursor = end;
    }
    push_punct(&text[cursor..], &mut out);
    out
}

fn push_punct(gap: &str, out: &mut Vec<String>) {
    out.extend(
        gap.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| c.to_lowercase().collect::<String>()),
    );
}

/// Joins tokens back into text. Closing punctuation attaches to the
/// preceding token.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for tok in tokens {
        let tok = tok.as_ref();
        let attach = matches!(tok, "." | "," | "!" | "?" | ";" | ":" | ")" | "%");
        if !out.is_empty() && !attach && !out.ends_with('(') {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Dense token index with the four reserved entries at 0..4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary over every token of `texts`, ordered
    /// lexicographically after the reserved entries.
    pub fn build<'a, I>(texts: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut words = BTreeSet::new();
        for text in texts {
            words.extend(tokenize(text));
        }
        let tokens = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(words.into_iter().filter(|w| !RESERVED.contains(&w.as_str())))
            .collect();
        Self::from_tokens(tokens).expect("reserved tokens are placed once")
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        for (i, r) in RESERVED.iter().enumerate() {
            if tokens.get(i).map(String::as_str) != Some(*r) {
                return Err(Error::Contract(format!(
                    "vocabulary index {i} must hold reserved token {r}"
                )));
            }
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Contract(format!("duplicate vocabulary token `{t}`")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map(String::as_str).unwrap_or(UNK)
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        tokenize(text).iter().map(|t| self.id(t)).collect()
    }

    /// Decodes ids to text, dropping the framing tokens.
    pub fn decode(&self, ids: &[usize]) -> String {
        let toks: Vec<&str> = ids
            .iter()
            .filter(|&&i| i != PAD_ID && i != BOS_ID && i != EOS_ID)
            .map(|&i| self.token(i))
            .collect();
        detokenize(&toks)
    }

    /// Source framing: tokens followed by EOS.
    pub fn encode_source(&self, text: &str) -> Vec<usize> {
        let mut ids = self.encode(text);
        ids.push(EOS_ID);
        ids
    }

    /// Target framing: BOS, tokens, EOS.
    pub fn encode_target(&self, text: &str) -> Vec<usize> {
        let mut ids = vec![BOS_ID];
        ids.extend(self.encode(text));
        ids.push(EOS_ID);
        ids
    }
}

impl Serialize for Vocabulary {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.tokens.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocabulary {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let tokens = Vec::<String>::deserialize(d)?;
        Vocabulary::from_tokens(tokens).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_words_and_punctuation() {
        assert_eq!(tokenize("Milk is expired."), ["milk", "is", "expired", "."]);
        assert_eq!(
            tokenize("It doesn't match, sadly!"),
            ["it", "doesn't", "match", ",", "sadly", "!"]
        );
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn reserved_ids_are_fixed() {
        let v = Vocabulary::build(["milk is expired ."]);
        assert_eq!(v.id(PAD), PAD_ID);
        assert_eq!(v.id(BOS), BOS_ID);
        assert_eq!(v.id(EOS), EOS_ID);
        assert_eq!(v.id(UNK), UNK_ID);
        assert_eq!(v.encode("Milk is expired."), [v.id("milk"), v.id("is"), v.id("expired"), v.id(".")]);
        assert_eq!(v.encode("cheese"), [UNK_ID]);
    }

    #[test]
    fn rejects_missing_reserved_tokens() {
        assert!(Vocabulary::from_tokens(vec!["a".into()]).is_err());
        let mut toks: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        toks.push("a".into());
        toks.push("a".into());
        assert!(Vocabulary::from_tokens(toks).is_err());
    }

    #[test]
    fn framing() {
        let v = Vocabulary::build(["a b"]);
        assert_eq!(v.encode_target("a b"), [BOS_ID, v.id("a"), v.id("b"), EOS_ID]);
        assert_eq!(v.encode_source("a"), [v.id("a"), EOS_ID]);
        assert_eq!(v.decode(&v.encode_target("a b")), "a b");
    }

    proptest! {
        #[test]
        fn tokenize_detokenize_is_idempotent(s in "[a-zA-Z',.!? -]{0,40}") {
            let once = tokenize(&s);
            let twice = tokenize(&detokenize(&once));
            prop_assert_eq!(once, twice);
        }
    }
}
